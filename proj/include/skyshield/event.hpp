#pragma once

#include <cstdint>
#include <vector>

#include "skyshield/errors.hpp"

namespace skyshield {

/// One asynchronous brightness-change record.
/// Polarity is +1 (brightness increase) or -1 (decrease).
struct Event {
  std::uint64_t t = 0;  // microseconds
  std::uint16_t x = 0;
  std::uint16_t y = 0;
  std::int8_t polarity = 1;

  friend bool operator==(const Event&, const Event&) = default;
};

/// Ordered event sequence plus sensor geometry. Immutable by convention
/// after construction; validate() checks the container invariants.
struct EventRecording {
  std::uint16_t width = 0;
  std::uint16_t height = 0;
  std::vector<Event> events;  // non-decreasing in t

  std::uint64_t duration_us() const {
    return events.size() <= 1 ? 0 : events.back().t - events.front().t;
  }

  /// Throws OutOfBounds / NonMonotonicTime / RejectedInvariant on violation.
  void validate() const;

  friend bool operator==(const EventRecording&, const EventRecording&) = default;
};

/// Events with t_start <= t < t_end, order preserved, same geometry.
EventRecording slice_by_time(const EventRecording& rec, std::uint64_t t_start,
                             std::uint64_t t_end);

}  // namespace skyshield
