#include "skyshield/event.hpp"

#include <algorithm>
#include <string>

namespace skyshield {

void EventRecording::validate() const {
  std::uint64_t prev_t = 0;
  bool first = true;
  for (std::size_t i = 0; i < events.size(); ++i) {
    const Event& e = events[i];
    if (e.x >= width || e.y >= height) {
      raise(ErrorCode::OutOfBounds,
            "event " + std::to_string(i) + " at (" + std::to_string(e.x) +
                "," + std::to_string(e.y) + ") outside " +
                std::to_string(width) + "x" + std::to_string(height));
    }
    if (e.polarity != 1 && e.polarity != -1) {
      raise(ErrorCode::RejectedInvariant,
            "event " + std::to_string(i) + " has polarity " +
                std::to_string(int(e.polarity)));
    }
    if (!first && e.t < prev_t) {
      raise(ErrorCode::NonMonotonicTime,
            "timestamp decreases at event " + std::to_string(i));
    }
    prev_t = e.t;
    first = false;
  }
}

EventRecording slice_by_time(const EventRecording& rec, std::uint64_t t_start,
                             std::uint64_t t_end) {
  if (t_start > t_end) {
    raise(ErrorCode::InvalidWindow, "t_start > t_end");
  }
  auto lo = std::lower_bound(rec.events.begin(), rec.events.end(), t_start,
                             [](const Event& e, std::uint64_t t) { return e.t < t; });
  auto hi = std::lower_bound(lo, rec.events.end(), t_end,
                             [](const Event& e, std::uint64_t t) { return e.t < t; });
  EventRecording out;
  out.width = rec.width;
  out.height = rec.height;
  out.events.assign(lo, hi);
  return out;
}

}  // namespace skyshield
