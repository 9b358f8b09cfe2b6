#pragma once

#include "skyshield/event.hpp"

namespace skyshield {

/// Spatio-temporal contrast filter parameters. An event is kept when at
/// least min_support other events fall within Chebyshev distance
/// radius_px of it and inside the temporal support window.
struct StcParams {
  int radius_px = 1;               // >= 1
  std::uint64_t window_us = 5000;  // > 0
  int min_support = 1;             // >= 1

  void validate() const;
};

enum class StcCausality {
  causal,         // support in (t - window, t], streaming order
  bidirectional,  // support in [t - window, t + window], offline
};

/// Keeps corroborated events, preserving order and geometry. The output is
/// a sub-multiset of the input; support is counted over the raw input
/// stream, so discarded events still corroborate their neighbours.
EventRecording stc_filter(const EventRecording& rec, const StcParams& params,
                          StcCausality causality = StcCausality::causal);

/// Per-event keep decisions in stream order (stc_filter is the compaction
/// of this vector). Exposed for label-aware retention measurements.
std::vector<bool> stc_keep_flags(const EventRecording& rec, const StcParams& params,
                                 StcCausality causality = StcCausality::causal);

}  // namespace skyshield
