#pragma once

#include "skyshield/event.hpp"
#include "skyshield/types.hpp"

namespace skyshield {

/// Exponentially decayed image of per-pixel last-event timestamps:
/// S(x,y) = exp(-(t_ref - T(x,y)) / tau), 0 where no event has occurred.
struct TimeSurface {
  std::uint16_t width = 0;
  std::uint16_t height = 0;
  ImageD values;  // height x width, each in [0, 1]
  std::uint64_t t_ref_us = 0;
  double tau_us = 0;
};

enum class PolarityMode { merged, separate };

/// Positive- and negative-polarity surfaces sharing t_ref and tau.
struct TimeSurfacePair {
  TimeSurface pos;
  TimeSurface neg;
};

/// Builds the polarity-merged surface from events with t <= t_ref.
TimeSurface build_time_surface(const EventRecording& rec, std::uint64_t t_ref_us,
                               double tau_us);

/// Builds one surface per polarity (2-channel network input).
TimeSurfacePair build_time_surface_split(const EventRecording& rec,
                                         std::uint64_t t_ref_us, double tau_us);

}  // namespace skyshield
