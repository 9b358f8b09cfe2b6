#pragma once

#include "skyshield/stc_filter.hpp"
#include "skyshield/time_surface.hpp"

namespace skyshield {

/// Front-end shared by training, evaluation and the baselines:
/// window slice -> STC filter -> time surface(s) at t_ref.
struct PreprocessParams {
  bool stc_enabled = true;
  StcParams stc;
  StcCausality causality = StcCausality::causal;
  double tau_us = 30000.0;
  std::uint64_t window_us = 33000;  // 0 = keep full history
  PolarityMode polarity = PolarityMode::separate;
};

EventRecording preprocess_events(const EventRecording& rec, std::uint64_t t_ref_us,
                                 const PreprocessParams& params);

TimeSurface preprocessed_surface(const EventRecording& rec, std::uint64_t t_ref_us,
                                 const PreprocessParams& params);

TimeSurfacePair preprocessed_surface_split(const EventRecording& rec,
                                           std::uint64_t t_ref_us,
                                           const PreprocessParams& params);

}  // namespace skyshield
