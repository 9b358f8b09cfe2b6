#include "skyshield/pipeline.hpp"

namespace skyshield {

EventRecording preprocess_events(const EventRecording& rec, std::uint64_t t_ref_us,
                                 const PreprocessParams& params) {
  EventRecording cur = params.stc_enabled ? stc_filter(rec, params.stc, params.causality) : rec;
  if (params.window_us > 0) {
    const std::uint64_t lo = t_ref_us >= params.window_us ? t_ref_us - params.window_us : 0;
    cur = slice_by_time(cur, lo, t_ref_us + 1);  // half-open slice, keep t == t_ref
  }
  return cur;
}

TimeSurface preprocessed_surface(const EventRecording& rec, std::uint64_t t_ref_us,
                                 const PreprocessParams& params) {
  return build_time_surface(preprocess_events(rec, t_ref_us, params), t_ref_us, params.tau_us);
}

TimeSurfacePair preprocessed_surface_split(const EventRecording& rec,
                                           std::uint64_t t_ref_us,
                                           const PreprocessParams& params) {
  return build_time_surface_split(preprocess_events(rec, t_ref_us, params), t_ref_us,
                                  params.tau_us);
}

}  // namespace skyshield
