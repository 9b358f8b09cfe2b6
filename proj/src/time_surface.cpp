#include "skyshield/time_surface.hpp"

#include <cmath>
#include <optional>

namespace skyshield {

namespace {

TimeSurface build(const EventRecording& rec, std::uint64_t t_ref_us, double tau_us,
                  std::optional<std::int8_t> polarity) {
  if (!(tau_us > 0)) raise(ErrorCode::InvalidTau, "tau_us must be > 0");

  TimeSurface s;
  s.width = rec.width;
  s.height = rec.height;
  s.t_ref_us = t_ref_us;
  s.tau_us = tau_us;
  s.values = ImageD::Zero(rec.height, rec.width);

  // Last timestamp per pixel; events are sorted so later wins.
  Eigen::Array<std::int64_t, Eigen::Dynamic, Eigen::Dynamic> last(rec.height, rec.width);
  last.setConstant(-1);
  for (const Event& e : rec.events) {
    if (e.t > t_ref_us) break;
    if (polarity && e.polarity != *polarity) continue;
    last(e.y, e.x) = std::int64_t(e.t);
  }

  for (int y = 0; y < rec.height; ++y) {
    for (int x = 0; x < rec.width; ++x) {
      if (last(y, x) >= 0) {
        const double age = double(t_ref_us - std::uint64_t(last(y, x)));
        s.values(y, x) = std::exp(-age / tau_us);
      }
    }
  }
  return s;
}

}  // namespace

TimeSurface build_time_surface(const EventRecording& rec, std::uint64_t t_ref_us,
                               double tau_us) {
  return build(rec, t_ref_us, tau_us, std::nullopt);
}

TimeSurfacePair build_time_surface_split(const EventRecording& rec,
                                         std::uint64_t t_ref_us, double tau_us) {
  return TimeSurfacePair{build(rec, t_ref_us, tau_us, std::int8_t(1)),
                         build(rec, t_ref_us, tau_us, std::int8_t(-1))};
}

}  // namespace skyshield
