#include "skyshield/stc_filter.hpp"

#include <algorithm>
#include <vector>

namespace skyshield {

void StcParams::validate() const {
  if (radius_px < 1) raise(ErrorCode::InvalidConfig, "stc radius_px must be >= 1");
  if (window_us == 0) raise(ErrorCode::InvalidConfig, "stc window_us must be > 0");
  if (min_support < 1) raise(ErrorCode::InvalidConfig, "stc min_support must be >= 1");
}

namespace {

// Streaming pass: per-pixel ring of the last K timestamps, K = min_support.
// Counting stops once min_support is reached, so deeper history is never
// needed.
std::vector<bool> causal_flags(const EventRecording& rec, const StcParams& p) {
  const int w = rec.width, h = rec.height;
  const int k = p.min_support;
  std::vector<std::uint64_t> stamps(std::size_t(w) * h * k, 0);
  std::vector<std::uint8_t> filled(std::size_t(w) * h, 0);
  std::vector<std::uint8_t> head(std::size_t(w) * h, 0);

  std::vector<bool> keep(rec.events.size(), false);
  for (std::size_t i = 0; i < rec.events.size(); ++i) {
    const Event& e = rec.events[i];
    const std::uint64_t t_min = e.t >= p.window_us ? e.t - p.window_us : 0;
    const bool open_low = e.t >= p.window_us;  // window is (t - w, t]

    int support = 0;
    const int x0 = std::max(0, int(e.x) - p.radius_px);
    const int x1 = std::min(w - 1, int(e.x) + p.radius_px);
    const int y0 = std::max(0, int(e.y) - p.radius_px);
    const int y1 = std::min(h - 1, int(e.y) + p.radius_px);
    for (int y = y0; y <= y1 && support < p.min_support; ++y) {
      for (int x = x0; x <= x1 && support < p.min_support; ++x) {
        const std::size_t cell = std::size_t(y) * w + x;
        const int n = filled[cell];
        const std::uint64_t* base = stamps.data() + cell * k;
        for (int j = 0; j < n; ++j) {
          const std::uint64_t ts = base[j];
          if (ts > t_min || (!open_low && ts == t_min)) {
            if (++support >= p.min_support) break;
          }
        }
      }
    }
    keep[i] = support >= p.min_support;

    const std::size_t cell = std::size_t(e.y) * w + e.x;
    stamps[cell * k + head[cell]] = e.t;
    head[cell] = std::uint8_t((head[cell] + 1) % k);
    filled[cell] = std::uint8_t(std::min(int(filled[cell]) + 1, k));
  }
  return keep;
}

// Offline pass: per-pixel sorted timestamp lists, closed window both sides.
std::vector<bool> bidirectional_flags(const EventRecording& rec, const StcParams& p) {
  const int w = rec.width, h = rec.height;
  std::vector<std::vector<std::uint64_t>> by_pixel(std::size_t(w) * h);
  for (const Event& e : rec.events) {
    by_pixel[std::size_t(e.y) * w + e.x].push_back(e.t);
  }

  std::vector<bool> keep(rec.events.size(), false);
  for (std::size_t i = 0; i < rec.events.size(); ++i) {
    const Event& e = rec.events[i];
    const std::uint64_t lo = e.t >= p.window_us ? e.t - p.window_us : 0;
    const std::uint64_t hi = e.t + p.window_us;

    long support = -1;  // the event itself is counted once below
    const int x0 = std::max(0, int(e.x) - p.radius_px);
    const int x1 = std::min(w - 1, int(e.x) + p.radius_px);
    const int y0 = std::max(0, int(e.y) - p.radius_px);
    const int y1 = std::min(h - 1, int(e.y) + p.radius_px);
    for (int y = y0; y <= y1 && support < p.min_support; ++y) {
      for (int x = x0; x <= x1 && support < p.min_support; ++x) {
        const auto& ts = by_pixel[std::size_t(y) * w + x];
        const auto a = std::lower_bound(ts.begin(), ts.end(), lo);
        const auto b = std::upper_bound(a, ts.end(), hi);
        support += b - a;
      }
    }
    keep[i] = support >= p.min_support;
  }
  return keep;
}

}  // namespace

std::vector<bool> stc_keep_flags(const EventRecording& rec, const StcParams& params,
                                 StcCausality causality) {
  params.validate();
  return causality == StcCausality::causal ? causal_flags(rec, params)
                                           : bidirectional_flags(rec, params);
}

EventRecording stc_filter(const EventRecording& rec, const StcParams& params,
                          StcCausality causality) {
  const std::vector<bool> keep = stc_keep_flags(rec, params, causality);
  EventRecording out;
  out.width = rec.width;
  out.height = rec.height;
  out.events.reserve(rec.events.size());
  for (std::size_t i = 0; i < rec.events.size(); ++i) {
    if (keep[i]) out.events.push_back(rec.events[i]);
  }
  return out;
}

}  // namespace skyshield
