#include "skyshield/hough.hpp"

#include <algorithm>
#include <cmath>

#include "skyshield/metrics.hpp"

namespace skyshield {

void HoughParams::validate() const {
  if (!(rho_step > 0)) raise(ErrorCode::InvalidConfig, "rho_step must be > 0");
  if (!(theta_step > 0)) raise(ErrorCode::InvalidConfig, "theta_step must be > 0");
  if (accumulator_threshold < 1) {
    raise(ErrorCode::InvalidConfig, "accumulator_threshold must be >= 1");
  }
  if (!(binarize_threshold > 0 && binarize_threshold < 1)) {
    raise(ErrorCode::InvalidConfig, "binarize_threshold must be in (0,1)");
  }
  if (!(line_raster_thickness > 0)) {
    raise(ErrorCode::InvalidConfig, "line_raster_thickness must be > 0");
  }
  const double bins = M_PI / theta_step;
  if (std::abs(bins - std::round(bins)) > 1e-6 * bins) {
    raise(ErrorCode::InvalidConfig, "theta_step must divide pi into whole bins");
  }
}

std::vector<HoughLine> hough_lines(const TimeSurface& surface, const HoughParams& params) {
  params.validate();
  const int w = surface.width, h = surface.height;
  const int n_theta = int(std::round(M_PI / params.theta_step));
  const double max_rho = std::hypot(double(w), double(h));
  const int n_rho = int(std::floor(2 * max_rho / params.rho_step)) + 1;

  std::vector<double> cos_t(n_theta), sin_t(n_theta);
  for (int i = 0; i < n_theta; ++i) {
    cos_t[i] = std::cos(i * params.theta_step);
    sin_t[i] = std::sin(i * params.theta_step);
  }

  Eigen::Array<std::int32_t, Eigen::Dynamic, Eigen::Dynamic> acc =
      Eigen::Array<std::int32_t, Eigen::Dynamic, Eigen::Dynamic>::Zero(n_rho, n_theta);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (surface.values(y, x) < params.binarize_threshold) continue;
      for (int i = 0; i < n_theta; ++i) {
        const double rho = x * cos_t[i] + y * sin_t[i];
        const int bin = int(std::lround((rho + max_rho) / params.rho_step));
        if (bin >= 0 && bin < n_rho) acc(bin, i)++;
      }
    }
  }

  // 3x3 non-max suppression; plateau ties keep the lowest (rho, theta) cell
  std::vector<HoughLine> lines;
  for (int r = 0; r < n_rho; ++r) {
    for (int t = 0; t < n_theta; ++t) {
      const std::int32_t v = acc(r, t);
      if (v < params.accumulator_threshold) continue;
      bool is_peak = true;
      for (int dr = -1; dr <= 1 && is_peak; ++dr) {
        for (int dt = -1; dt <= 1 && is_peak; ++dt) {
          if (dr == 0 && dt == 0) continue;
          const int rr = r + dr, tt = t + dt;
          if (rr < 0 || rr >= n_rho || tt < 0 || tt >= n_theta) continue;
          const std::int32_t nv = acc(rr, tt);
          if (nv > v || (nv == v && (rr < r || (rr == r && tt < t)))) is_peak = false;
        }
      }
      if (is_peak) {
        lines.push_back(HoughLine{r * params.rho_step - max_rho, t * params.theta_step, v});
      }
    }
  }
  std::stable_sort(lines.begin(), lines.end(),
                   [](const HoughLine& a, const HoughLine& b) { return a.votes > b.votes; });
  return lines;
}

Mask hough_detect(const TimeSurface& surface, const HoughParams& params) {
  const std::vector<HoughLine> lines = hough_lines(surface, params);
  Mask mask = Mask::Zero(surface.height, surface.width);
  const double reach = params.line_raster_thickness / 2;
  for (const HoughLine& line : lines) {
    const double c = std::cos(line.theta), s = std::sin(line.theta);
    for (int y = 0; y < surface.height; ++y) {
      for (int x = 0; x < surface.width; ++x) {
        if (std::abs(x * c + y * s - line.rho) <= reach) mask(y, x) = 1;
      }
    }
  }
  return mask;
}

HoughParams tune_hough(const std::vector<LabeledSample>& dev_set,
                       const std::vector<HoughParams>& grid,
                       const PreprocessParams& prep) {
  if (dev_set.empty() || grid.empty()) {
    raise(ErrorCode::EmptyInput, "tune_hough needs a nonempty dev set and grid");
  }

  std::vector<TimeSurface> surfaces;
  surfaces.reserve(dev_set.size());
  for (const LabeledSample& s : dev_set) {
    surfaces.push_back(preprocessed_surface(s.recording, s.t_ref_us, prep));
  }

  std::size_t best = 0;
  double best_dice = -1.0;
  for (std::size_t gi = 0; gi < grid.size(); ++gi) {
    double sum = 0;
    for (std::size_t si = 0; si < dev_set.size(); ++si) {
      sum += dice(hough_detect(surfaces[si], grid[gi]), dev_set[si].gt_mask);
    }
    const double mean = sum / double(dev_set.size());
    if (mean > best_dice) {
      best_dice = mean;
      best = gi;
    }
  }
  return grid[best];
}

std::vector<HoughParams> default_hough_grid() {
  std::vector<HoughParams> grid;
  for (double binarize : {0.3, 0.5, 0.7}) {
    for (int votes : {30, 60, 90}) {
      for (double thick : {1.0, 2.0, 3.0}) {
        HoughParams p;
        p.binarize_threshold = binarize;
        p.accumulator_threshold = votes;
        p.line_raster_thickness = thick;
        grid.push_back(p);
      }
    }
  }
  return grid;
}

}  // namespace skyshield
