#pragma once

#include "skyshield/pipeline.hpp"
#include "skyshield/synth.hpp"
#include "skyshield/time_surface.hpp"
#include "skyshield/types.hpp"

namespace skyshield {

struct HoughParams {
  double rho_step = 1.0;
  double theta_step = M_PI / 180.0;
  int accumulator_threshold = 60;
  double binarize_threshold = 0.1;  // surface value in (0, 1)
  double line_raster_thickness = 1.0;

  void validate() const;

  friend bool operator==(const HoughParams&, const HoughParams&) = default;
};

struct HoughLine {
  double rho = 0;
  double theta = 0;
  int votes = 0;
};

/// Accumulator peaks (after 3x3 non-max suppression) of the binarized
/// surface, strongest first.
std::vector<HoughLine> hough_lines(const TimeSurface& surface, const HoughParams& params);

/// Detected lines rasterized at line_raster_thickness into a binary mask.
Mask hough_detect(const TimeSurface& surface, const HoughParams& params);

/// Grid point maximizing mean Dice over the dev set; ties resolve to the
/// earliest grid entry. Surfaces are built with the shared front-end.
HoughParams tune_hough(const std::vector<LabeledSample>& dev_set,
                       const std::vector<HoughParams>& grid,
                       const PreprocessParams& prep);

/// The grid the evaluation harness sweeps by default.
std::vector<HoughParams> default_hough_grid();

}  // namespace skyshield
