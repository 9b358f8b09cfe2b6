#pragma once

#include "skyshield/errors.hpp"
#include "skyshield/types.hpp"

namespace skyshield {

namespace detail {

inline void require_mask_pair(const Mask& a, const Mask& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    raise(ErrorCode::ShapeMismatch, "mask dimensions differ");
  }
}

}  // namespace detail

/// |pred & gt| / |pred | gt|; both empty scores 1, exactly one empty scores 0.
inline double iou(const Mask& pred, const Mask& gt) {
  detail::require_mask_pair(pred, gt);
  const auto inter = ((pred != 0) && (gt != 0)).count();
  const auto uni = ((pred != 0) || (gt != 0)).count();
  if (uni == 0) return 1.0;
  return double(inter) / double(uni);
}

/// 2 |pred & gt| / (|pred| + |gt|); empty-empty convention matches iou.
inline double dice(const Mask& pred, const Mask& gt) {
  detail::require_mask_pair(pred, gt);
  const auto inter = ((pred != 0) && (gt != 0)).count();
  const auto total = (pred != 0).count() + (gt != 0).count();
  if (total == 0) return 1.0;
  return 2.0 * double(inter) / double(total);
}

/// p >= threshold -> 1.
template <typename Scalar>
Mask binarize(const Image<Scalar>& heatmap, double threshold = 0.5) {
  return (heatmap >= Scalar(threshold)).template cast<std::uint8_t>();
}

}  // namespace skyshield
