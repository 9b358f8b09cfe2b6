#pragma once

#include <Eigen/Core>

#include <cstdint>

namespace skyshield {

/// Dense image plane, indexed (row = y, col = x).
template <typename Scalar>
using Image = Eigen::Array<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

using ImageF = Image<float>;
using ImageD = Image<double>;

/// Binary mask, values in {0, 1}.
using Mask = Eigen::Array<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic>;

/// Stack of planes sharing one geometry (channels of a feature map).
template <typename Scalar>
using Planes = std::vector<Image<Scalar>>;

inline std::int64_t mask_area(const Mask& m) {
  return m.template cast<std::int64_t>().sum();
}

}  // namespace skyshield
