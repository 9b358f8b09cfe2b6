#pragma once

#include <cmath>

#include "skyshield/errors.hpp"
#include "skyshield/types.hpp"

namespace skyshield {

struct LossParams {
  double lambda = 0.1;   // weight of the contour term, >= 0
  double epsilon = 1e-6; // Dice smoothing, > 0
  double delta = 1e-6;   // contour smoothing, > 0

  void validate() const {
    if (lambda < 0) raise(ErrorCode::InvalidConfig, "lambda must be >= 0");
    if (!(epsilon > 0)) raise(ErrorCode::InvalidConfig, "epsilon must be > 0");
    if (!(delta > 0)) raise(ErrorCode::InvalidConfig, "delta must be > 0");
  }
};

struct LossBreakdown {
  double total = 0;
  double dice = 0;
  double reg = 0;
  double area = 0;       // A(p), soft pixel count
  double perimeter = 0;  // P(p), smoothed total variation
};

namespace detail {

// Smoothing of the gradient-magnitude norm; keeps the perimeter term
// differentiable at flat pixels and exactly zero on constant images.
inline constexpr double kTvEta = 1e-8;

inline void require_same_shape(Eigen::Index pr, Eigen::Index pc, Eigen::Index gr,
                               Eigen::Index gc) {
  if (pr != gr || pc != gc) {
    raise(ErrorCode::ShapeMismatch, "heatmap and mask dimensions differ");
  }
}

// Zero-padded forward differences. gx(y, x) = p(y, x+1) - p(y, x) with
// p == 0 outside the grid; gy analogous.
template <typename Scalar>
void forward_differences(const Image<Scalar>& p, Image<Scalar>& gx, Image<Scalar>& gy) {
  const Eigen::Index h = p.rows(), w = p.cols();
  gx = -p;
  gy = -p;
  if (w > 1) gx.leftCols(w - 1) += p.rightCols(w - 1);
  if (h > 1) gy.topRows(h - 1) += p.bottomRows(h - 1);
}

}  // namespace detail

/// Soft Dice loss: 1 - (2 sum(p*g) + eps) / (sum(p) + sum(g) + eps).
template <typename Scalar>
Scalar dice_loss(const Image<Scalar>& p, const Mask& g, Scalar epsilon) {
  detail::require_same_shape(p.rows(), p.cols(), g.rows(), g.cols());
  const Scalar inter = (p * g.template cast<Scalar>()).sum();
  const Scalar sums = p.sum() + Scalar(mask_area(g));
  return Scalar(1) - (Scalar(2) * inter + epsilon) / (sums + epsilon);
}

template <typename Scalar>
struct ContourTerms {
  Scalar reg = 0;
  Scalar area = 0;
  Scalar perimeter = 0;
};

/// Contour regularizer: (1 - (P + delta) / (2 A + delta))^2 with
/// A = sum(p) and P the eta-smoothed total variation of p.
template <typename Scalar>
ContourTerms<Scalar> contour_reg(const Image<Scalar>& p, Scalar delta) {
  const Scalar eta = Scalar(detail::kTvEta);
  Image<Scalar> gx, gy;
  detail::forward_differences(p, gx, gy);

  ContourTerms<Scalar> out;
  out.area = p.sum();
  out.perimeter = ((gx.square() + gy.square() + eta * eta).sqrt() - eta).sum();
  const Scalar ratio = (out.perimeter + delta) / (Scalar(2) * out.area + delta);
  out.reg = (Scalar(1) - ratio) * (Scalar(1) - ratio);
  return out;
}

/// Combined objective; the identity total == dice + lambda * reg is exact
/// in double arithmetic.
template <typename Scalar>
LossBreakdown total_loss(const Image<Scalar>& p, const Mask& g, const LossParams& params) {
  params.validate();
  LossBreakdown b;
  b.dice = double(dice_loss<Scalar>(p, g, Scalar(params.epsilon)));
  const auto c = contour_reg<Scalar>(p, Scalar(params.delta));
  b.reg = double(c.reg);
  b.area = double(c.area);
  b.perimeter = double(c.perimeter);
  b.total = b.dice + params.lambda * b.reg;
  return b;
}

/// Analytic d(total_loss)/dp, one entry per pixel.
template <typename Scalar>
Image<Scalar> loss_gradient(const Image<Scalar>& p, const Mask& g, const LossParams& params) {
  params.validate();
  detail::require_same_shape(p.rows(), p.cols(), g.rows(), g.cols());
  const Eigen::Index h = p.rows(), w = p.cols();

  // Dice term: L = 1 - N/D, dL/dp_i = -(2 g_i D - N) / D^2.
  const Image<Scalar> gf = g.template cast<Scalar>();
  const Scalar eps = Scalar(params.epsilon);
  const Scalar num = Scalar(2) * (p * gf).sum() + eps;
  const Scalar den = p.sum() + gf.sum() + eps;
  Image<Scalar> grad = -(Scalar(2) * gf * den - num) / (den * den);

  if (params.lambda > 0) {
    const Scalar eta = Scalar(detail::kTvEta);
    const Scalar delta = Scalar(params.delta);
    Image<Scalar> gx, gy;
    detail::forward_differences(p, gx, gy);
    const Image<Scalar> m = (gx.square() + gy.square() + eta * eta).sqrt();

    // dP/dp(a,b) = -(gx + gy)(a,b)/m(a,b) + gx(a,b-1)/m(a,b-1)
    //            + gy(a-1,b)/m(a-1,b)
    Image<Scalar> dP = -(gx + gy) / m;
    const Image<Scalar> nx = gx / m;
    const Image<Scalar> ny = gy / m;
    if (w > 1) dP.rightCols(w - 1) += nx.leftCols(w - 1);
    if (h > 1) dP.bottomRows(h - 1) += ny.topRows(h - 1);

    const Scalar area = p.sum();
    const Scalar peri = (m - eta).sum();
    const Scalar den2 = Scalar(2) * area + delta;
    const Scalar u = (peri + delta) / den2;
    // d reg / dp = -2 (1 - u) * (dP * den2 - (P + delta) * 2) / den2^2
    grad += Scalar(params.lambda) * Scalar(-2) * (Scalar(1) - u) *
            (dP * den2 - (peri + delta) * Scalar(2)) / (den2 * den2);
  }
  return grad;
}

}  // namespace skyshield
