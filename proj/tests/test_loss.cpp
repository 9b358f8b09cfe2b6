#include <doctest.h>

#include <random>

#include "skyshield/loss.hpp"
#include "helpers.hpp"
#include "oracles.hpp"

using namespace skyshield;

TEST_CASE("dice loss fixture values") {
  SUBCASE("perfect overlap scores zero") {
    Mask g(4, 4);
    g.setZero();
    g(1, 1) = g(1, 2) = g(2, 2) = 1;
    const ImageD p = g.cast<double>();
    CHECK(dice_loss<double>(p, g, 1e-6) == doctest::Approx(0.0).epsilon(1e-9));
  }
  SUBCASE("disjoint prediction approaches one") {
    Mask g(2, 2);
    g.setZero();
    g(0, 0) = 1;
    ImageD p(2, 2);
    p << 1e-9, 0.999999, 0.999999, 0.999999;
    CHECK(dice_loss<double>(p, g, 1e-6) > 0.999);
  }
  SUBCASE("uniform half prediction on a 2x2 single-pixel target") {
    // 1 - (2*0.5 + 1e-6) / (2 + 1 + 1e-6)
    Mask g(2, 2);
    g.setZero();
    g(0, 0) = 1;
    ImageD p = ImageD::Constant(2, 2, 0.5);
    const double expected = 1.0 - (2.0 * 0.5 + 1e-6) / (2.0 + 1.0 + 1e-6);
    CHECK(dice_loss<double>(p, g, 1e-6) == doctest::Approx(expected).epsilon(1e-12));
    // same value through an independent algebraic route: 2 / (3 + eps)
    CHECK(dice_loss<double>(p, g, 1e-6) == doctest::Approx(2.0 / 3.000001).epsilon(1e-12));
    CHECK(dice_loss<double>(p, g, 1e-6) == doctest::Approx(0.6666664444445185).epsilon(1e-12));
  }
  SUBCASE("shape mismatch is rejected") {
    Mask g(2, 3);
    g.setZero();
    ImageD p = ImageD::Constant(2, 2, 0.5);
    CHECK_RAISES_CODE(dice_loss<double>(p, g, 1e-6), ErrorCode::ShapeMismatch);
  }
}

TEST_CASE("dice loss agrees with the scalar oracle on random inputs") {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 20; ++trial) {
    const auto p = testutil::random_heatmap<double>(rng, 9, 7);
    const auto g = testutil::random_mask(rng, 9, 7);
    CHECK(dice_loss<double>(p, g, 1e-6) ==
          doctest::Approx(oracle::dice_scalar(p, g, 1e-6)).epsilon(1e-12));
  }
}

TEST_CASE("contour regularizer fixture values") {
  SUBCASE("empty prediction is not penalized") {
    const ImageD p = ImageD::Zero(8, 8);
    const auto c = contour_reg<double>(p, 1e-6);
    CHECK(c.area == 0.0);
    CHECK(c.perimeter == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(c.reg == doctest::Approx(0.0).epsilon(1e-12));
  }
  SUBCASE("one-pixel-wide full-width line sits at the optimum") {
    // interior hard line: perimeter ~ 2 * area, so the ratio term vanishes
    const int w = 32;
    ImageD p = ImageD::Zero(16, w);
    p.row(7).setOnes();
    const auto c = contour_reg<double>(p, 1e-6);
    CHECK(c.area == doctest::Approx(double(w)));
    CHECK(c.perimeter == doctest::Approx(2.0 * w).epsilon(0.02));
    CHECK(c.reg < 0.01);
    CHECK(c.reg == doctest::Approx(oracle::contour_scalar(p, 1e-6)).epsilon(1e-12));
  }
  SUBCASE("filled squares are penalized, growing with side length") {
    double prev = 0.0;
    for (int s : {4, 8, 16}) {
      ImageD p = ImageD::Zero(24, 24);
      p.block(4, 4, s, s).setOnes();
      const auto c = contour_reg<double>(p, 1e-6);
      CHECK(c.area == doctest::Approx(double(s) * s));
      // TV perimeter of a hard square is 4s with sqrt(2) corner merging
      CHECK(c.reg == doctest::Approx(oracle::contour_scalar(p, 1e-6)).epsilon(1e-12));
      CHECK(c.reg > prev);
      prev = c.reg;
    }
    CHECK(prev > 0.5);  // the 16x16 square
  }
}

TEST_CASE("regularizer prefers the 1-px line among equal-area shapes") {
  // equal soft area 16: thin line, 2-px slab, 4x4 filled square
  ImageD line = ImageD::Zero(24, 24);
  line.block(12, 4, 1, 16).setOnes();
  ImageD slab = ImageD::Zero(24, 24);
  slab.block(12, 4, 2, 8).setOnes();
  ImageD square = ImageD::Zero(24, 24);
  square.block(10, 10, 4, 4).setOnes();

  const double r_line = contour_reg<double>(line, 1e-6).reg;
  const double r_slab = contour_reg<double>(slab, 1e-6).reg;
  const double r_square = contour_reg<double>(square, 1e-6).reg;
  CHECK(r_line < r_slab);
  CHECK(r_slab < r_square);
}

TEST_CASE("total loss breakdown is internally consistent") {
  std::mt19937_64 rng(37);
  const auto p = testutil::random_heatmap<double>(rng, 8, 8);
  const auto g = testutil::random_mask(rng, 8, 8);

  SUBCASE("lambda 0 collapses to plain dice") {
    LossParams params;
    params.lambda = 0.0;
    const LossBreakdown b = total_loss<double>(p, g, params);
    CHECK(b.total == b.dice);
  }
  SUBCASE("identity holds and ranges are sane") {
    LossParams params;
    params.lambda = 0.37;
    const LossBreakdown b = total_loss<double>(p, g, params);
    CHECK(b.total - (b.dice + params.lambda * b.reg) == 0.0);
    CHECK(b.dice >= 0.0);
    CHECK(b.dice < 1.0);
    CHECK(b.reg >= 0.0);
    CHECK(b.reg <= 1.0);
    CHECK(b.area >= 0.0);
    CHECK(b.perimeter >= 0.0);
  }
  SUBCASE("perfect thin line prediction scores near zero") {
    Mask gline = Mask::Zero(16, 32);
    gline.row(8).setOnes();
    const ImageD pline = gline.cast<double>() * 0.999999 + 1e-9;
    LossParams params;
    const LossBreakdown b = total_loss<double>(pline, gline, params);
    CHECK(b.total < 0.01);
  }
}

namespace {

// central finite differences of total_loss wrt every pixel
ImageD fd_gradient(const ImageD& p, const Mask& g, const LossParams& params, double h) {
  ImageD grad(p.rows(), p.cols());
  ImageD probe = p;
  for (Eigen::Index y = 0; y < p.rows(); ++y) {
    for (Eigen::Index x = 0; x < p.cols(); ++x) {
      probe(y, x) = p(y, x) + h;
      const double up = total_loss<double>(probe, g, params).total;
      probe(y, x) = p(y, x) - h;
      const double down = total_loss<double>(probe, g, params).total;
      probe(y, x) = p(y, x);
      grad(y, x) = (up - down) / (2 * h);
    }
  }
  return grad;
}

}  // namespace

TEST_CASE("loss gradient matches central finite differences") {
  std::mt19937_64 rng(41);
  LossParams params;
  params.lambda = 0.25;

  int trials_done = 0;
  std::uint64_t seed_probe = 0;
  while (trials_done < 20) {
    std::mt19937_64 trial_rng(rng() + seed_probe++);
    const ImageD p = testutil::random_heatmap<double>(trial_rng, 8, 8);
    const auto g = testutil::random_mask(trial_rng, 8, 8);

    // the finite-difference oracle needs gradients away from the TV norm's
    // high-curvature region; regenerate the rare draw that lands near it
    ImageD gx, gy;
    skyshield::detail::forward_differences(p, gx, gy);
    if (gx.abs().minCoeff() < 1e-4 || gy.abs().minCoeff() < 1e-4) continue;
    ++trials_done;

    const ImageD analytic = loss_gradient<double>(p, g, params);
    const ImageD numeric = fd_gradient(p, g, params, 1e-6);
    const double scale = std::max(analytic.abs().maxCoeff(), numeric.abs().maxCoeff());
    const double rel = (analytic - numeric).abs().maxCoeff() / scale;
    CHECK(rel < 1e-5);
  }
}

TEST_CASE("dice gradient pushes down everywhere on an empty target") {
  std::mt19937_64 rng(43);
  const ImageD p = testutil::random_heatmap<double>(rng, 6, 6);
  const Mask g = Mask::Zero(6, 6);
  LossParams params;
  params.lambda = 0.0;
  const ImageD grad = loss_gradient<double>(p, g, params);
  CHECK((grad > 0.0).all());  // increasing any p increases the loss
}

TEST_CASE("dice gradient respects horizontal mirror symmetry") {
  // Exact symmetry holds for the Dice term. The TV surrogate for P(p)
  // anchors each pixel's norm to its right/down differences, so mirroring
  // regroups those pairs and the contour gradient is deliberately not
  // mirror-equivariant; its correctness is covered by the fd check above.
  std::mt19937_64 rng(47);
  ImageD p = testutil::random_heatmap<double>(rng, 6, 8);
  p = ((p + p.rowwise().reverse()) / 2).eval();
  Mask g = testutil::random_mask(rng, 6, 8);
  g = g.max(g.rowwise().reverse().eval()).eval();

  LossParams params;
  params.lambda = 0.0;
  const ImageD grad = loss_gradient<double>(p, g, params);
  const ImageD mirrored = grad.rowwise().reverse();
  CHECK((grad - mirrored).abs().maxCoeff() < 1e-12);
}
