#pragma once

// Finite-difference gradient oracle for the full network. ReLU and maxpool
// make the loss piecewise-smooth; a central difference is only a valid
// derivative estimate when no kink is crossed inside [theta-h, theta+h].
// The harness detects crossings by comparing activation sign / argmax
// patterns at the three evaluation points and shrinks h for exactly the
// parameters that need it, starting from the nominal step.

#include <cmath>
#include <string>
#include <vector>

#include "skyshield/loss.hpp"
#include "skyshield/lunet.hpp"

namespace gradcheck {

using skyshield::Image;
using skyshield::LossParams;
using skyshield::LUnetModel;
using skyshield::LUnetWorkspace;
using skyshield::Mask;
using skyshield::Planes;

template <typename Scalar>
std::vector<std::uint8_t> activation_pattern(const LUnetWorkspace<Scalar>& ws) {
  std::vector<std::uint8_t> pattern;
  for (const auto& rec : ws.conv) {
    for (const auto& plane : rec.preact) {
      for (Eigen::Index i = 0; i < plane.size(); ++i) {
        pattern.push_back(plane.data()[i] > Scalar(0) ? 1 : 0);
      }
    }
  }
  for (const auto& stage : ws.pool) {
    for (const auto& plane : stage) {
      pattern.insert(pattern.end(), plane.data(), plane.data() + plane.size());
    }
  }
  return pattern;
}

struct TensorCheck {
  std::string name;
  double max_rel_error = 0;
  int refined = 0;    // parameters that needed a smaller step
  int unstable = 0;   // parameters where no valid step was found
};

struct CheckResult {
  std::vector<TensorCheck> tensors;
  double max_rel_error = 0;
  int refined = 0;
  int unstable = 0;
};

// Relative error of analytic vs finite-difference gradients of
// total_loss(forward(input), target) with respect to every parameter.
inline CheckResult check_model_gradients(LUnetModel<double>& model,
                                         const Planes<double>& input, const Mask& target,
                                         const LossParams& loss_params,
                                         double h0 = 1e-3) {
  LUnetWorkspace<double> ws;
  const Image<double> p = skyshield::forward_cached(model, input, ws);
  const std::vector<std::uint8_t> base_pattern = activation_pattern(ws);
  const Image<double> upstream = skyshield::loss_gradient(p, target, loss_params);
  const auto grads = skyshield::backward(model, ws, upstream);

  const auto loss_and_pattern = [&](std::vector<std::uint8_t>& pattern) {
    LUnetWorkspace<double> w2;
    const Image<double> out = skyshield::forward_cached(model, input, w2);
    pattern = activation_pattern(w2);
    return skyshield::total_loss<double>(out, target, loss_params).total;
  };

  CheckResult result;
  for (std::size_t li = 0; li < model.layers.size(); ++li) {
    for (int is_bias = 0; is_bias < 2; ++is_bias) {
      auto& theta = is_bias ? model.layers[li].b : model.layers[li].w;
      const auto& analytic = is_bias ? grads.params.layers[li].b : grads.params.layers[li].w;

      TensorCheck tc;
      tc.name = "layer" + std::to_string(li) + (is_bias ? ".b" : ".w");

      // scale floor: per-parameter relative error is meaningless where the
      // true gradient sits at the tensor's noise level
      const double tensor_scale = std::max(analytic.abs().maxCoeff(), 1e-12);

      for (Eigen::Index j = 0; j < theta.size(); ++j) {
        const double saved = theta[j];
        double fd = 0;
        bool valid = false;
        double h = h0;
        for (int attempt = 0; attempt < 14 && !valid; ++attempt, h /= 4) {
          std::vector<std::uint8_t> pat_up, pat_down;
          theta[j] = saved + h;
          const double up = loss_and_pattern(pat_up);
          theta[j] = saved - h;
          const double down = loss_and_pattern(pat_down);
          theta[j] = saved;
          if (pat_up == base_pattern && pat_down == base_pattern) {
            fd = (up - down) / (2 * h);
            valid = true;
            if (attempt > 0) ++tc.refined;
          }
        }
        if (!valid) {
          ++tc.unstable;
          continue;
        }
        const double a = analytic[j];
        const double rel = std::abs(a - fd) / std::max({std::abs(a), std::abs(fd),
                                                        1e-6 * tensor_scale});
        tc.max_rel_error = std::max(tc.max_rel_error, rel);
      }

      result.max_rel_error = std::max(result.max_rel_error, tc.max_rel_error);
      result.refined += tc.refined;
      result.unstable += tc.unstable;
      result.tensors.push_back(std::move(tc));
    }
  }
  return result;
}

}  // namespace gradcheck
