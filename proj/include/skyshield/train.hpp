#pragma once

#include <numeric>
#include <random>
#include <string>

#include "skyshield/loss.hpp"
#include "skyshield/lunet.hpp"

namespace skyshield {

template <typename Scalar>
struct TrainSample {
  Planes<Scalar> input;
  Mask target;
};

struct TrainOptions {
  int epochs = 40;
  double lr = 0.5;
  double momentum = 0.9;
  int batch_size = 4;
  std::uint64_t seed = 0;
  LossParams loss;  // loss.lambda is the Dice/contour trade-off

  void validate() const {
    if (epochs < 0) raise(ErrorCode::InvalidConfig, "epochs must be >= 0");
    if (lr < 0) raise(ErrorCode::InvalidConfig, "lr must be >= 0");
    if (momentum < 0 || momentum >= 1) raise(ErrorCode::InvalidConfig, "momentum in [0,1)");
    if (batch_size < 1) raise(ErrorCode::InvalidConfig, "batch_size must be >= 1");
    loss.validate();
  }
};

struct EpochLog {
  int epoch = 0;          // 1-based
  LossBreakdown mean;     // averaged over samples
};

/// SGD with momentum over shuffled mini-batches; deterministic for a fixed
/// seed (single-threaded). Returns the per-epoch loss log.
template <typename Scalar>
std::vector<EpochLog> train(LUnetModel<Scalar>& model,
                            const std::vector<TrainSample<Scalar>>& data,
                            const TrainOptions& opts) {
  opts.validate();
  if (data.empty()) raise(ErrorCode::EmptyDataset, "no training samples");

  LUnetModel<Scalar> velocity = zeros_like(model);
  std::mt19937_64 rng(opts.seed);
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t(0));

  std::vector<EpochLog> log;
  log.reserve(std::size_t(opts.epochs));

  for (int epoch = 1; epoch <= opts.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);

    LossBreakdown epoch_sum;
    for (std::size_t start = 0; start < order.size(); start += std::size_t(opts.batch_size)) {
      const std::size_t stop = std::min(order.size(), start + std::size_t(opts.batch_size));
      LUnetModel<Scalar> grad_sum = zeros_like(model);

      for (std::size_t s = start; s < stop; ++s) {
        const TrainSample<Scalar>& sample = data[order[s]];
        LUnetWorkspace<Scalar> ws;
        const Image<Scalar> p = forward_cached(model, sample.input, ws);
        const LossBreakdown b = total_loss<Scalar>(p, sample.target, opts.loss);
        if (!std::isfinite(b.total)) {
          raise(ErrorCode::DivergedLoss,
                "non-finite loss at epoch " + std::to_string(epoch) + ", sample " +
                    std::to_string(order[s]) + " (dice=" + std::to_string(b.dice) +
                    ", reg=" + std::to_string(b.reg) + ")");
        }
        epoch_sum.total += b.total;
        epoch_sum.dice += b.dice;
        epoch_sum.reg += b.reg;
        epoch_sum.area += b.area;
        epoch_sum.perimeter += b.perimeter;

        const Image<Scalar> upstream = loss_gradient<Scalar>(p, sample.target, opts.loss);
        LUnetGradients<Scalar> g = backward(model, ws, upstream);
        for (std::size_t l = 0; l < grad_sum.layers.size(); ++l) {
          grad_sum.layers[l].w += g.params.layers[l].w;
          grad_sum.layers[l].b += g.params.layers[l].b;
        }
      }

      const Scalar inv_batch = Scalar(1) / Scalar(stop - start);
      const Scalar mu = Scalar(opts.momentum);
      const Scalar lr = Scalar(opts.lr);
      for (std::size_t l = 0; l < model.layers.size(); ++l) {
        velocity.layers[l].w = mu * velocity.layers[l].w - lr * inv_batch * grad_sum.layers[l].w;
        velocity.layers[l].b = mu * velocity.layers[l].b - lr * inv_batch * grad_sum.layers[l].b;
        model.layers[l].w += velocity.layers[l].w;
        model.layers[l].b += velocity.layers[l].b;
      }
    }

    const double n = double(data.size());
    log.push_back(EpochLog{epoch, LossBreakdown{epoch_sum.total / n, epoch_sum.dice / n,
                                                epoch_sum.reg / n, epoch_sum.area / n,
                                                epoch_sum.perimeter / n}});
  }
  return log;
}

}  // namespace skyshield
