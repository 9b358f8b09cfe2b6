#include <doctest.h>

#include <random>

#include "skyshield/checkpoint.hpp"
#include "skyshield/train.hpp"
#include "gradcheck.hpp"
#include "helpers.hpp"
#include "oracles.hpp"

using namespace skyshield;

namespace {

template <typename Scalar>
Planes<Scalar> random_planes(std::mt19937_64& rng, int channels, int h, int w) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Planes<Scalar> planes(std::size_t(channels));
  for (auto& plane : planes) {
    plane.resize(h, w);
    for (Eigen::Index i = 0; i < plane.size(); ++i) plane.data()[i] = Scalar(unit(rng));
  }
  return planes;
}

}  // namespace

TEST_CASE("parameter count of the default config") {
  // hand-computed from the layer table:
  //   enc0: 3*3*2*8+8 = 152, 3*3*8*8+8 = 584
  //   enc1: 3*3*8*16+16 = 1168, 3*3*16*16+16 = 2320
  //   dec0: 3*3*24*8+8 = 1736, 3*3*8*8+8 = 584
  //   head: 1*1*8*1+1 = 9
  LUnetConfig cfg;
  CHECK(count_parameters(cfg) == 152 + 584 + 1168 + 2320 + 1736 + 584 + 9);
  CHECK(count_parameters(cfg) == 6553);
  CHECK(count_parameters(cfg) <= 100000);  // lightweight bound

  // formula agrees with the instantiated tensors for other configs
  for (int depth : {1, 2, 3}) {
    LUnetConfig c;
    c.depth = depth;
    c.in_channels = 1;
    c.base_channels = 4;
    const auto model = init_model<float>(c);
    std::int64_t total = 0;
    for (const auto& layer : model.layers) total += layer.w.size() + layer.b.size();
    CHECK(total == count_parameters(c));
    CHECK(total <= 100000);
  }
}

TEST_CASE("init is deterministic and validates config") {
  LUnetConfig cfg;
  cfg.seed = 99;
  const auto a = init_model<float>(cfg);
  const auto b = init_model<float>(cfg);
  for (std::size_t i = 0; i < a.layers.size(); ++i) {
    CHECK((a.layers[i].w == b.layers[i].w).all());
    CHECK((a.layers[i].b == 0.0f).all());
  }

  LUnetConfig bad = cfg;
  bad.depth = 0;
  CHECK_RAISES_CODE(init_model<float>(bad), ErrorCode::InvalidConfig);
  bad = cfg;
  bad.in_channels = 3;
  CHECK_RAISES_CODE(init_model<float>(bad), ErrorCode::InvalidConfig);
}

TEST_CASE("all-zero input yields the 0.5 plateau from zero biases") {
  const auto model = init_model<float>(LUnetConfig{});
  Planes<float> zeros(2);
  zeros[0] = ImageF::Zero(16, 16);
  zeros[1] = ImageF::Zero(16, 16);
  const ImageF out = forward(model, zeros);
  CHECK(out.rows() == 16);
  CHECK((out - 0.5f).abs().maxCoeff() < 1e-6f);
}

TEST_CASE("forward shape contract and padding") {
  std::mt19937_64 rng(3);
  const auto model = init_model<float>(LUnetConfig{});

  SUBCASE("64x64 two-channel input maps to 64x64 heatmap") {
    const auto in = random_planes<float>(rng, 2, 64, 64);
    const ImageF out = forward(model, in);
    CHECK(out.rows() == 64);
    CHECK(out.cols() == 64);
    CHECK((out > 0.0f).all());
    CHECK((out < 1.0f).all());
  }
  SUBCASE("non-divisible input is padded and cropped back") {
    const auto in = random_planes<float>(rng, 2, 37, 23);
    const ImageF out = forward(model, in);
    CHECK(out.rows() == 37);
    CHECK(out.cols() == 23);
  }
  SUBCASE("wrong channel count is rejected") {
    const auto in = random_planes<float>(rng, 1, 16, 16);
    CHECK_RAISES_CODE(forward(model, in), ErrorCode::ShapeMismatch);
  }
  SUBCASE("mismatched plane shapes are rejected") {
    Planes<float> in(2);
    in[0] = ImageF::Zero(16, 16);
    in[1] = ImageF::Zero(16, 12);
    CHECK_RAISES_CODE(forward(model, in), ErrorCode::ShapeMismatch);
  }
}

TEST_CASE("forward matches the naive direct-convolution oracle") {
  std::mt19937_64 rng(5);
  for (int depth : {1, 2}) {
    LUnetConfig cfg;
    cfg.depth = depth;
    cfg.seed = 11 + std::uint64_t(depth);
    const auto model = init_model<double>(cfg);
    const auto in = random_planes<double>(rng, 2, 20, 24);

    const auto got = forward(model, in);
    const auto want = oracle::lunet_forward_naive(model, in);
    const double rel = (got - want).abs().maxCoeff() / want.abs().maxCoeff();
    CHECK(rel < 1e-5);
  }
}

TEST_CASE("forward is bit-deterministic") {
  std::mt19937_64 rng(7);
  const auto model = init_model<float>(LUnetConfig{});
  const auto in = random_planes<float>(rng, 2, 32, 32);
  const ImageF a = forward(model, in);
  const ImageF b = forward(model, in);
  CHECK((a == b).all());
}

TEST_CASE("backward with zero upstream yields zero gradients") {
  std::mt19937_64 rng(9);
  const auto model = init_model<double>(LUnetConfig{});
  const auto in = random_planes<double>(rng, 2, 16, 16);

  LUnetWorkspace<double> ws;
  forward_cached(model, in, ws);
  const auto grads = backward(model, ws, ImageD::Zero(16, 16));
  for (const auto& layer : grads.params.layers) {
    CHECK((layer.w == 0.0).all());
    CHECK((layer.b == 0.0).all());
  }
  for (const auto& plane : grads.input) CHECK((plane == 0.0).all());
}

TEST_CASE("input gradient is translation-equivariant away from borders") {
  // shift by the pooling stride so grid alignment is preserved
  std::mt19937_64 rng(13);
  LUnetConfig cfg;
  cfg.in_channels = 1;
  cfg.seed = 21;
  const auto model = init_model<double>(cfg);

  const int h = 40, w = 40, shift = 2;
  auto base = random_planes<double>(rng, 1, h, w);
  Planes<double> shifted(1);
  shifted[0] = ImageD::Zero(h, w);
  shifted[0].block(shift, shift, h - shift, w - shift) =
      base[0].block(0, 0, h - shift, w - shift);

  const auto grad_of_sum = [&](const Planes<double>& in) {
    LUnetWorkspace<double> ws;
    forward_cached(model, in, ws);
    return backward(model, ws, ImageD::Ones(h, w)).input[0];
  };
  const ImageD g0 = grad_of_sum(base);
  const ImageD g1 = grad_of_sum(shifted);

  // compare interiors separated from any border by more than the
  // receptive field radius
  const int m = 14;
  const ImageD inner0 = g0.block(m, m, h - 2 * m - shift, w - 2 * m - shift);
  const ImageD inner1 = g1.block(m + shift, m + shift, h - 2 * m - shift, w - 2 * m - shift);
  CHECK((inner0 - inner1).abs().maxCoeff() < 1e-14);
}

TEST_CASE("analytic gradients match finite differences on a small model") {
  // the full-size check at 16x16 runs in the acceptance suite
  LUnetConfig cfg;
  cfg.in_channels = 2;
  cfg.base_channels = 4;
  cfg.seed = 31;
  auto model = init_model<double>(cfg);

  std::mt19937_64 rng(33);
  const auto input = random_planes<double>(rng, 2, 8, 8);
  Mask target = testutil::random_mask(rng, 8, 8);

  LossParams loss;
  loss.lambda = 0.1;
  const auto result = gradcheck::check_model_gradients(model, input, target, loss);
  CHECK(result.unstable == 0);
  CHECK(result.max_rel_error < 1e-4);
}

TEST_CASE("train: lr 0 leaves parameters untouched") {
  std::mt19937_64 rng(35);
  auto model = init_model<float>(LUnetConfig{});
  const auto before = model;

  std::vector<TrainSample<float>> data(1);
  data[0].input = random_planes<float>(rng, 2, 16, 16);
  data[0].target = testutil::random_mask(rng, 16, 16);

  TrainOptions opts;
  opts.epochs = 3;
  opts.lr = 0.0;
  train(model, data, opts);
  for (std::size_t i = 0; i < model.layers.size(); ++i) {
    CHECK((model.layers[i].w == before.layers[i].w).all());
    CHECK((model.layers[i].b == before.layers[i].b).all());
  }
}

TEST_CASE("train: lambda 0 collapses the logged total to the dice term") {
  std::mt19937_64 rng(37);
  auto model = init_model<float>(LUnetConfig{});
  std::vector<TrainSample<float>> data(2);
  for (auto& s : data) {
    s.input = random_planes<float>(rng, 2, 16, 16);
    s.target = testutil::random_mask(rng, 16, 16);
  }

  TrainOptions opts;
  opts.epochs = 4;
  opts.lr = 0.05;
  opts.loss.lambda = 0.0;
  const auto log = train(model, data, opts);
  REQUIRE(log.size() == 4);
  for (const auto& entry : log) {
    CHECK(entry.mean.total == entry.mean.dice);
  }
}

TEST_CASE("train rejects an empty dataset") {
  auto model = init_model<float>(LUnetConfig{});
  CHECK_RAISES_CODE(train(model, std::vector<TrainSample<float>>{}, TrainOptions{}),
                    ErrorCode::EmptyDataset);
}

TEST_CASE("train is deterministic for a fixed seed") {
  std::mt19937_64 rng(39);
  std::vector<TrainSample<float>> data(3);
  for (auto& s : data) {
    s.input = random_planes<float>(rng, 2, 16, 16);
    s.target = testutil::random_mask(rng, 16, 16);
  }
  TrainOptions opts;
  opts.epochs = 5;
  opts.lr = 0.1;
  opts.batch_size = 2;
  opts.seed = 4242;

  auto m1 = init_model<float>(LUnetConfig{});
  auto m2 = init_model<float>(LUnetConfig{});
  const auto log1 = train(m1, data, opts);
  const auto log2 = train(m2, data, opts);
  for (std::size_t i = 0; i < m1.layers.size(); ++i) {
    CHECK((m1.layers[i].w == m2.layers[i].w).all());
  }
  CHECK(log1.back().mean.total == log2.back().mean.total);
}

TEST_CASE("checkpoint round-trip preserves every tensor bit") {
  testutil::TempDir dir("lunw");
  LUnetConfig cfg;
  cfg.seed = 77;
  auto model = init_model<float>(cfg);
  // make the tensors non-trivial
  std::mt19937_64 rng(41);
  std::uniform_real_distribution<float> unit(-1.0f, 1.0f);
  for (auto& layer : model.layers) {
    for (Eigen::Index i = 0; i < layer.b.size(); ++i) layer.b[i] = unit(rng);
  }

  const auto path = dir.path() / "model.lunw";
  save_checkpoint(model, path);
  const auto back = load_checkpoint(path);
  CHECK(back.config == model.config);
  for (std::size_t i = 0; i < model.layers.size(); ++i) {
    CHECK((back.layers[i].w == model.layers[i].w).all());
    CHECK((back.layers[i].b == model.layers[i].b).all());
  }

  SUBCASE("second write is byte-identical") {
    const auto path2 = dir.path() / "model2.lunw";
    save_checkpoint(back, path2);
    std::ifstream f1(path, std::ios::binary), f2(path2, std::ios::binary);
    const std::string b1((std::istreambuf_iterator<char>(f1)), {});
    const std::string b2((std::istreambuf_iterator<char>(f2)), {});
    CHECK(b1 == b2);
  }

  SUBCASE("missing file raises MissingModel") {
    CHECK_RAISES_CODE(load_checkpoint(dir.path() / "nope.lunw"), ErrorCode::MissingModel);
  }
  SUBCASE("truncated checkpoint is rejected") {
    std::ifstream f(path, std::ios::binary);
    std::string bytes((std::istreambuf_iterator<char>(f)), {});
    bytes.resize(bytes.size() / 2);
    const auto bad = dir.path() / "trunc.lunw";
    std::ofstream out(bad, std::ios::binary);
    out.write(bytes.data(), std::streamsize(bytes.size()));
    out.close();
    CHECK_RAISES_CODE(load_checkpoint(bad), ErrorCode::TruncatedRecord);
  }
}
