#pragma once

#include <array>
#include <random>
#include <vector>

#include "skyshield/errors.hpp"
#include "skyshield/types.hpp"

namespace skyshield {

struct LUnetConfig {
  int in_channels = 2;    // 1 (merged) or 2 (separate polarities)
  int base_channels = 8;  // channels at full resolution
  int depth = 2;          // encoder levels; pools between them
  int kernel_size = 3;
  std::uint64_t seed = 0;

  void validate() const {
    if (in_channels != 1 && in_channels != 2)
      raise(ErrorCode::InvalidConfig, "in_channels must be 1 or 2");
    if (base_channels < 1) raise(ErrorCode::InvalidConfig, "base_channels must be >= 1");
    if (depth < 1) raise(ErrorCode::InvalidConfig, "depth must be >= 1");
    if (kernel_size != 3) raise(ErrorCode::InvalidConfig, "kernel_size must be 3");
  }

  friend bool operator==(const LUnetConfig&, const LUnetConfig&) = default;
};

/// Padded same-convolution with flat (out, in, ky, kx) weight storage.
template <typename Scalar>
struct Conv {
  int in_ch = 0;
  int out_ch = 0;
  int k = 3;
  Eigen::Array<Scalar, Eigen::Dynamic, 1> w;  // out*in*k*k
  Eigen::Array<Scalar, Eigen::Dynamic, 1> b;  // out

  Scalar wt(int o, int c, int ky, int kx) const {
    return w[((Eigen::Index(o) * in_ch + c) * k + ky) * k + kx];
  }
  Scalar& wt(int o, int c, int ky, int kx) {
    return w[((Eigen::Index(o) * in_ch + c) * k + ky) * k + kx];
  }
};

struct ConvShape {
  int in_ch, out_ch, k;
};

/// Conv shapes in declaration order: encoder levels top-down (two convs
/// each), decoder levels deepest-first (two convs each), then the 1x1 head.
/// Level i runs at base << i channels; decoder inputs concatenate the
/// upsampled deeper output with the skip from the same level.
inline std::vector<ConvShape> layer_plan(const LUnetConfig& cfg) {
  cfg.validate();
  std::vector<ConvShape> plan;
  for (int i = 0; i < cfg.depth; ++i) {
    const int in = i == 0 ? cfg.in_channels : cfg.base_channels << (i - 1);
    const int out = cfg.base_channels << i;
    plan.push_back({in, out, cfg.kernel_size});
    plan.push_back({out, out, cfg.kernel_size});
  }
  for (int j = cfg.depth - 2; j >= 0; --j) {
    const int skip = cfg.base_channels << j;
    const int up = cfg.base_channels << (j + 1);
    plan.push_back({up + skip, skip, cfg.kernel_size});
    plan.push_back({skip, skip, cfg.kernel_size});
  }
  plan.push_back({cfg.base_channels, 1, 1});
  return plan;
}

inline std::int64_t count_parameters(const LUnetConfig& cfg) {
  std::int64_t n = 0;
  for (const ConvShape& s : layer_plan(cfg)) {
    n += std::int64_t(s.out_ch) * s.in_ch * s.k * s.k + s.out_ch;
  }
  return n;
}

template <typename Scalar>
struct LUnetModel {
  LUnetConfig config;
  std::vector<Conv<Scalar>> layers;  // layer_plan order

  template <typename F>
  void for_each_tensor(F&& f) {
    for (std::size_t i = 0; i < layers.size(); ++i) {
      f(layers[i].w, i, /*is_bias=*/false);
      f(layers[i].b, i, /*is_bias=*/true);
    }
  }

  template <typename Other>
  LUnetModel<Other> cast() const {
    LUnetModel<Other> out;
    out.config = config;
    out.layers.reserve(layers.size());
    for (const Conv<Scalar>& c : layers) {
      Conv<Other> oc;
      oc.in_ch = c.in_ch;
      oc.out_ch = c.out_ch;
      oc.k = c.k;
      oc.w = c.w.template cast<Other>();
      oc.b = c.b.template cast<Other>();
      out.layers.push_back(std::move(oc));
    }
    return out;
  }
};

/// Deterministic fan-in-scaled uniform initialization, zero biases.
template <typename Scalar>
LUnetModel<Scalar> init_model(const LUnetConfig& cfg) {
  cfg.validate();
  LUnetModel<Scalar> m;
  m.config = cfg;
  std::mt19937_64 rng(cfg.seed);
  for (const ConvShape& s : layer_plan(cfg)) {
    Conv<Scalar> c;
    c.in_ch = s.in_ch;
    c.out_ch = s.out_ch;
    c.k = s.k;
    const double bound = std::sqrt(6.0 / (double(s.in_ch) * s.k * s.k));
    std::uniform_real_distribution<double> dist(-bound, bound);
    c.w.resize(Eigen::Index(s.out_ch) * s.in_ch * s.k * s.k);
    for (Eigen::Index i = 0; i < c.w.size(); ++i) c.w[i] = Scalar(dist(rng));
    c.b = Eigen::Array<Scalar, Eigen::Dynamic, 1>::Zero(s.out_ch);
    m.layers.push_back(std::move(c));
  }
  return m;
}

template <typename Scalar>
LUnetModel<Scalar> zeros_like(const LUnetModel<Scalar>& model) {
  LUnetModel<Scalar> z;
  z.config = model.config;
  z.layers.reserve(model.layers.size());
  for (const Conv<Scalar>& c : model.layers) {
    Conv<Scalar> g;
    g.in_ch = c.in_ch;
    g.out_ch = c.out_ch;
    g.k = c.k;
    g.w = Eigen::Array<Scalar, Eigen::Dynamic, 1>::Zero(c.w.size());
    g.b = Eigen::Array<Scalar, Eigen::Dynamic, 1>::Zero(c.b.size());
    z.layers.push_back(std::move(g));
  }
  return z;
}

namespace detail {

// Output squashing p = eps + (1 - 2 eps) * sigmoid(z): keeps heatmap values
// strictly inside (0, 1) in every precision and is smooth everywhere.
inline constexpr double kOutputEps = 1e-6;

template <typename Scalar>
Image<Scalar> stable_sigmoid(const Image<Scalar>& z) {
  return z.unaryExpr([](Scalar v) {
    if (v >= Scalar(0)) return Scalar(1) / (Scalar(1) + std::exp(-v));
    const Scalar e = std::exp(v);
    return e / (Scalar(1) + e);
  });
}

template <typename Scalar>
void conv_forward(const Conv<Scalar>& conv, const Planes<Scalar>& in, Planes<Scalar>& out) {
  const Eigen::Index h = in[0].rows(), w = in[0].cols();
  const int pad = conv.k / 2;
  out.resize(conv.out_ch);
  for (int o = 0; o < conv.out_ch; ++o) {
    out[o].setConstant(h, w, conv.b[o]);
    for (int c = 0; c < conv.in_ch; ++c) {
      for (int ky = 0; ky < conv.k; ++ky) {
        const Eigen::Index dy = ky - pad;
        const Eigen::Index oy = std::max<Eigen::Index>(0, -dy);
        const Eigen::Index rows = std::min(h, h - dy) - oy;
        if (rows <= 0) continue;
        for (int kx = 0; kx < conv.k; ++kx) {
          const Eigen::Index dx = kx - pad;
          const Eigen::Index ox = std::max<Eigen::Index>(0, -dx);
          const Eigen::Index cols = std::min(w, w - dx) - ox;
          if (cols <= 0) continue;
          out[o].block(oy, ox, rows, cols) +=
              conv.wt(o, c, ky, kx) * in[c].block(oy + dy, ox + dx, rows, cols);
        }
      }
    }
  }
}

// dIn and dW for one conv; dOut is the gradient at its (pre-activation)
// output. Accumulates into grad.
template <typename Scalar>
void conv_backward(const Conv<Scalar>& conv, const Planes<Scalar>& in,
                   const Planes<Scalar>& d_out, Conv<Scalar>& grad,
                   Planes<Scalar>* d_in) {
  const Eigen::Index h = in[0].rows(), w = in[0].cols();
  const int pad = conv.k / 2;
  if (d_in) {
    d_in->resize(conv.in_ch);
    for (int c = 0; c < conv.in_ch; ++c) (*d_in)[c] = Image<Scalar>::Zero(h, w);
  }
  for (int o = 0; o < conv.out_ch; ++o) {
    grad.b[o] += d_out[o].sum();
    for (int c = 0; c < conv.in_ch; ++c) {
      for (int ky = 0; ky < conv.k; ++ky) {
        const Eigen::Index dy = ky - pad;
        const Eigen::Index oy = std::max<Eigen::Index>(0, -dy);
        const Eigen::Index rows = std::min(h, h - dy) - oy;
        if (rows <= 0) continue;
        for (int kx = 0; kx < conv.k; ++kx) {
          const Eigen::Index dx = kx - pad;
          const Eigen::Index ox = std::max<Eigen::Index>(0, -dx);
          const Eigen::Index cols = std::min(w, w - dx) - ox;
          if (cols <= 0) continue;
          grad.wt(o, c, ky, kx) +=
              (d_out[o].block(oy, ox, rows, cols) * in[c].block(oy + dy, ox + dx, rows, cols))
                  .sum();
          if (d_in) {
            (*d_in)[c].block(oy + dy, ox + dx, rows, cols) +=
                conv.wt(o, c, ky, kx) * d_out[o].block(oy, ox, rows, cols);
          }
        }
      }
    }
  }
}

using ArgmaxPlane = Eigen::Array<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic>;

template <typename Scalar>
void maxpool_forward(const Planes<Scalar>& in, Planes<Scalar>& out,
                     std::vector<ArgmaxPlane>& argmax) {
  const Eigen::Index h = in[0].rows() / 2, w = in[0].cols() / 2;
  out.resize(in.size());
  argmax.resize(in.size());
  for (std::size_t c = 0; c < in.size(); ++c) {
    out[c].resize(h, w);
    argmax[c].resize(h, w);
    for (Eigen::Index y = 0; y < h; ++y) {
      for (Eigen::Index x = 0; x < w; ++x) {
        Scalar best = in[c](2 * y, 2 * x);
        std::uint8_t arg = 0;
        const Scalar cand[3] = {in[c](2 * y, 2 * x + 1), in[c](2 * y + 1, 2 * x),
                                in[c](2 * y + 1, 2 * x + 1)};
        for (std::uint8_t i = 0; i < 3; ++i) {
          if (cand[i] > best) {
            best = cand[i];
            arg = std::uint8_t(i + 1);
          }
        }
        out[c](y, x) = best;
        argmax[c](y, x) = arg;
      }
    }
  }
}

template <typename Scalar>
void maxpool_backward(const Planes<Scalar>& d_out, const std::vector<ArgmaxPlane>& argmax,
                      Planes<Scalar>& d_in) {
  const Eigen::Index h = d_out[0].rows(), w = d_out[0].cols();
  d_in.resize(d_out.size());
  for (std::size_t c = 0; c < d_out.size(); ++c) {
    d_in[c] = Image<Scalar>::Zero(2 * h, 2 * w);
    for (Eigen::Index y = 0; y < h; ++y) {
      for (Eigen::Index x = 0; x < w; ++x) {
        const std::uint8_t a = argmax[c](y, x);
        d_in[c](2 * y + a / 2, 2 * x + a % 2) += d_out[c](y, x);
      }
    }
  }
}

template <typename Scalar>
void upsample2x_forward(const Planes<Scalar>& in, Planes<Scalar>& out) {
  const Eigen::Index h = in[0].rows(), w = in[0].cols();
  out.resize(in.size());
  for (std::size_t c = 0; c < in.size(); ++c) {
    out[c].resize(2 * h, 2 * w);
    for (Eigen::Index y = 0; y < h; ++y) {
      for (Eigen::Index x = 0; x < w; ++x) {
        out[c].block(2 * y, 2 * x, 2, 2).setConstant(in[c](y, x));
      }
    }
  }
}

template <typename Scalar>
void upsample2x_backward(const Planes<Scalar>& d_out, Planes<Scalar>& d_in) {
  const Eigen::Index h = d_out[0].rows() / 2, w = d_out[0].cols() / 2;
  d_in.resize(d_out.size());
  for (std::size_t c = 0; c < d_out.size(); ++c) {
    d_in[c].resize(h, w);
    for (Eigen::Index y = 0; y < h; ++y) {
      for (Eigen::Index x = 0; x < w; ++x) {
        d_in[c](y, x) = d_out[c].block(2 * y, 2 * x, 2, 2).sum();
      }
    }
  }
}

template <typename Scalar>
void relu_inplace(Planes<Scalar>& planes) {
  for (auto& p : planes) p = p.max(Scalar(0));
}

}  // namespace detail

/// Every intermediate of one forward pass, kept for the exact backward.
template <typename Scalar>
struct LUnetWorkspace {
  Eigen::Index in_h = 0, in_w = 0;  // caller dims before padding
  struct ConvRecord {
    Planes<Scalar> input;   // post-activation input planes
    Planes<Scalar> preact;  // conv output before ReLU (ReLU mask source)
  };
  std::vector<ConvRecord> conv;                        // layer_plan order
  std::vector<Planes<Scalar>> skip;                    // encoder outputs per level
  std::vector<std::vector<detail::ArgmaxPlane>> pool;  // per pool stage
  Image<Scalar> sig;                                   // sigmoid(logits), padded
};

namespace detail {

template <typename Scalar>
Planes<Scalar> pad_input(const LUnetModel<Scalar>& model, const Planes<Scalar>& input,
                         Eigen::Index& in_h, Eigen::Index& in_w) {
  if (int(input.size()) != model.config.in_channels) {
    raise(ErrorCode::ShapeMismatch, "expected " + std::to_string(model.config.in_channels) +
                                        " input channels, got " + std::to_string(input.size()));
  }
  in_h = input[0].rows();
  in_w = input[0].cols();
  if (in_h < 1 || in_w < 1) raise(ErrorCode::ShapeMismatch, "empty input plane");
  for (const auto& pl : input) {
    if (pl.rows() != in_h || pl.cols() != in_w) {
      raise(ErrorCode::ShapeMismatch, "input planes disagree in shape");
    }
  }
  const Eigen::Index mult = Eigen::Index(1) << model.config.depth;
  const Eigen::Index ph = (in_h + mult - 1) / mult * mult;
  const Eigen::Index pw = (in_w + mult - 1) / mult * mult;
  Planes<Scalar> padded(input.size());
  for (std::size_t c = 0; c < input.size(); ++c) {
    if (ph == in_h && pw == in_w) {
      padded[c] = input[c];
    } else {
      padded[c] = Image<Scalar>::Zero(ph, pw);
      padded[c].topLeftCorner(in_h, in_w) = input[c];
    }
  }
  return padded;
}

}  // namespace detail

/// Forward pass caching all intermediates; returns the heatmap at the
/// caller's dimensions (internal padding cropped away).
template <typename Scalar>
Image<Scalar> forward_cached(const LUnetModel<Scalar>& model, const Planes<Scalar>& input,
                             LUnetWorkspace<Scalar>& ws) {
  const LUnetConfig& cfg = model.config;
  ws.conv.clear();
  ws.skip.clear();
  ws.pool.clear();

  Planes<Scalar> act = detail::pad_input(model, input, ws.in_h, ws.in_w);
  std::size_t li = 0;

  auto run_conv_relu_pair = [&](Planes<Scalar>& a) {
    for (int rep = 0; rep < 2; ++rep, ++li) {
      typename LUnetWorkspace<Scalar>::ConvRecord rec;
      rec.input = a;
      detail::conv_forward(model.layers[li], rec.input, rec.preact);
      a = rec.preact;
      detail::relu_inplace(a);
      ws.conv.push_back(std::move(rec));
    }
  };

  for (int i = 0; i < cfg.depth; ++i) {
    if (i > 0) {
      Planes<Scalar> pooled;
      ws.pool.emplace_back();
      detail::maxpool_forward(act, pooled, ws.pool.back());
      act = std::move(pooled);
    }
    run_conv_relu_pair(act);
    ws.skip.push_back(act);
  }

  for (int j = cfg.depth - 2; j >= 0; --j) {
    Planes<Scalar> up;
    detail::upsample2x_forward(act, up);
    Planes<Scalar> cat;
    cat.reserve(up.size() + ws.skip[j].size());
    for (auto& pl : up) cat.push_back(std::move(pl));
    for (const auto& pl : ws.skip[j]) cat.push_back(pl);
    act = std::move(cat);
    run_conv_relu_pair(act);
  }

  // 1x1 head + squashed sigmoid
  typename LUnetWorkspace<Scalar>::ConvRecord head;
  head.input = std::move(act);
  detail::conv_forward(model.layers[li], head.input, head.preact);
  ws.sig = detail::stable_sigmoid(head.preact[0]);
  ws.conv.push_back(std::move(head));

  const Scalar eps = Scalar(detail::kOutputEps);
  Image<Scalar> out = eps + (Scalar(1) - Scalar(2) * eps) * ws.sig;
  return out.topLeftCorner(ws.in_h, ws.in_w);
}

template <typename Scalar>
Image<Scalar> forward(const LUnetModel<Scalar>& model, const Planes<Scalar>& input) {
  LUnetWorkspace<Scalar> ws;
  return forward_cached(model, input, ws);
}

template <typename Scalar>
struct LUnetGradients {
  LUnetModel<Scalar> params;  // same layout as the model, holds d/dtheta
  Planes<Scalar> input;       // d/dinput at caller dimensions
};

/// Exact gradients of the forward pass; upstream is dLoss/dHeatmap at the
/// caller's dimensions of the pass recorded in ws.
template <typename Scalar>
LUnetGradients<Scalar> backward(const LUnetModel<Scalar>& model,
                                const LUnetWorkspace<Scalar>& ws,
                                const Image<Scalar>& upstream) {
  const LUnetConfig& cfg = model.config;
  if (upstream.rows() != ws.in_h || upstream.cols() != ws.in_w) {
    raise(ErrorCode::ShapeMismatch, "upstream gradient shape mismatch");
  }

  LUnetGradients<Scalar> g;
  g.params = zeros_like(model);

  // through crop, squash and sigmoid
  const Scalar eps = Scalar(detail::kOutputEps);
  Image<Scalar> d_logit = Image<Scalar>::Zero(ws.sig.rows(), ws.sig.cols());
  d_logit.topLeftCorner(ws.in_h, ws.in_w) = upstream;
  d_logit *= (Scalar(1) - Scalar(2) * eps) * ws.sig * (Scalar(1) - ws.sig);

  std::size_t li = ws.conv.size() - 1;
  Planes<Scalar> d_act;
  detail::conv_backward(model.layers[li], ws.conv[li].input, Planes<Scalar>{d_logit},
                        g.params.layers[li], &d_act);

  auto back_conv_relu_pair = [&](Planes<Scalar>& d) {
    for (int rep = 0; rep < 2; ++rep) {
      --li;
      Planes<Scalar> d_pre(d.size());
      for (std::size_t c = 0; c < d.size(); ++c) {
        d_pre[c] = d[c] * (ws.conv[li].preact[c] > Scalar(0)).template cast<Scalar>();
      }
      Planes<Scalar> d_in;
      detail::conv_backward(model.layers[li], ws.conv[li].input, d_pre,
                            g.params.layers[li], &d_in);
      d = std::move(d_in);
    }
  };

  std::vector<Planes<Scalar>> d_skip(cfg.depth);
  for (int j = 0; j <= cfg.depth - 2; ++j) {
    back_conv_relu_pair(d_act);
    // split concat [upsampled, skip]
    const std::size_t up_ch = d_act.size() - ws.skip[j].size();
    Planes<Scalar> d_up(d_act.begin(), d_act.begin() + up_ch);
    d_skip[j].assign(d_act.begin() + up_ch, d_act.end());
    detail::upsample2x_backward(d_up, d_act);
  }

  for (int i = cfg.depth - 1; i >= 0; --i) {
    if (i < cfg.depth - 1) {
      // gradient entering this level's output: pooled path + skip use
      for (std::size_t c = 0; c < d_act.size(); ++c) d_act[c] += d_skip[i][c];
    }
    back_conv_relu_pair(d_act);
    if (i > 0) {
      Planes<Scalar> d_pooled;
      detail::maxpool_backward(d_act, ws.pool[std::size_t(i) - 1], d_pooled);
      d_act = std::move(d_pooled);
    }
  }

  g.input.resize(d_act.size());
  for (std::size_t c = 0; c < d_act.size(); ++c) {
    g.input[c] = d_act[c].topLeftCorner(ws.in_h, ws.in_w);
  }
  return g;
}

}  // namespace skyshield
