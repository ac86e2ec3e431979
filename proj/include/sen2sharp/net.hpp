#ifndef SEN2SHARP_NET_HPP
#define SEN2SHARP_NET_HPP

#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <json.hpp>

#include "sen2sharp/detail/bytes.hpp"
#include "sen2sharp/detail/random.hpp"
#include "sen2sharp/error.hpp"
#include "sen2sharp/flags.hpp"
#include "sen2sharp/tensor.hpp"
#include "sen2sharp/threads.hpp"

namespace sen2sharp {

// --- convolution ----------------------------------------------------------

/// 2-D convolution layer, cross-correlation convention, zero padding k/2.
struct ConvLayer {
  std::size_t in_ch = 0;
  std::size_t out_ch = 0;
  std::size_t k = 3;
  std::vector<double> weights;  // out_ch x in_ch x k x k
  std::vector<double> bias;     // out_ch

  ConvLayer() = default;
  ConvLayer(std::size_t in, std::size_t out, std::size_t kernel)
      : in_ch(in), out_ch(out), k(kernel), weights(out * in * kernel * kernel, 0.0), bias(out, 0.0) {
    require(kernel % 2 == 1, Errc::InvalidArgument, "kernel size must be odd");
  }

  double& w(std::size_t o, std::size_t i, std::size_t ky, std::size_t kx) {
    return weights[((o * in_ch + i) * k + ky) * k + kx];
  }
  double w(std::size_t o, std::size_t i, std::size_t ky, std::size_t kx) const {
    return weights[((o * in_ch + i) * k + ky) * k + kx];
  }

  friend bool operator==(const ConvLayer&, const ConvLayer&) = default;
};

struct ConvGrads {
  Tensor4 grad_x;
  std::vector<double> grad_weights;
  std::vector<double> grad_bias;
};

namespace detail {

// Valid output range [lo, hi) along one axis for a tap offset d, so that
// lo + d and hi - 1 + d stay inside [0, n).
inline std::pair<std::size_t, std::size_t> tap_range(std::ptrdiff_t d, std::size_t n) {
  const auto sn = static_cast<std::ptrdiff_t>(n);
  const std::ptrdiff_t lo = std::max<std::ptrdiff_t>(0, -d);
  const std::ptrdiff_t hi = std::min<std::ptrdiff_t>(sn, sn - d);
  if (hi <= lo) return {0, 0};
  return {static_cast<std::size_t>(lo), static_cast<std::size_t>(hi)};
}

}  // namespace detail

namespace detail {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstRowMap = Eigen::Map<const RowMatrix>;
using RowMap = Eigen::Map<RowMatrix>;

// Unfolds one sample (C x H x W) into a (C*k*k) x (H*W) matrix whose row
// (c, ky, kx) holds the input shifted by (ky - r, kx - r), zero outside.
inline void im2col(const double* src, std::size_t channels, std::size_t h, std::size_t w, std::size_t k,
                   double* cols) {
  const auto r = static_cast<std::ptrdiff_t>(k / 2);
  const std::size_t plane = h * w;
  for (std::size_t c = 0; c < channels; ++c) {
    const double* in = src + c * plane;
    for (std::size_t ky = 0; ky < k; ++ky) {
      const std::ptrdiff_t dy = static_cast<std::ptrdiff_t>(ky) - r;
      const auto [y0, y1] = tap_range(dy, h);
      for (std::size_t kx = 0; kx < k; ++kx) {
        const std::ptrdiff_t dx = static_cast<std::ptrdiff_t>(kx) - r;
        const auto [x0, x1] = tap_range(dx, w);
        double* row = cols + ((c * k + ky) * k + kx) * plane;
        std::fill(row, row + plane, 0.0);
        for (std::size_t y = y0; y < y1; ++y) {
          const double* s = in + static_cast<std::ptrdiff_t>(y * w) + dy * static_cast<std::ptrdiff_t>(w) + dx;
          double* d = row + y * w;
          for (std::size_t xx = x0; xx < x1; ++xx) d[xx] = s[xx];
        }
      }
    }
  }
}

// Adjoint of im2col: scatters column gradients back onto the input grid.
inline void col2im(const double* cols, std::size_t channels, std::size_t h, std::size_t w, std::size_t k,
                   double* dst) {
  const auto r = static_cast<std::ptrdiff_t>(k / 2);
  const std::size_t plane = h * w;
  for (std::size_t c = 0; c < channels; ++c) {
    double* out = dst + c * plane;
    for (std::size_t ky = 0; ky < k; ++ky) {
      const std::ptrdiff_t dy = static_cast<std::ptrdiff_t>(ky) - r;
      const auto [y0, y1] = tap_range(dy, h);
      for (std::size_t kx = 0; kx < k; ++kx) {
        const std::ptrdiff_t dx = static_cast<std::ptrdiff_t>(kx) - r;
        const auto [x0, x1] = tap_range(dx, w);
        const double* row = cols + ((c * k + ky) * k + kx) * plane;
        for (std::size_t y = y0; y < y1; ++y) {
          double* d = out + static_cast<std::ptrdiff_t>(y * w) + dy * static_cast<std::ptrdiff_t>(w) + dx;
          const double* s = row + y * w;
          for (std::size_t xx = x0; xx < x1; ++xx) d[xx] += s[xx];
        }
      }
    }
  }
}

}  // namespace detail

inline Tensor4 conv2d_forward(const Tensor4& x, const ConvLayer& layer) {
  require(x.channels() == layer.in_ch, Errc::ShapeMismatch,
          "conv input has " + std::to_string(x.channels()) + " channels, layer expects " +
              std::to_string(layer.in_ch));
  const std::size_t h = x.height(), w = x.width(), plane = h * w;
  const std::size_t depth = layer.in_ch * layer.k * layer.k;
  Tensor4 out(x.batch(), layer.out_ch, h, w);
  const detail::ConstRowMap weights(layer.weights.data(), static_cast<Eigen::Index>(layer.out_ch),
                                    static_cast<Eigen::Index>(depth));

  parallel_for(x.batch(), [&](std::size_t n) {
    std::vector<double> cols(depth * plane);
    detail::im2col(x.channel(n, 0).data(), layer.in_ch, h, w, layer.k, cols.data());
    detail::RowMap dst(out.channel(n, 0).data(), static_cast<Eigen::Index>(layer.out_ch),
                       static_cast<Eigen::Index>(plane));
    for (std::size_t o = 0; o < layer.out_ch; ++o) dst.row(static_cast<Eigen::Index>(o)).setConstant(layer.bias[o]);
    dst.noalias() += weights * detail::ConstRowMap(cols.data(), static_cast<Eigen::Index>(depth),
                                                   static_cast<Eigen::Index>(plane));
  });
  return out;
}

/// Exact gradients of conv2d_forward. Per-sample weight gradients are
/// reduced in batch order, so results do not depend on the worker count.
inline ConvGrads conv2d_backward(const Tensor4& x, const ConvLayer& layer, const Tensor4& grad_out,
                                 bool need_grad_x = true) {
  require(x.channels() == layer.in_ch, Errc::ShapeMismatch, "conv backward: input channels");
  require(grad_out.batch() == x.batch() && grad_out.channels() == layer.out_ch &&
              grad_out.height() == x.height() && grad_out.width() == x.width(),
          Errc::ShapeMismatch, "conv backward: grad_out shape " + grad_out.shape_string());
  const std::size_t h = x.height(), w = x.width(), plane = h * w;
  const std::size_t depth = layer.in_ch * layer.k * layer.k;
  const auto O = static_cast<Eigen::Index>(layer.out_ch), K = static_cast<Eigen::Index>(depth),
             P = static_cast<Eigen::Index>(plane);
  const detail::ConstRowMap weights(layer.weights.data(), O, K);

  ConvGrads g;
  g.grad_x = need_grad_x ? Tensor4(x.batch(), x.channels(), h, w) : Tensor4();
  std::vector<detail::RowMatrix> gw(x.batch());
  std::vector<Eigen::VectorXd> gb(x.batch());

  parallel_for(x.batch(), [&](std::size_t n) {
    std::vector<double> cols(depth * plane);
    detail::im2col(x.channel(n, 0).data(), layer.in_ch, h, w, layer.k, cols.data());
    const detail::ConstRowMap go(grad_out.channel(n, 0).data(), O, P);
    // plain loop: Eigen's vectorized row sums peel by address alignment,
    // which would make the summation order vary between runs
    gb[n] = Eigen::VectorXd::Zero(O);
    for (Eigen::Index o = 0; o < O; ++o) {
      const double* row = grad_out.channel(n, static_cast<std::size_t>(o)).data();
      double acc = 0.0;
      for (std::size_t i = 0; i < plane; ++i) acc += row[i];
      gb[n][o] = acc;
    }
    gw[n].noalias() = go * detail::ConstRowMap(cols.data(), K, P).transpose();
    if (need_grad_x) {
      detail::RowMap gcols(cols.data(), K, P);
      gcols.noalias() = weights.transpose() * go;
      detail::col2im(cols.data(), layer.in_ch, h, w, layer.k, g.grad_x.channel(n, 0).data());
    }
  });

  detail::RowMatrix sum_w = detail::RowMatrix::Zero(O, K);
  Eigen::VectorXd sum_b = Eigen::VectorXd::Zero(O);
  for (std::size_t n = 0; n < x.batch(); ++n) {
    sum_w += gw[n];
    sum_b += gb[n];
  }
  g.grad_weights.assign(sum_w.data(), sum_w.data() + sum_w.size());
  g.grad_bias.assign(sum_b.data(), sum_b.data() + sum_b.size());
  return g;
}

// --- ReLU -----------------------------------------------------------------

inline Tensor4 relu_forward(const Tensor4& x) {
  Tensor4 out = x;
  for (double& v : out.values()) v = v > 0.0 ? v : 0.0;
  return out;
}

/// x is the forward input; the subgradient at 0 is 0.
inline Tensor4 relu_backward(const Tensor4& x, const Tensor4& grad_out) {
  require(x.same_shape(grad_out), Errc::ShapeMismatch, "relu backward shape");
  Tensor4 g = grad_out;
  for (std::size_t i = 0; i < g.size(); ++i)
    if (!(x.values()[i] > 0.0)) g.values()[i] = 0.0;
  return g;
}

// --- batch normalization --------------------------------------------------

struct BatchNormLayer {
  std::size_t channels = 0;
  std::vector<double> gamma, beta;
  std::vector<double> running_mean, running_var;
  double momentum = 0.1;  // weight of the newest batch statistic
  double epsilon = 1e-5;

  BatchNormLayer() = default;
  explicit BatchNormLayer(std::size_t c, double momentum_ = 0.1, double epsilon_ = 1e-5)
      : channels(c),
        gamma(c, 1.0),
        beta(c, 0.0),
        running_mean(c, 0.0),
        running_var(c, 1.0),
        momentum(momentum_),
        epsilon(epsilon_) {}

  friend bool operator==(const BatchNormLayer&, const BatchNormLayer&) = default;
};

enum class BnMode { Train, Infer };

/// Saved by a train-mode forward pass for the backward pass.
struct BatchNormCache {
  Tensor4 x_hat;
  std::vector<double> inv_std;
  bool valid = false;
};

/// Normalizes with the running statistics; an affine map per channel.
inline Tensor4 batchnorm_infer(const Tensor4& x, const BatchNormLayer& bn) {
  require(x.channels() == bn.channels, Errc::ShapeMismatch,
          "batchnorm expects " + std::to_string(bn.channels) + " channels, got " +
              std::to_string(x.channels()));
  Tensor4 out(x.batch(), x.channels(), x.height(), x.width());
  for (std::size_t c = 0; c < bn.channels; ++c) {
    const double inv = 1.0 / std::sqrt(bn.running_var[c] + bn.epsilon);
    const double scale = bn.gamma[c] * inv;
    const double shift = bn.beta[c] - bn.running_mean[c] * scale;
    for (std::size_t n = 0; n < x.batch(); ++n) {
      auto src = x.channel(n, c);
      auto dst = out.channel(n, c);
      for (std::size_t p = 0; p < src.size(); ++p) dst[p] = src[p] * scale + shift;
    }
  }
  return out;
}

/// Train mode normalizes with batch statistics (biased variance) and folds
/// them into the running averages (unbiased variance). Infer mode uses the
/// running averages only.
inline Tensor4 batchnorm_forward(const Tensor4& x, BatchNormLayer& bn, BnMode mode,
                                 BatchNormCache* cache = nullptr) {
  require(x.channels() == bn.channels, Errc::ShapeMismatch,
          "batchnorm expects " + std::to_string(bn.channels) + " channels, got " +
              std::to_string(x.channels()));
  Tensor4 out(x.batch(), x.channels(), x.height(), x.width());
  const std::size_t count = x.batch() * x.plane();

  if (mode == BnMode::Infer) return batchnorm_infer(x, bn);

  require(count >= 2, Errc::DegenerateBatch, "train-mode batchnorm needs at least 2 values per channel");
  BatchNormCache local;
  BatchNormCache& c_out = cache ? *cache : local;
  c_out.x_hat = Tensor4(x.batch(), x.channels(), x.height(), x.width());
  c_out.inv_std.assign(bn.channels, 0.0);
  const auto m = static_cast<double>(count);
  for (std::size_t c = 0; c < bn.channels; ++c) {
    double sum = 0.0;
    for (std::size_t n = 0; n < x.batch(); ++n)
      for (double v : x.channel(n, c)) sum += v;
    const double mu = sum / m;
    double sq = 0.0;
    for (std::size_t n = 0; n < x.batch(); ++n)
      for (double v : x.channel(n, c)) sq += (v - mu) * (v - mu);
    const double var = sq / m;
    const double inv = 1.0 / std::sqrt(var + bn.epsilon);
    c_out.inv_std[c] = inv;
    for (std::size_t n = 0; n < x.batch(); ++n) {
      auto src = x.channel(n, c);
      auto xh = c_out.x_hat.channel(n, c);
      auto dst = out.channel(n, c);
      for (std::size_t p = 0; p < src.size(); ++p) {
        xh[p] = (src[p] - mu) * inv;
        dst[p] = bn.gamma[c] * xh[p] + bn.beta[c];
      }
    }
    bn.running_mean[c] = (1.0 - bn.momentum) * bn.running_mean[c] + bn.momentum * mu;
    bn.running_var[c] = (1.0 - bn.momentum) * bn.running_var[c] + bn.momentum * var * m / (m - 1.0);
  }
  c_out.valid = true;
  return out;
}

struct BatchNormGrads {
  Tensor4 grad_x;
  std::vector<double> grad_gamma;
  std::vector<double> grad_beta;
};

inline BatchNormGrads batchnorm_backward(const BatchNormCache& cache, const BatchNormLayer& bn,
                                         const Tensor4& grad_out) {
  require(cache.valid, Errc::MissingCache, "batchnorm backward needs a train-mode forward cache");
  require(cache.x_hat.same_shape(grad_out), Errc::ShapeMismatch, "batchnorm backward shape");
  const Tensor4& xh = cache.x_hat;
  BatchNormGrads g{Tensor4(xh.batch(), xh.channels(), xh.height(), xh.width()),
                   std::vector<double>(bn.channels, 0.0), std::vector<double>(bn.channels, 0.0)};
  const auto m = static_cast<double>(xh.batch() * xh.plane());
  for (std::size_t c = 0; c < bn.channels; ++c) {
    double sum_g = 0.0, sum_gx = 0.0;
    for (std::size_t n = 0; n < xh.batch(); ++n) {
      auto go = grad_out.channel(n, c);
      auto xc = xh.channel(n, c);
      for (std::size_t p = 0; p < go.size(); ++p) {
        sum_g += go[p];
        sum_gx += go[p] * xc[p];
      }
    }
    g.grad_beta[c] = sum_g;
    g.grad_gamma[c] = sum_gx;
    const double k = bn.gamma[c] * cache.inv_std[c] / m;
    for (std::size_t n = 0; n < xh.batch(); ++n) {
      auto go = grad_out.channel(n, c);
      auto xc = xh.channel(n, c);
      auto gx = g.grad_x.channel(n, c);
      for (std::size_t p = 0; p < go.size(); ++p) gx[p] = k * (m * go[p] - sum_g - xc[p] * sum_gx);
    }
  }
  return g;
}

// --- loss -----------------------------------------------------------------

struct LossResult {
  double loss = 0.0;
  Tensor4 grad;
};

/// Mean absolute error; gradient sign(pred - target) / count with sign(0) = 0.
inline LossResult l1_loss(const Tensor4& pred, const Tensor4& target) {
  require(pred.same_shape(target), Errc::ShapeMismatch,
          "l1 loss shapes " + pred.shape_string() + " vs " + target.shape_string());
  LossResult r{0.0, Tensor4(pred.batch(), pred.channels(), pred.height(), pred.width())};
  const auto count = static_cast<double>(pred.size());
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double d = pred.values()[i] - target.values()[i];
    r.loss += std::abs(d);
    r.grad.values()[i] = d > 0.0 ? 1.0 / count : (d < 0.0 ? -1.0 / count : 0.0);
  }
  r.loss /= count;
  return r;
}

// --- fusion network -------------------------------------------------------

/// Input batch norm followed by three convolutions; ReLU after the first two.
struct FusionModel {
  AblationFlags flags;
  BatchNormLayer bn;
  std::array<ConvLayer, 3> layers;

  void validate() const {
    const std::size_t in = flags.input_channels();
    require(bn.channels == in && bn.gamma.size() == in && bn.beta.size() == in &&
                bn.running_mean.size() == in && bn.running_var.size() == in,
            Errc::ChannelMismatch, "batchnorm width does not match the ablation flags");
    require(layers[0].in_ch == in, Errc::ChannelMismatch,
            "first layer expects " + std::to_string(layers[0].in_ch) + " channels, flags imply " +
                std::to_string(in));
    require(layers[1].in_ch == layers[0].out_ch && layers[2].in_ch == layers[1].out_ch,
            Errc::ChannelMismatch, "inner channel chain is inconsistent");
    require(layers[2].out_ch == kTargetBands, Errc::ChannelMismatch, "last layer must emit 6 bands");
    for (const ConvLayer& l : layers)
      require(l.k % 2 == 1 && l.weights.size() == l.out_ch * l.in_ch * l.k * l.k &&
                  l.bias.size() == l.out_ch,
              Errc::ShapeMismatch, "conv parameter sizes are inconsistent");
  }

  friend bool operator==(const FusionModel&, const FusionModel&) = default;
};

struct ModelShape {
  std::size_t hidden1 = 48;
  std::size_t hidden2 = 32;
  std::size_t kernel = 3;
  double bn_momentum = 0.1;
  double bn_epsilon = 1e-5;
};

/// Hidden layers get He-normal weights; the output layer starts near zero
/// so the untrained model stays close to the upsampled input.
inline FusionModel make_model(const AblationFlags& flags, const ModelShape& shape, std::uint64_t seed) {
  FusionModel m;
  m.flags = flags;
  const std::size_t in = flags.input_channels();
  m.bn = BatchNormLayer(in, shape.bn_momentum, shape.bn_epsilon);
  m.layers = {ConvLayer(in, shape.hidden1, shape.kernel),
              ConvLayer(shape.hidden1, shape.hidden2, shape.kernel),
              ConvLayer(shape.hidden2, kTargetBands, shape.kernel)};
  std::mt19937_64 rng(seed);
  for (std::size_t li = 0; li < m.layers.size(); ++li) {
    ConvLayer& l = m.layers[li];
    const auto fan_in = static_cast<double>(l.in_ch * l.k * l.k);
    const double std = li + 1 < m.layers.size() ? std::sqrt(2.0 / fan_in) : 1e-2 / std::sqrt(fan_in);
    for (double& wt : l.weights) wt = std * detail::normal(rng);
  }
  m.validate();
  return m;
}

/// Trainable parameters in declared order: gamma, beta, then weights and
/// bias of each conv layer.
inline std::array<std::span<double>, 8> trainable_parameters(FusionModel& m) {
  return {m.bn.gamma, m.bn.beta, m.layers[0].weights, m.layers[0].bias,
          m.layers[1].weights, m.layers[1].bias, m.layers[2].weights, m.layers[2].bias};
}

inline std::array<std::span<const double>, 8> trainable_parameters(const FusionModel& m) {
  return {m.bn.gamma, m.bn.beta, m.layers[0].weights, m.layers[0].bias,
          m.layers[1].weights, m.layers[1].bias, m.layers[2].weights, m.layers[2].bias};
}

/// Mirrors trainable_parameters.
using ModelGrads = std::array<std::vector<double>, 8>;

inline ModelGrads zero_grads(const FusionModel& m) {
  ModelGrads g;
  const auto params = trainable_parameters(m);
  for (std::size_t i = 0; i < params.size(); ++i) g[i].assign(params[i].size(), 0.0);
  return g;
}

struct ForwardTrace {
  BatchNormCache bn;
  Tensor4 normalized, pre1, act1, pre2, act2;
};

/// Residual prediction y-hat for an input stack. Train mode updates the
/// batch-norm running statistics and fills the trace.
inline Tensor4 network_forward(FusionModel& m, const Tensor4& input, BnMode mode,
                               ForwardTrace* trace = nullptr) {
  ForwardTrace local;
  ForwardTrace& t = trace ? *trace : local;
  t.normalized = batchnorm_forward(input, m.bn, mode, mode == BnMode::Train ? &t.bn : nullptr);
  t.pre1 = conv2d_forward(t.normalized, m.layers[0]);
  t.act1 = relu_forward(t.pre1);
  t.pre2 = conv2d_forward(t.act1, m.layers[1]);
  t.act2 = relu_forward(t.pre2);
  return conv2d_forward(t.act2, m.layers[2]);
}

inline Tensor4 network_infer(const FusionModel& m, const Tensor4& input) {
  const Tensor4 a1 = relu_forward(conv2d_forward(batchnorm_infer(input, m.bn), m.layers[0]));
  const Tensor4 a2 = relu_forward(conv2d_forward(a1, m.layers[1]));
  return conv2d_forward(a2, m.layers[2]);
}

inline ModelGrads network_backward(const FusionModel& m, const ForwardTrace& t, const Tensor4& grad_out) {
  ModelGrads g;
  ConvGrads g3 = conv2d_backward(t.act2, m.layers[2], grad_out);
  ConvGrads g2 = conv2d_backward(t.act1, m.layers[1], relu_backward(t.pre2, g3.grad_x));
  ConvGrads g1 = conv2d_backward(t.normalized, m.layers[0], relu_backward(t.pre1, g2.grad_x));
  BatchNormGrads gb = batchnorm_backward(t.bn, m.bn, g1.grad_x);
  g[0] = std::move(gb.grad_gamma);
  g[1] = std::move(gb.grad_beta);
  g[2] = std::move(g1.grad_weights);
  g[3] = std::move(g1.grad_bias);
  g[4] = std::move(g2.grad_weights);
  g[5] = std::move(g2.grad_bias);
  g[6] = std::move(g3.grad_weights);
  g[7] = std::move(g3.grad_bias);
  return g;
}

// --- optimizer ------------------------------------------------------------

struct OptimizerState {
  double learning_rate = 1e-3;
  double momentum = 0.9;
  ModelGrads velocity;

  OptimizerState() = default;
  OptimizerState(const FusionModel& m, double lr, double mom)
      : learning_rate(lr), momentum(mom), velocity(zero_grads(m)) {
    require(lr >= 0.0, Errc::InvalidArgument, "learning rate must be non-negative");
    require(mom >= 0.0 && mom < 1.0, Errc::InvalidArgument, "momentum must lie in [0, 1)");
  }

  friend bool operator==(const OptimizerState&, const OptimizerState&) = default;
};

/// v <- momentum * v - lr * g; p <- p + v.
inline void sgd_step(FusionModel& m, const ModelGrads& grads, OptimizerState& opt) {
  auto params = trainable_parameters(m);
  for (std::size_t i = 0; i < params.size(); ++i) {
    require(grads[i].size() == params[i].size() && opt.velocity[i].size() == params[i].size(),
            Errc::ShapeMismatch, "gradient/velocity shape does not match parameter block " +
                                     std::to_string(i));
    for (std::size_t j = 0; j < params[i].size(); ++j) {
      opt.velocity[i][j] = opt.momentum * opt.velocity[i][j] - opt.learning_rate * grads[i][j];
      params[i][j] += opt.velocity[i][j];
    }
  }
}

// --- ".fmc" checkpoints ---------------------------------------------------

inline constexpr std::string_view kCheckpointMagic = "FMC1";
inline constexpr int kCheckpointVersion = 1;

struct Checkpoint {
  FusionModel model;
  std::optional<OptimizerState> optimizer;
};

inline std::vector<std::uint8_t> encode_checkpoint(const FusionModel& m,
                                                   const OptimizerState* opt = nullptr) {
  m.validate();
  nlohmann::json arch = nlohmann::json::array();
  for (const ConvLayer& l : m.layers) arch.push_back({{"in", l.in_ch}, {"out", l.out_ch}, {"k", l.k}});
  nlohmann::json header = {
      {"version", kCheckpointVersion},
      {"arch", arch},
      {"flags", {{"use_z", m.flags.use_z}, {"use_hpf", m.flags.use_hpf}}},
      {"bn", {{"channels", m.bn.channels}, {"momentum", m.bn.momentum}, {"epsilon", m.bn.epsilon}}},
      {"optimizer", opt ? nlohmann::json{{"learning_rate", opt->learning_rate},
                                         {"momentum", opt->momentum}}
                        : nlohmann::json(nullptr)},
  };
  std::vector<std::uint8_t> out = detail::frame_header(kCheckpointMagic, header.dump());
  auto put = [&](std::span<const double> v) {
    for (double d : v) detail::put_f64(out, d);
  };
  put(m.bn.gamma);
  put(m.bn.beta);
  put(m.bn.running_mean);
  put(m.bn.running_var);
  for (const ConvLayer& l : m.layers) {
    put(l.weights);
    put(l.bias);
  }
  if (opt)
    for (const auto& v : opt->velocity) put(v);
  return out;
}

inline Checkpoint decode_checkpoint(std::span<const std::uint8_t> bytes) {
  auto [text, offset] = detail::split_framed_header(bytes, kCheckpointMagic, Errc::MalformedCheckpoint);
  nlohmann::json h;
  try {
    h = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    fail(Errc::MalformedCheckpoint, std::string("header is not valid JSON: ") + e.what());
  }
  Checkpoint ck;
  try {
    require(h.is_object() && h.contains("version") && h.contains("arch") && h.contains("flags") &&
                h.contains("bn"),
            Errc::MalformedCheckpoint, "header lacks version/arch/flags/bn");
    if (h.at("version").get<int>() != kCheckpointVersion)
      fail(Errc::VersionMismatch, "checkpoint version " + h.at("version").dump() + " is not supported");
    FusionModel& m = ck.model;
    m.flags.use_z = h.at("flags").at("use_z").get<bool>();
    m.flags.use_hpf = h.at("flags").at("use_hpf").get<bool>();
    const auto& bn = h.at("bn");
    m.bn = BatchNormLayer(bn.at("channels").get<std::size_t>(), bn.at("momentum").get<double>(),
                          bn.at("epsilon").get<double>());
    const auto& arch = h.at("arch");
    require(arch.is_array() && arch.size() == 3, Errc::MalformedCheckpoint, "arch must list 3 layers");
    for (std::size_t i = 0; i < 3; ++i)
      m.layers[i] = ConvLayer(arch[i].at("in").get<std::size_t>(), arch[i].at("out").get<std::size_t>(),
                              arch[i].at("k").get<std::size_t>());
    if (h.contains("optimizer") && !h.at("optimizer").is_null()) {
      OptimizerState opt;
      opt.learning_rate = h.at("optimizer").at("learning_rate").get<double>();
      opt.momentum = h.at("optimizer").at("momentum").get<double>();
      opt.velocity = zero_grads(m);
      ck.optimizer = std::move(opt);
    }
  } catch (const nlohmann::json::exception& e) {
    fail(Errc::MalformedCheckpoint, std::string("bad header field: ") + e.what());
  } catch (const Error& e) {
    if (e.code() == Errc::VersionMismatch || e.code() == Errc::MalformedCheckpoint) throw;
    fail(Errc::MalformedCheckpoint, e.what());
  }
  try {
    ck.model.validate();
  } catch (const Error& e) {
    fail(Errc::MalformedCheckpoint, e.what());
  }

  FusionModel& m = ck.model;
  std::size_t expected = 4 * m.bn.channels;
  for (const ConvLayer& l : m.layers) expected += l.weights.size() + l.bias.size();
  if (ck.optimizer)
    for (const auto& v : ck.optimizer->velocity) expected += v.size();
  require(bytes.size() - offset == expected * 8, Errc::MalformedCheckpoint,
          "parameter payload has " + std::to_string(bytes.size() - offset) + " bytes, expected " +
              std::to_string(expected * 8));
  const std::uint8_t* p = bytes.data() + offset;
  auto get = [&](std::span<double> v) {
    for (double& d : v) {
      d = detail::get_f64(p);
      p += 8;
    }
  };
  get(m.bn.gamma);
  get(m.bn.beta);
  get(m.bn.running_mean);
  get(m.bn.running_var);
  for (ConvLayer& l : m.layers) {
    get(l.weights);
    get(l.bias);
  }
  if (ck.optimizer)
    for (auto& v : ck.optimizer->velocity) get(v);
  return ck;
}

inline void save_checkpoint(const FusionModel& m, const std::filesystem::path& path,
                            const OptimizerState* opt = nullptr) {
  detail::write_file(path, encode_checkpoint(m, opt));
}

inline Checkpoint load_checkpoint(const std::filesystem::path& path) {
  return decode_checkpoint(detail::read_file(path));
}

/// Rejects a model whose ablation flags differ from the pipeline's.
inline void require_flags(const FusionModel& m, const AblationFlags& pipeline) {
  if (m.flags != pipeline)
    fail(Errc::FlagMismatch, "model was trained with " + m.flags.label() + " (" +
                                 std::to_string(m.flags.input_channels()) +
                                 " input channels), pipeline expects " + pipeline.label() + " (" +
                                 std::to_string(pipeline.input_channels()) + " input channels)");
}

}  // namespace sen2sharp

#endif  // SEN2SHARP_NET_HPP
