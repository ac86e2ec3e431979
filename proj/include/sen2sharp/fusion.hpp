#ifndef SEN2SHARP_FUSION_HPP
#define SEN2SHARP_FUSION_HPP

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "sen2sharp/net.hpp"
#include "sen2sharp/raster.hpp"
#include "sen2sharp/resample.hpp"
#include "sen2sharp/threads.hpp"
#include "sen2sharp/wald.hpp"

namespace sen2sharp {

struct TrainConfig {
  std::size_t epochs = 200;
  std::size_t batch_size = 16;
  double learning_rate = 1e-3;
  double momentum = 0.9;
  std::size_t patch = 33;
  std::size_t stride = 17;
  AblationFlags flags;
  std::uint64_t seed = 42;
  NyquistGains nyquist_gains;
  double hpf_gain = kDefaultNyquistGain;  // low-pass used by the HPF preprocessing
  double val_fraction = 0.1;
  ModelShape shape;

  void validate() const {
    require(epochs >= 1, Errc::InvalidConfig, "epochs must be >= 1");
    require(batch_size >= 1, Errc::InvalidConfig, "batch size must be >= 1");
    require(learning_rate >= 0.0 && std::isfinite(learning_rate), Errc::InvalidConfig,
            "learning rate must be finite and non-negative");
    require(momentum >= 0.0 && momentum < 1.0, Errc::InvalidConfig, "momentum must lie in [0, 1)");
    require(patch >= 1 && stride >= 1, Errc::InvalidConfig, "patch and stride must be >= 1");
  }

  SeparableKernel hpf_kernel() const { return mtf_gaussian_kernel(hpf_gain, 2); }
};

struct EpochRecord {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;  // NaN when the validation split is empty
  double seconds = 0.0;
};

struct TrainHistory {
  std::vector<EpochRecord> epochs;

  std::string to_csv() const {
    std::ostringstream os;
    os.precision(17);
    os << "epoch,train_loss,val_loss,seconds\n";
    for (const EpochRecord& e : epochs)
      os << e.epoch << ',' << e.train_loss << ',' << e.val_loss << ',' << e.seconds << '\n';
    return os.str();
  }
};

struct TrainResult {
  FusionModel model;
  TrainHistory history;
};

// --- inference ------------------------------------------------------------

inline Tensor4 to_tensor(const std::vector<Grid>& grids) {
  require(!grids.empty(), Errc::InvalidArgument, "no channels");
  Tensor4 t(1, grids.size(), grids.front().height(), grids.front().width());
  for (std::size_t c = 0; c < grids.size(); ++c) t.set_channel(0, c, grids[c]);
  return t;
}

/// Batch-1 network input: [HPF(z)] ++ [HPF(x~) or x~].
inline Tensor4 build_input_stack(const RasterStack* z, const RasterStack& x, const AblationFlags& flags,
                                 const SeparableKernel& hpf) {
  return to_tensor(assemble_inputs(z, x, flags, hpf).channels);
}

/// Upsampled input x~ and the network's residual y-hat on the same grid.
struct ResidualPrediction {
  std::vector<Grid> upsampled;
  Tensor4 residual;
};

inline ResidualPrediction predict_residual(const FusionModel& model, const RasterStack* z,
                                           const RasterStack& x, const SeparableKernel& hpf) {
  if (model.flags.use_z && z == nullptr)
    fail(Errc::FlagMismatch, "model uses z but no z bands were supplied");
  require(x.band_count() == kTargetBands, Errc::ShapeMismatch, "x must have 6 bands");
  if (model.flags.use_z)
    require(z->band_count() == kGuideBands, Errc::ShapeMismatch, "z must have 4 bands");
  InputStack in = assemble_inputs(model.flags.use_z ? z : nullptr, x, model.flags, hpf);
  return {std::move(in.upsampled), network_infer(model, to_tensor(in.channels))};
}

/// x-hat = x~ + y-hat, band names copied from x, at twice x's resolution.
inline RasterStack forward_sr(const FusionModel& model, const RasterStack* z, const RasterStack& x,
                              const SeparableKernel& hpf) {
  const ResidualPrediction p = predict_residual(model, z, x, hpf);
  std::vector<Grid> fused;
  for (std::size_t b = 0; b < p.upsampled.size(); ++b) fused.push_back(p.upsampled[b] + p.residual.channel_grid(0, b));
  return RasterStack::from_grids(x.band_names(), fused, x.resolution_m() / 2.0);
}

inline RasterStack forward_sr(const FusionModel& model, const Scene& scene, const SeparableKernel& hpf) {
  return forward_sr(model, &scene.z, scene.x, hpf);
}

namespace detail {

struct Span1D {
  std::size_t lo, hi;
};

inline std::vector<Span1D> core_spans(std::size_t extent, std::size_t core) {
  std::vector<Span1D> out;
  for (std::size_t lo = 0; lo < extent; lo += core) out.push_back({lo, std::min(extent, lo + core)});
  return out;
}

}  // namespace detail

/// Tiled inference. Each tile is tile x tile output pixels of which the
/// outer `overlap` pixels are discarded on stitching. Preprocessing
/// (upsampling, high-pass) runs on a further halo around every tile, so
/// stitched output matches untiled forward_sr whenever overlap covers the
/// network's receptive radius.
inline RasterStack sharpen_scene(const FusionModel& model, const Scene& scene, std::size_t tile,
                                 std::size_t overlap, const SeparableKernel& hpf) {
  require(tile > 2 * overlap, Errc::BadTiling, "tile must exceed twice the overlap");
  const std::size_t W = scene.z.width(), H = scene.z.height();
  if (W <= tile && H <= tile) return forward_sr(model, scene, hpf);

  const std::size_t core = tile - 2 * overlap;
  // bicubic reaches 2 low-res samples (4 px) beyond its output; HPF adds its radius
  const std::size_t halo = (hpf.radius() + 6 + 1) / 2 * 2;
  const auto xs = detail::core_spans(W, core);
  const auto ys = detail::core_spans(H, core);

  std::vector<Band> out_bands;
  for (const std::string& name : scene.x.band_names()) out_bands.push_back(Band{name, std::vector<float>(W * H)});

  parallel_for(xs.size() * ys.size(), [&](std::size_t t) {
    const detail::Span1D cx = xs[t % xs.size()], cy = ys[t / xs.size()];
    const std::size_t wx0 = cx.lo > overlap ? cx.lo - overlap : 0, wx1 = std::min(W, cx.hi + overlap);
    const std::size_t wy0 = cy.lo > overlap ? cy.lo - overlap : 0, wy1 = std::min(H, cy.hi + overlap);
    const std::size_t px0 = (wx0 > halo ? wx0 - halo : 0) / 2 * 2;
    const std::size_t py0 = (wy0 > halo ? wy0 - halo : 0) / 2 * 2;
    const std::size_t px1 = std::min(W, (wx1 + halo + 1) / 2 * 2);
    const std::size_t py1 = std::min(H, (wy1 + halo + 1) / 2 * 2);

    const RasterStack x_tile = crop(scene.x, px0 / 2, py0 / 2, (px1 - px0) / 2, (py1 - py0) / 2);
    const RasterStack z_tile = crop(scene.z, px0, py0, px1 - px0, py1 - py0);
    InputStack in = assemble_inputs(model.flags.use_z ? &z_tile : nullptr, x_tile, model.flags, hpf);

    const std::size_t ox = wx0 - px0, oy = wy0 - py0, ww = wx1 - wx0, wh = wy1 - wy0;
    Tensor4 window(1, in.channels.size(), wh, ww);
    for (std::size_t c = 0; c < in.channels.size(); ++c)
      window.set_channel(0, c, crop(in.channels[c], ox, oy, ww, wh));
    const Tensor4 residual = network_infer(model, window);

    for (std::size_t b = 0; b < out_bands.size(); ++b) {
      for (std::size_t y = cy.lo; y < cy.hi; ++y) {
        for (std::size_t x = cx.lo; x < cx.hi; ++x) {
          const double up = in.upsampled[b](x - px0, y - py0);
          out_bands[b].samples[y * W + x] =
              static_cast<float>(up + residual(0, b, y - wy0, x - wx0));
        }
      }
    }
  });
  return RasterStack(W, H, std::move(out_bands), scene.x.resolution_m() / 2.0);
}

// --- training -------------------------------------------------------------

namespace detail {

struct Batch {
  Tensor4 input, target, base;
};

inline Batch gather(const Dataset& ds, std::span<const std::size_t> idx) {
  const TrainingExample& first = ds.examples[idx.front()];
  const std::size_t h = first.input.height(), w = first.input.width();
  Batch b{Tensor4(idx.size(), first.input.channels(), h, w),
          Tensor4(idx.size(), first.target.channels(), h, w),
          Tensor4(idx.size(), first.base.channels(), h, w)};
  for (std::size_t n = 0; n < idx.size(); ++n) {
    const TrainingExample& ex = ds.examples[idx[n]];
    std::copy(ex.input.values().begin(), ex.input.values().end(),
              b.input.values().begin() + static_cast<std::ptrdiff_t>(n * ex.input.size()));
    std::copy(ex.target.values().begin(), ex.target.values().end(),
              b.target.values().begin() + static_cast<std::ptrdiff_t>(n * ex.target.size()));
    std::copy(ex.base.values().begin(), ex.base.values().end(),
              b.base.values().begin() + static_cast<std::ptrdiff_t>(n * ex.base.size()));
  }
  return b;
}

inline Tensor4 add(const Tensor4& a, const Tensor4& b) {
  Tensor4 out = a;
  for (std::size_t i = 0; i < out.size(); ++i) out.values()[i] += b.values()[i];
  return out;
}

}  // namespace detail

/// Mean L1 loss of the residual model over a subset, BN in infer mode.
inline double evaluate_loss(const FusionModel& model, const Dataset& ds, std::span<const std::size_t> idx,
                            std::size_t batch_size = 16) {
  if (idx.empty()) return std::numeric_limits<double>::quiet_NaN();
  double total = 0.0;
  std::size_t count = 0;
  for (std::size_t s = 0; s < idx.size(); s += batch_size) {
    const auto chunk = idx.subspan(s, std::min(batch_size, idx.size() - s));
    const detail::Batch b = detail::gather(ds, chunk);
    const Tensor4 pred = detail::add(b.base, network_infer(model, b.input));
    total += l1_loss(pred, b.target).loss * static_cast<double>(pred.size());
    count += pred.size();
  }
  return total / static_cast<double>(count);
}

/// Patches of the reduced scene, split when cfg.val_fraction > 0.
inline Dataset make_dataset(const ReducedScene& rs, const TrainConfig& cfg) {
  Dataset ds = extract_patches(rs, cfg.patch, cfg.stride, cfg.flags, cfg.hpf_kernel());
  if (cfg.val_fraction > 0.0) ds = split_dataset(std::move(ds), cfg.val_fraction, cfg.seed);
  return ds;
}

/// Minibatch SGD on the L1 loss of x~ + y-hat against the reference.
/// Deterministic for a given dataset and config: the epoch order comes from
/// a generator seeded with cfg.seed.
inline TrainResult train(const Dataset& ds, const TrainConfig& cfg, FusionModel* init = nullptr) {
  cfg.validate();
  require(!ds.examples.empty() && !ds.train.empty(), Errc::EmptyDataset, "no training examples");
  require(ds.input_channels() == cfg.flags.input_channels() && ds.flags == cfg.flags,
          Errc::ChannelMismatch,
          "dataset has " + std::to_string(ds.input_channels()) + " input channels, config expects " +
              std::to_string(cfg.flags.input_channels()));

  TrainResult result{init ? *init : make_model(cfg.flags, cfg.shape, cfg.seed), {}};
  FusionModel& model = result.model;
  require_flags(model, cfg.flags);
  OptimizerState opt(model, cfg.learning_rate, cfg.momentum);

  std::mt19937_64 order_rng(cfg.seed ^ 0x9E3779B97F4A7C15ULL);
  std::vector<std::size_t> order = ds.train;
  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const auto start = std::chrono::steady_clock::now();
    detail::shuffle(order, order_rng);
    double loss_sum = 0.0;
    std::size_t loss_count = 0;
    for (std::size_t s = 0; s < order.size(); s += cfg.batch_size) {
      const auto chunk = std::span<const std::size_t>(order).subspan(s, std::min(cfg.batch_size, order.size() - s));
      const detail::Batch b = detail::gather(ds, chunk);
      ForwardTrace trace;
      const Tensor4 residual = network_forward(model, b.input, BnMode::Train, &trace);
      const LossResult loss = l1_loss(detail::add(b.base, residual), b.target);
      sgd_step(model, network_backward(model, trace, loss.grad), opt);
      loss_sum += loss.loss * static_cast<double>(chunk.size());
      loss_count += chunk.size();
    }
    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = loss_sum / static_cast<double>(loss_count);
    rec.val_loss = evaluate_loss(model, ds, ds.validation, cfg.batch_size);
    rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    result.history.epochs.push_back(rec);
  }
  return result;
}

}  // namespace sen2sharp

#endif  // SEN2SHARP_FUSION_HPP
