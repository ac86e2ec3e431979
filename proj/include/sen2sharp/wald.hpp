#ifndef SEN2SHARP_WALD_HPP
#define SEN2SHARP_WALD_HPP

#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "sen2sharp/detail/random.hpp"
#include "sen2sharp/error.hpp"
#include "sen2sharp/flags.hpp"
#include "sen2sharp/raster.hpp"
#include "sen2sharp/resample.hpp"
#include "sen2sharp/tensor.hpp"

namespace sen2sharp {

inline constexpr double kDefaultNyquistGain = 0.30;

/// Per-band MTF Nyquist gains. Bands without an explicit entry use the
/// fallback.
struct NyquistGains {
  std::map<std::string, double> per_band;
  double fallback = kDefaultNyquistGain;

  double operator()(const std::string& band) const {
    auto it = per_band.find(band);
    return it == per_band.end() ? fallback : it->second;
  }
};

/// Wald-protocol training sample: inputs one resolution step down, the
/// original 20-m bands as reference.
struct ReducedScene {
  RasterStack z_down;     // 4 bands at 20 m
  RasterStack x_down;     // 6 bands at 40 m
  RasterStack reference;  // original x, 6 bands at 20 m
};

inline RasterStack degrade_stack(const RasterStack& stack, const NyquistGains& gains,
                                 std::size_t factor = 2) {
  std::vector<Grid> out;
  for (std::size_t b = 0; b < stack.band_count(); ++b)
    out.push_back(degrade(stack.grid(b), mtf_gaussian_kernel(gains(stack.band(b).name), factor),
                          factor));
  return RasterStack::from_grids(stack.band_names(), out,
                                 stack.resolution_m() * static_cast<double>(factor));
}

inline ReducedScene make_reduced_scene(const Scene& scene, const NyquistGains& gains = {}) {
  require(scene.x.width() % 2 == 0 && scene.x.height() % 2 == 0, Errc::NotDivisible,
          "scene dimensions must be divisible by 2");
  return ReducedScene{degrade_stack(scene.z, gains), degrade_stack(scene.x, gains), scene.x};
}

/// Network inputs for one scene, at the z grid.
struct InputStack {
  std::vector<Grid> channels;   // [HPF(z)] ++ [HPF(x~) or x~]
  std::vector<Grid> upsampled;  // x~, the residual skip source
};

/// z may be null when flags.use_z is false.
inline InputStack assemble_inputs(const RasterStack* z, const RasterStack& x,
                                  const AblationFlags& flags, const SeparableKernel& hpf) {
  InputStack out;
  for (std::size_t b = 0; b < x.band_count(); ++b)
    out.upsampled.push_back(bicubic_upsample(x.grid(b), 2));
  if (flags.use_z) {
    require(z != nullptr, Errc::FlagMismatch, "use_z is set but no z bands were supplied");
    require(z->width() == 2 * x.width() && z->height() == 2 * x.height(), Errc::ShapeMismatch,
            "z must be exactly twice the size of x");
    for (std::size_t b = 0; b < z->band_count(); ++b)
      out.channels.push_back(flags.use_hpf ? highpass(z->grid(b), hpf) : z->grid(b));
  }
  for (const Grid& up : out.upsampled)
    out.channels.push_back(flags.use_hpf ? highpass(up, hpf) : up);
  return out;
}

struct TrainingExample {
  Tensor4 input;   // 1 x C x h x w
  Tensor4 target;  // 1 x 6 x h x w, reference window
  Tensor4 base;    // 1 x 6 x h x w, upsampled x window (skip source)
};

struct Dataset {
  std::vector<TrainingExample> examples;
  std::vector<std::size_t> train;
  std::vector<std::size_t> validation;
  std::uint64_t rng_seed = 0;
  AblationFlags flags;

  std::size_t input_channels() const {
    return examples.empty() ? flags.input_channels() : examples.front().input.channels();
  }
};

namespace detail {

inline Tensor4 window_tensor(const std::vector<Grid>& grids, std::size_t x0, std::size_t y0,
                             std::size_t size) {
  Tensor4 t(1, grids.size(), size, size);
  for (std::size_t c = 0; c < grids.size(); ++c) t.set_channel(0, c, crop(grids[c], x0, y0, size, size));
  return t;
}

}  // namespace detail

inline std::size_t window_count(std::size_t extent, std::size_t patch, std::size_t stride) {
  return (extent - patch) / stride + 1;
}

/// Slides a patch x patch window with the given stride over the reduced
/// scene. Every example starts in the training split.
inline Dataset extract_patches(const ReducedScene& rs, std::size_t patch, std::size_t stride,
                               const AblationFlags& flags, const SeparableKernel& hpf) {
  require(stride >= 1, Errc::InvalidArgument, "stride must be >= 1");
  require(patch >= 1 && patch <= rs.reference.width() && patch <= rs.reference.height(),
          Errc::PatchTooLarge, "patch does not fit inside the reference");
  const InputStack inputs = assemble_inputs(&rs.z_down, rs.x_down, flags, hpf);
  require(inputs.upsampled.front().width() == rs.reference.width() &&
              inputs.upsampled.front().height() == rs.reference.height(),
          Errc::ShapeMismatch, "reduced scene grids are inconsistent with the reference");
  const std::vector<Grid> reference = rs.reference.grids();

  Dataset ds;
  ds.flags = flags;
  const std::size_t nx = window_count(rs.reference.width(), patch, stride);
  const std::size_t ny = window_count(rs.reference.height(), patch, stride);
  ds.examples.reserve(nx * ny);
  for (std::size_t j = 0; j < ny; ++j) {
    for (std::size_t i = 0; i < nx; ++i) {
      const std::size_t x0 = i * stride, y0 = j * stride;
      ds.examples.push_back(TrainingExample{detail::window_tensor(inputs.channels, x0, y0, patch),
                                            detail::window_tensor(reference, x0, y0, patch),
                                            detail::window_tensor(inputs.upsampled, x0, y0, patch)});
    }
  }
  ds.train.resize(ds.examples.size());
  std::iota(ds.train.begin(), ds.train.end(), std::size_t{0});
  return ds;
}

/// Seeded shuffle, then the first round(val_fraction * N) indices go to
/// validation.
inline Dataset split_dataset(Dataset ds, double val_fraction, std::uint64_t seed) {
  require(ds.examples.size() >= 2, Errc::TooFewExamples, "need at least 2 examples to split");
  require(val_fraction > 0.0 && val_fraction < 1.0, Errc::InvalidArgument,
          "validation fraction must lie in (0, 1)");
  const std::size_t n = ds.examples.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  detail::shuffle(order, rng);
  const auto n_val = static_cast<std::size_t>(std::llround(val_fraction * static_cast<double>(n)));
  ds.validation.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_val));
  ds.train.assign(order.begin() + static_cast<std::ptrdiff_t>(n_val), order.end());
  ds.rng_seed = seed;
  return ds;
}

}  // namespace sen2sharp

#endif  // SEN2SHARP_WALD_HPP
