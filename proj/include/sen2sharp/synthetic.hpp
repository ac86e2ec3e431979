#ifndef SEN2SHARP_SYNTHETIC_HPP
#define SEN2SHARP_SYNTHETIC_HPP

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "sen2sharp/detail/random.hpp"
#include "sen2sharp/grid.hpp"
#include "sen2sharp/raster.hpp"
#include "sen2sharp/wald.hpp"

namespace sen2sharp {

// Band-correlated synthetic scenes for tests and demos. Every band is
//   offset + gain * S + smooth_b + unique * T
// where S is a structural texture shared by all bands, smooth_b a
// band-specific low-frequency field and T a second texture that is only
// weakly present in each band. The 10-m guide bands are taken at full
// resolution; the 20-m bands are degraded from the same truth.

namespace detail {

inline void normalize(Grid& g) {
  const double mu = mean(g), sd = stddev(g);
  for (double& v : g.values()) v = sd > 0.0 ? (v - mu) / sd : 0.0;
}

inline Grid value_noise(std::size_t size, std::size_t cell, std::mt19937_64& rng) {
  const std::size_t n = size / cell + 2;
  std::vector<double> lattice(n * n);
  for (double& v : lattice) v = uniform(rng, -1.0, 1.0);
  Grid g(size, size);
  for (std::size_t y = 0; y < size; ++y)
    for (std::size_t x = 0; x < size; ++x) {
      const double fx = static_cast<double>(x) / static_cast<double>(cell);
      const double fy = static_cast<double>(y) / static_cast<double>(cell);
      const auto ix = static_cast<std::size_t>(fx), iy = static_cast<std::size_t>(fy);
      const double tx = fx - static_cast<double>(ix), ty = fy - static_cast<double>(iy);
      const double sx = tx * tx * (3.0 - 2.0 * tx), sy = ty * ty * (3.0 - 2.0 * ty);
      const double a = lattice[iy * n + ix], b = lattice[iy * n + ix + 1];
      const double c = lattice[(iy + 1) * n + ix], d = lattice[(iy + 1) * n + ix + 1];
      g(x, y) = (a * (1 - sx) + b * sx) * (1 - sy) + (c * (1 - sx) + d * sx) * sy;
    }
  return g;
}

/// Piecewise-constant blocks and disks over multi-scale value noise.
inline Grid structural_texture(std::size_t size, std::mt19937_64& rng) {
  Grid g(size, size, 0.0);
  const std::size_t shapes = size * size / 192;
  for (std::size_t s = 0; s < shapes; ++s) {
    const double side_w = std::exp(uniform(rng, std::log(3.0), std::log(40.0)));
    const double side_h = std::exp(uniform(rng, std::log(3.0), std::log(40.0)));
    const double cx = uniform(rng, 0.0, static_cast<double>(size));
    const double cy = uniform(rng, 0.0, static_cast<double>(size));
    const double level = uniform(rng, -1.0, 1.0);
    const bool disk = uniform01(rng) < 0.3;
    const auto x0 = static_cast<std::ptrdiff_t>(cx - side_w / 2), x1 = static_cast<std::ptrdiff_t>(cx + side_w / 2);
    const auto y0 = static_cast<std::ptrdiff_t>(cy - side_h / 2), y1 = static_cast<std::ptrdiff_t>(cy + side_h / 2);
    for (std::ptrdiff_t y = std::max<std::ptrdiff_t>(0, y0); y <= std::min<std::ptrdiff_t>(size - 1, y1); ++y)
      for (std::ptrdiff_t x = std::max<std::ptrdiff_t>(0, x0); x <= std::min<std::ptrdiff_t>(size - 1, x1); ++x) {
        if (disk) {
          const double dx = (static_cast<double>(x) - cx) / (side_w / 2);
          const double dy = (static_cast<double>(y) - cy) / (side_w / 2);
          if (dx * dx + dy * dy > 1.0) continue;
        }
        g(static_cast<std::size_t>(x), static_cast<std::size_t>(y)) += level;
      }
  }
  normalize(g);
  for (std::size_t cell : {2, 4, 8, 16, 32}) {
    if (cell >= size) break;
    const Grid n = value_noise(size, cell, rng);
    const double amp = 0.12 * std::pow(static_cast<double>(cell), 0.5);
    for (std::size_t i = 0; i < g.size(); ++i) g.values()[i] += amp * n.values()[i];
  }
  normalize(g);
  return g;
}

inline Grid smooth_field(std::size_t size, std::mt19937_64& rng) {
  Grid g(size, size, 0.0);
  for (int k = 0; k < 4; ++k) {
    const double period = uniform(rng, 0.6, 2.0) * static_cast<double>(size);
    const double angle = uniform(rng, 0.0, std::numbers::pi);
    const double phase = uniform(rng, 0.0, 2.0 * std::numbers::pi);
    const double kx = std::cos(angle) * 2.0 * std::numbers::pi / period;
    const double ky = std::sin(angle) * 2.0 * std::numbers::pi / period;
    for (std::size_t y = 0; y < size; ++y)
      for (std::size_t x = 0; x < size; ++x)
        g(x, y) += std::sin(kx * static_cast<double>(x) + ky * static_cast<double>(y) + phase);
  }
  normalize(g);
  return g;
}

}  // namespace detail

struct SyntheticScene {
  std::vector<Grid> truth;  // 10 bands at 10 m: guides then targets
  Scene scene;
};

/// size is the 10-m extent in pixels (even). Deterministic in seed.
inline SyntheticScene make_synthetic_scene(std::size_t size, std::uint64_t seed,
                                           const NyquistGains& gains = {}) {
  require(size >= 8 && size % 2 == 0, Errc::InvalidArgument, "synthetic scene size must be even and >= 8");
  std::mt19937_64 rng(seed);
  const Grid shared = detail::structural_texture(size, rng);
  const Grid unique = detail::structural_texture(size, rng);

  // reflectance-like offsets; gains chosen so SWIR bands carry weaker,
  // differently scaled structure than the red-edge bands
  constexpr std::array<double, 10> offset{0.08, 0.10, 0.09, 0.30, 0.14, 0.25, 0.28, 0.31, 0.22, 0.15};
  constexpr std::array<double, 10> gain{0.020, 0.025, 0.030, 0.050, 0.030, 0.045, 0.050, 0.055, 0.040, 0.035};
  constexpr std::array<double, 10> smooth{0.010, 0.012, 0.015, 0.030, 0.020, 0.030, 0.030, 0.035, 0.040, 0.035};
  constexpr std::array<double, 10> unique_w{0.002, 0.002, 0.003, 0.004, 0.006, 0.008, 0.008, 0.008, 0.010, 0.010};

  std::vector<Grid> truth;
  for (std::size_t b = 0; b < 10; ++b) {
    const Grid s = detail::smooth_field(size, rng);
    Grid band(size, size);
    for (std::size_t i = 0; i < band.size(); ++i)
      band.values()[i] = offset[b] + gain[b] * shared.values()[i] + smooth[b] * s.values()[i] +
                         unique_w[b] * unique.values()[i];
    truth.push_back(std::move(band));
  }

  std::vector<std::string> guide_names(kGuideBandNames.begin(), kGuideBandNames.end());
  std::vector<std::string> target_names(kTargetBandNames.begin(), kTargetBandNames.end());
  std::vector<Grid> guides(truth.begin(), truth.begin() + 4);
  std::vector<Grid> targets;
  for (std::size_t b = 0; b < kTargetBands; ++b)
    targets.push_back(degrade(truth[4 + b], mtf_gaussian_kernel(gains(target_names[b]), 2), 2));
  Scene scene(RasterStack::from_grids(guide_names, guides, 10.0),
              RasterStack::from_grids(target_names, targets, 20.0));
  return SyntheticScene{std::move(truth), std::move(scene)};
}

}  // namespace sen2sharp

#endif  // SEN2SHARP_SYNTHETIC_HPP
