#ifndef SEN2SHARP_RESAMPLE_HPP
#define SEN2SHARP_RESAMPLE_HPP

#include <array>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "sen2sharp/error.hpp"
#include "sen2sharp/grid.hpp"

namespace sen2sharp {

/// Odd-length 1-D kernel applied along rows, then columns.
struct SeparableKernel {
  std::vector<double> taps;

  std::size_t radius() const noexcept { return taps.size() / 2; }
  double sum() const { return std::accumulate(taps.begin(), taps.end(), 0.0); }

  /// Discrete-time frequency response at f cycles/sample (taps are symmetric).
  double response(double f) const {
    const auto r = static_cast<double>(radius());
    double acc = 0.0;
    for (std::size_t k = 0; k < taps.size(); ++k)
      acc += taps[k] * std::cos(2.0 * std::numbers::pi * f * (static_cast<double>(k) - r));
    return acc;
  }

  std::string to_string() const {
    std::ostringstream os;
    os.precision(17);
    for (std::size_t k = 0; k < taps.size(); ++k) os << (k ? " " : "") << taps[k];
    return os.str();
  }
};

/// Half-sample symmetric reflection: ... c b a | a b c ... | c b a ...
inline std::size_t reflect_index(std::ptrdiff_t i, std::size_t n) noexcept {
  const auto period = static_cast<std::ptrdiff_t>(2 * n);
  std::ptrdiff_t m = i % period;
  if (m < 0) m += period;
  if (m >= static_cast<std::ptrdiff_t>(n)) m = period - 1 - m;
  return static_cast<std::size_t>(m);
}

/// Separable correlation with symmetric-reflection boundaries.
inline Grid convolve_separable(const Grid& in, const SeparableKernel& kernel) {
  require(kernel.taps.size() % 2 == 1, Errc::InvalidArgument, "kernel length must be odd");
  const std::size_t w = in.width(), h = in.height();
  const auto r = static_cast<std::ptrdiff_t>(kernel.radius());
  const auto& taps = kernel.taps;

  Grid tmp(w, h);
  std::vector<double> padded(w + 2 * static_cast<std::size_t>(r));
  for (std::size_t y = 0; y < h; ++y) {
    auto src = in.row(y);
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(padded.size()); ++i)
      padded[static_cast<std::size_t>(i)] = src[reflect_index(i - r, w)];
    auto dst = tmp.row(y);
    for (std::size_t x = 0; x < w; ++x) {
      double acc = 0.0;
      for (std::size_t k = 0; k < taps.size(); ++k) acc += taps[k] * padded[x + k];
      dst[x] = acc;
    }
  }

  Grid out(w, h, 0.0);
  for (std::size_t y = 0; y < h; ++y) {
    auto dst = out.row(y);
    for (std::size_t k = 0; k < taps.size(); ++k) {
      const auto src = tmp.row(reflect_index(static_cast<std::ptrdiff_t>(y + k) - r, h));
      const double t = taps[k];
      for (std::size_t x = 0; x < w; ++x) dst[x] += t * src[x];
    }
  }
  return out;
}

// --- bicubic ---------------------------------------------------------------

/// Keys cubic convolution kernel.
inline double keys_cubic(double t, double a = -0.5) noexcept {
  t = std::abs(t);
  if (t <= 1.0) return ((a + 2.0) * t - (a + 3.0)) * t * t + 1.0;
  if (t < 2.0) return ((a * t - 5.0 * a) * t + 8.0 * a) * t - 4.0 * a;
  return 0.0;
}

namespace detail {

struct CubicTap {
  std::array<std::size_t, 4> index;
  std::array<double, 4> weight;
};

// Output sample j sits at source coordinate j / factor, so source sample i
// coincides with output sample factor * i (same origin convention as degrade).
inline std::vector<CubicTap> cubic_taps(std::size_t n_in, std::size_t factor) {
  std::vector<CubicTap> taps(n_in * factor);
  const auto last = static_cast<std::ptrdiff_t>(n_in) - 1;
  for (std::size_t j = 0; j < taps.size(); ++j) {
    const auto base = static_cast<std::ptrdiff_t>(j / factor);
    const double frac = static_cast<double>(j % factor) / static_cast<double>(factor);
    for (std::ptrdiff_t m = 0; m < 4; ++m) {
      const std::ptrdiff_t src = base - 1 + m;
      taps[j].index[static_cast<std::size_t>(m)] =
          static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(src, 0, last));
      taps[j].weight[static_cast<std::size_t>(m)] = keys_cubic(frac - static_cast<double>(m - 1));
    }
  }
  return taps;
}

}  // namespace detail

/// Keys (a = -0.5) bicubic upsampling by an integer factor, clamp-to-edge.
inline Grid bicubic_upsample(const Grid& band, std::size_t factor = 2) {
  require(factor >= 2, Errc::InvalidArgument, "upsampling factor must be >= 2");
  require(band.width() >= 2 && band.height() >= 2, Errc::DegenerateInput,
          "bicubic upsampling needs at least 2x2 samples");
  const std::size_t w = band.width(), h = band.height();
  const auto tx = detail::cubic_taps(w, factor);
  const auto ty = detail::cubic_taps(h, factor);

  Grid horiz(w * factor, h);
  for (std::size_t y = 0; y < h; ++y) {
    auto src = band.row(y);
    auto dst = horiz.row(y);
    for (std::size_t j = 0; j < tx.size(); ++j) {
      const auto& t = tx[j];
      dst[j] = t.weight[0] * src[t.index[0]] + t.weight[1] * src[t.index[1]] +
               t.weight[2] * src[t.index[2]] + t.weight[3] * src[t.index[3]];
    }
  }
  Grid out(w * factor, h * factor);
  for (std::size_t i = 0; i < ty.size(); ++i) {
    const auto& t = ty[i];
    auto r0 = horiz.row(t.index[0]), r1 = horiz.row(t.index[1]);
    auto r2 = horiz.row(t.index[2]), r3 = horiz.row(t.index[3]);
    auto dst = out.row(i);
    for (std::size_t x = 0; x < dst.size(); ++x)
      dst[x] = t.weight[0] * r0[x] + t.weight[1] * r1[x] + t.weight[2] * r2[x] +
               t.weight[3] * r3[x];
  }
  return out;
}

// --- MTF-matched Gaussian, degradation, high-pass --------------------------

/// Gaussian whose frequency response at the low-resolution Nyquist
/// frequency 1/(2*ratio) equals nyquist_gain. Support is +-ceil(4 sigma).
inline SeparableKernel mtf_gaussian_kernel(double nyquist_gain, std::size_t ratio = 2) {
  require(nyquist_gain > 0.0 && nyquist_gain < 1.0, Errc::InvalidGain,
          "Nyquist gain must lie in (0, 1)");
  require(ratio >= 2, Errc::InvalidArgument, "resolution ratio must be >= 2");
  const double sigma =
      static_cast<double>(ratio) / std::numbers::pi * std::sqrt(-2.0 * std::log(nyquist_gain));
  const auto radius = static_cast<std::ptrdiff_t>(std::ceil(4.0 * sigma));
  SeparableKernel k;
  k.taps.reserve(static_cast<std::size_t>(2 * radius + 1));
  for (std::ptrdiff_t i = -radius; i <= radius; ++i) {
    const auto d = static_cast<double>(i);
    k.taps.push_back(std::exp(-d * d / (2.0 * sigma * sigma)));
  }
  const double total = k.sum();
  for (double& t : k.taps) t /= total;
  return k;
}

inline SeparableKernel box_kernel(std::size_t size) {
  require(size >= 1 && size % 2 == 1, Errc::InvalidArgument, "box size must be odd");
  return SeparableKernel{std::vector<double>(size, 1.0 / static_cast<double>(size))};
}

inline Grid lowpass(const Grid& band, const SeparableKernel& kernel) {
  return convolve_separable(band, kernel);
}

/// Low-pass filter then keep samples at (factor*i, factor*j).
inline Grid degrade(const Grid& band, const SeparableKernel& kernel, std::size_t factor = 2) {
  require(factor >= 1, Errc::InvalidArgument, "decimation factor must be >= 1");
  require(band.width() % factor == 0 && band.height() % factor == 0, Errc::NotDivisible,
          "band dimensions are not divisible by the decimation factor");
  const Grid smooth = convolve_separable(band, kernel);
  Grid out(band.width() / factor, band.height() / factor);
  for (std::size_t y = 0; y < out.height(); ++y)
    for (std::size_t x = 0; x < out.width(); ++x) out(x, y) = smooth(x * factor, y * factor);
  return out;
}

inline Grid highpass(const Grid& band, const SeparableKernel& kernel) {
  return band - lowpass(band, kernel);
}

}  // namespace sen2sharp

#endif  // SEN2SHARP_RESAMPLE_HPP
