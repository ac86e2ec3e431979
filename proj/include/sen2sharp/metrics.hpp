#ifndef SEN2SHARP_METRICS_HPP
#define SEN2SHARP_METRICS_HPP

#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "sen2sharp/baselines.hpp"
#include "sen2sharp/error.hpp"
#include "sen2sharp/grid.hpp"
#include "sen2sharp/raster.hpp"
#include "sen2sharp/resample.hpp"

namespace sen2sharp {

struct QIndexResult {
  double value = 0.0;
  std::size_t windows = 0;
  std::size_t skipped = 0;  // windows whose denominator fell below 1e-12
};

namespace detail {

// Summed-area table with a zero guard row/column: sat(x, y) = sum over
// [0, x) x [0, y).
class SummedArea {
 public:
  template <typename Fn>
  SummedArea(std::size_t w, std::size_t h, Fn&& value) : w_(w + 1), sums_((w + 1) * (h + 1), 0.0) {
    for (std::size_t y = 0; y < h; ++y) {
      double row = 0.0;
      for (std::size_t x = 0; x < w; ++x) {
        row += value(x, y);
        sums_[(y + 1) * w_ + x + 1] = sums_[y * w_ + x + 1] + row;
      }
    }
  }

  double box(std::size_t x0, std::size_t y0, std::size_t size) const {
    const std::size_t x1 = x0 + size, y1 = y0 + size;
    return sums_[y1 * w_ + x1] - sums_[y0 * w_ + x1] - sums_[y1 * w_ + x0] + sums_[y0 * w_ + x0];
  }

 private:
  std::size_t w_;
  std::vector<double> sums_;
};

}  // namespace detail

/// Universal image quality index averaged over all window x window blocks
/// at stride 1.
inline QIndexResult q_index_detail(const Grid& a, const Grid& b, std::size_t window) {
  require(a.same_shape(b), Errc::ShapeMismatch, "q-index of differently shaped bands");
  require(window >= 1 && window <= a.width() && window <= a.height(), Errc::WindowTooLarge,
          "q-index window exceeds the band");
  // Centering on the global means keeps the moment sums well conditioned.
  const double ca = mean(a), cb = mean(b);
  auto da = [&](std::size_t x, std::size_t y) { return a(x, y) - ca; };
  auto db = [&](std::size_t x, std::size_t y) { return b(x, y) - cb; };
  const std::size_t w = a.width(), h = a.height();
  const detail::SummedArea sa(w, h, da), sb(w, h, db);
  const detail::SummedArea saa(w, h, [&](auto x, auto y) { return da(x, y) * da(x, y); });
  const detail::SummedArea sbb(w, h, [&](auto x, auto y) { return db(x, y) * db(x, y); });
  const detail::SummedArea sab(w, h, [&](auto x, auto y) { return da(x, y) * db(x, y); });

  const auto n = static_cast<double>(window * window);
  QIndexResult r;
  double total = 0.0;
  for (std::size_t y = 0; y + window <= h; ++y) {
    for (std::size_t x = 0; x + window <= w; ++x) {
      ++r.windows;
      const double ma = sa.box(x, y, window) / n, mb = sb.box(x, y, window) / n;
      const double va = saa.box(x, y, window) / n - ma * ma;
      const double vb = sbb.box(x, y, window) / n - mb * mb;
      const double cov = sab.box(x, y, window) / n - ma * mb;
      const double mean_a = ma + ca, mean_b = mb + cb;
      const double denom = (va + vb) * (mean_a * mean_a + mean_b * mean_b);
      if (denom < 1e-12) {
        ++r.skipped;
        continue;
      }
      // two ratios, each exact when a == b
      total += (4.0 * cov / (va + vb)) * (mean_a * mean_b / (mean_a * mean_a + mean_b * mean_b));
    }
  }
  const std::size_t used = r.windows - r.skipped;
  if (used > 0)
    r.value = total / static_cast<double>(used);
  else
    r.value = a == b ? 1.0 : 0.0;
  return r;
}

inline double q_index(const Grid& a, const Grid& b, std::size_t window) {
  return q_index_detail(a, b, window).value;
}

inline double rmse(const Grid& a, const Grid& b) {
  require(a.same_shape(b), Errc::ShapeMismatch, "rmse of differently shaped bands");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a.values()[i] - b.values()[i];
    acc += d * d;
  }
  return std::sqrt(acc / static_cast<double>(a.size()));
}

namespace detail {

inline void require_aligned(const RasterStack& fused, const RasterStack& ref) {
  require(fused.band_count() == ref.band_count() && fused.width() == ref.width() &&
              fused.height() == ref.height(),
          Errc::ShapeMismatch, "fused product and reference are not aligned");
}

}  // namespace detail

/// ERGAS = 100 * ratio * sqrt(mean_b RMSE_b^2 / mu_b^2), mu_b the reference
/// band mean and ratio the high/low resolution ratio.
inline double ergas(const RasterStack& fused, const RasterStack& ref, double ratio_hl = 0.5) {
  detail::require_aligned(fused, ref);
  double acc = 0.0;
  for (std::size_t b = 0; b < ref.band_count(); ++b) {
    const Grid r = ref.grid(b);
    const double mu = mean(r);
    require(std::abs(mu) >= 1e-12, Errc::ZeroMeanBand, "reference band " + ref.band(b).name + " has zero mean");
    const double e = rmse(fused.grid(b), r);
    acc += e * e / (mu * mu);
  }
  return 100.0 * ratio_hl * std::sqrt(acc / static_cast<double>(ref.band_count()));
}

/// 3x3 Laplacian [0 -1 0; -1 4 -1; 0 -1 0] with symmetric reflection.
inline Grid laplacian(const Grid& g) {
  Grid out(g.width(), g.height());
  const auto w = static_cast<std::ptrdiff_t>(g.width()), h = static_cast<std::ptrdiff_t>(g.height());
  for (std::ptrdiff_t y = 0; y < h; ++y)
    for (std::ptrdiff_t x = 0; x < w; ++x) {
      const double c = g(static_cast<std::size_t>(x), static_cast<std::size_t>(y));
      const double l = g(reflect_index(x - 1, g.width()), static_cast<std::size_t>(y));
      const double r = g(reflect_index(x + 1, g.width()), static_cast<std::size_t>(y));
      const double u = g(static_cast<std::size_t>(x), reflect_index(y - 1, g.height()));
      const double d = g(static_cast<std::size_t>(x), reflect_index(y + 1, g.height()));
      out(static_cast<std::size_t>(x), static_cast<std::size_t>(y)) = 4.0 * c - l - r - u - d;
    }
  return out;
}

inline double hcc_band(const Grid& fused, const Grid& ref) {
  return pearson(laplacian(fused), laplacian(ref));
}

/// Mean over bands of the correlation between Laplacian details.
inline double hcc(const RasterStack& fused, const RasterStack& ref) {
  detail::require_aligned(fused, ref);
  double acc = 0.0;
  for (std::size_t b = 0; b < ref.band_count(); ++b) acc += hcc_band(fused.grid(b), ref.grid(b));
  return acc / static_cast<double>(ref.band_count());
}

// --- reports --------------------------------------------------------------

struct MetricsOptions {
  std::size_t q_window = 32;
  double ergas_ratio = 0.5;
};

struct BandMetrics {
  std::string band;
  double q = 0.0;
  double rmse = 0.0;
  double hcc = 0.0;
  std::size_t q_skipped_windows = 0;
};

struct MetricsReport {
  std::vector<BandMetrics> per_band;
  double q_mean = 0.0;
  double ergas = 0.0;
  double hcc_mean = 0.0;
  std::size_t q_skipped_windows = 0;

  nlohmann::json to_json() const {
    nlohmann::json bands = nlohmann::json::array();
    for (const BandMetrics& b : per_band)
      bands.push_back({{"band", b.band}, {"q", b.q}, {"rmse", b.rmse}, {"hcc", b.hcc},
                       {"q_skipped_windows", b.q_skipped_windows}});
    return {{"q_mean", q_mean}, {"ergas", ergas}, {"hcc_mean", hcc_mean},
            {"q_skipped_windows", q_skipped_windows}, {"per_band", bands}};
  }

  std::string csv_header() const {
    std::string h = "method,q_mean,ergas,hcc_mean";
    for (const BandMetrics& b : per_band) h += ",q_" + b.band + ",rmse_" + b.band + ",hcc_" + b.band;
    return h;
  }

  std::string csv_row(const std::string& method) const {
    std::ostringstream os;
    os.precision(17);
    os << method << ',' << q_mean << ',' << ergas << ',' << hcc_mean;
    for (const BandMetrics& b : per_band) os << ',' << b.q << ',' << b.rmse << ',' << b.hcc;
    return os.str();
  }
};

inline MetricsReport evaluate(const RasterStack& fused, const RasterStack& ref, const MetricsOptions& opt = {}) {
  detail::require_aligned(fused, ref);
  MetricsReport r;
  for (std::size_t b = 0; b < ref.band_count(); ++b) {
    const Grid f = fused.grid(b), g = ref.grid(b);
    const QIndexResult q = q_index_detail(f, g, opt.q_window);
    r.per_band.push_back(BandMetrics{ref.band(b).name, q.value, rmse(f, g), hcc_band(f, g), q.skipped});
    r.q_mean += q.value;
    r.hcc_mean += r.per_band.back().hcc;
    r.q_skipped_windows += q.skipped;
  }
  r.q_mean /= static_cast<double>(ref.band_count());
  r.hcc_mean /= static_cast<double>(ref.band_count());
  r.ergas = ergas(fused, ref, opt.ergas_ratio);
  return r;
}

}  // namespace sen2sharp

#endif  // SEN2SHARP_METRICS_HPP
