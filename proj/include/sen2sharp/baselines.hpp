#ifndef SEN2SHARP_BASELINES_HPP
#define SEN2SHARP_BASELINES_HPP

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "sen2sharp/error.hpp"
#include "sen2sharp/grid.hpp"
#include "sen2sharp/raster.hpp"
#include "sen2sharp/resample.hpp"

namespace sen2sharp {

// Classical pansharpening adapted to the 4-guide / 6-target band setting.
// The "pan" for each method is drawn from the 10-m guide bands.

inline double pearson(const Grid& a, const Grid& b) {
  require(a.same_shape(b), Errc::ShapeMismatch, "correlation of differently shaped grids");
  const double ma = mean(a), mb = mean(b);
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double da = a.values()[i] - ma, db = b.values()[i] - mb;
    sab += da * db;
    saa += da * da;
    sbb += db * db;
  }
  require(saa > 0.0 && sbb > 0.0, Errc::DegenerateBand, "correlation with a zero-variance band");
  return sab / std::sqrt(saa * sbb);
}

/// Global affine histogram match: returns src rescaled to target's mean and
/// standard deviation.
inline Grid match_moments(const Grid& src, double target_mean, double target_std) {
  const double ms = mean(src), ss = stddev(src);
  require(ss > 0.0, Errc::DegenerateBand, "cannot match a zero-variance band");
  Grid out(src.width(), src.height());
  const double gain = target_std / ss;
  for (std::size_t i = 0; i < src.size(); ++i) out.values()[i] = (src.values()[i] - ms) * gain + target_mean;
  return out;
}

inline Grid match_moments(const Grid& src, const Grid& target) {
  return match_moments(src, mean(target), stddev(target));
}

struct PanAssignment {
  std::map<std::string, std::string> mapping;  // target band -> guide band
  std::string rule = "max-correlation";
};

struct PanSet {
  std::vector<Grid> pans;  // one per target band, matched to it
  PanAssignment assignment;
  std::vector<double> correlations;
};

/// Index of the guide with maximum correlation against target. Guides
/// with zero variance are never selected.
inline std::size_t most_correlated(const std::vector<Grid>& guides, const Grid& target,
                                   double* best_corr = nullptr) {
  require(stddev(target) > 0.0, Errc::DegenerateBand, "target band has zero variance");
  std::size_t best = guides.size();
  double best_r = -2.0;
  for (std::size_t g = 0; g < guides.size(); ++g) {
    if (!(stddev(guides[g]) > 0.0)) continue;
    const double r = pearson(guides[g], target);
    if (r > best_r) {
      best_r = r;
      best = g;
    }
  }
  require(best < guides.size(), Errc::DegenerateBand, "every guide band has zero variance");
  if (best_corr) *best_corr = best_r;
  return best;
}

inline Grid intensity_of(const std::vector<Grid>& bands) {
  Grid out(bands.front().width(), bands.front().height());
  for (const Grid& b : bands)
    for (std::size_t i = 0; i < b.size(); ++i) out.values()[i] += b.values()[i];
  for (double& v : out.values()) v /= static_cast<double>(bands.size());
  return out;
}

/// Per target band: the guide band with maximum Pearson correlation against
/// the upsampled target, moment-matched to it.
inline PanSet synth_pan(const RasterStack& z, const RasterStack& upsampled) {
  require(z.width() == upsampled.width() && z.height() == upsampled.height(), Errc::ShapeMismatch,
          "guide bands and upsampled bands must share a grid");
  const std::vector<Grid> guides = z.grids();
  PanSet out;
  for (std::size_t b = 0; b < upsampled.band_count(); ++b) {
    const Grid target = upsampled.grid(b);
    double r = 0.0;
    const std::size_t g = most_correlated(guides, target, &r);
    out.pans.push_back(match_moments(guides[g], target));
    out.assignment.mapping[upsampled.band(b).name] = z.band(g).name;
    out.correlations.push_back(r);
  }
  return out;
}

/// Guide band most correlated with the mean of the upsampled bands; the
/// shared pan of the component-substitution methods (unmatched).
inline Grid shared_pan(const RasterStack& z, const RasterStack& upsampled) {
  return z.grid(most_correlated(z.grids(), intensity_of(upsampled.grids())));
}

inline RasterStack sharpen_bicubic(const RasterStack& x) {
  std::vector<Grid> up;
  for (std::size_t b = 0; b < x.band_count(); ++b) up.push_back(bicubic_upsample(x.grid(b), 2));
  return RasterStack::from_grids(x.band_names(), up, x.resolution_m() / 2.0);
}

/// HPF (Chavez): x-hat_b = x~_b + (pan_b - box(pan_b)).
inline RasterStack sharpen_hpf(const RasterStack& upsampled, const std::vector<Grid>& pans,
                               std::size_t box = 5) {
  require(pans.size() == upsampled.band_count(), Errc::ShapeMismatch, "need one pan per band");
  const SeparableKernel k = box_kernel(box);
  std::vector<Grid> out;
  for (std::size_t b = 0; b < pans.size(); ++b) {
    require(pans[b].width() == upsampled.width() && pans[b].height() == upsampled.height(),
            Errc::ShapeMismatch, "pan is not aligned with the upsampled band");
    out.push_back(upsampled.grid(b) + highpass(pans[b], k));
  }
  return RasterStack::from_grids(upsampled.band_names(), out, upsampled.resolution_m());
}

// --- PCA ------------------------------------------------------------------

struct EigenDecomposition {
  std::vector<double> values;                // descending
  std::vector<std::vector<double>> vectors;  // vectors[k] is the k-th eigenvector
};

/// Cyclic Jacobi eigen-decomposition of a symmetric matrix (row-major n x n).
inline EigenDecomposition jacobi_eigen(std::vector<double> a, std::size_t n, double tol = 1e-12,
                          std::size_t max_sweeps = 100) {
  require(a.size() == n * n, Errc::ShapeMismatch, "matrix is not n x n");
  std::vector<double> v(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) v[i * n + i] = 1.0;
  auto at = [&](std::size_t i, std::size_t j) -> double& { return a[i * n + j]; };

  double scale = 0.0;
  for (double x : a) scale += x * x;
  scale = std::sqrt(scale);
  for (std::size_t sweep = 0; sweep < max_sweeps; ++sweep) {
    double off = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) off += at(i, j) * at(i, j);
    if (std::sqrt(off) <= tol * std::max(scale, 1e-300)) break;
    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        if (at(p, q) == 0.0) continue;
        const double theta = (at(q, q) - at(p, p)) / (2.0 * at(p, q));
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0), s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = at(k, p), akq = at(k, q);
          at(k, p) = c * akp - s * akq;
          at(k, q) = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = at(p, k), aqk = at(q, k);
          at(p, k) = c * apk - s * aqk;
          at(q, k) = s * apk + c * aqk;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double vkp = v[k * n + p], vkq = v[k * n + q];
          v[k * n + p] = c * vkp - s * vkq;
          v[k * n + q] = s * vkp + c * vkq;
        }
      }
    }
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return at(i, i) > at(j, j); });
  EigenDecomposition e;
  for (std::size_t k : order) {
    e.values.push_back(at(k, k));
    std::vector<double> vec(n);
    for (std::size_t i = 0; i < n; ++i) vec[i] = v[i * n + k];
    e.vectors.push_back(std::move(vec));
  }
  return e;
}

/// Principal components of pixelwise band vectors.
struct PcaTransform {
  std::vector<double> band_means;
  EigenDecomposition eigen;

  static PcaTransform fit(const std::vector<Grid>& bands) {
    const std::size_t nb = bands.size();
    PcaTransform t;
    for (const Grid& b : bands) t.band_means.push_back(mean(b));
    std::vector<double> cov(nb * nb, 0.0);
    const std::size_t np = bands.front().size();
    for (std::size_t i = 0; i < nb; ++i)
      for (std::size_t j = i; j < nb; ++j) {
        double acc = 0.0;
        for (std::size_t p = 0; p < np; ++p)
          acc += (bands[i].values()[p] - t.band_means[i]) * (bands[j].values()[p] - t.band_means[j]);
        cov[i * nb + j] = cov[j * nb + i] = acc / static_cast<double>(np);
      }
    t.eigen = jacobi_eigen(cov, nb);
    return t;
  }

  std::vector<Grid> forward(const std::vector<Grid>& bands) const {
    const std::size_t nb = bands.size();
    std::vector<Grid> pcs(nb, Grid(bands.front().width(), bands.front().height()));
    for (std::size_t p = 0; p < bands.front().size(); ++p)
      for (std::size_t k = 0; k < nb; ++k) {
        double acc = 0.0;
        for (std::size_t i = 0; i < nb; ++i) acc += eigen.vectors[k][i] * (bands[i].values()[p] - band_means[i]);
        pcs[k].values()[p] = acc;
      }
    return pcs;
  }

  std::vector<Grid> inverse(const std::vector<Grid>& pcs) const {
    const std::size_t nb = pcs.size();
    std::vector<Grid> bands(nb, Grid(pcs.front().width(), pcs.front().height()));
    for (std::size_t p = 0; p < pcs.front().size(); ++p)
      for (std::size_t i = 0; i < nb; ++i) {
        double acc = band_means[i];
        for (std::size_t k = 0; k < nb; ++k) acc += eigen.vectors[k][i] * pcs[k].values()[p];
        bands[i].values()[p] = acc;
      }
    return bands;
  }
};

/// PCA substitution: the pan, matched to PC1, replaces PC1. Null directions
/// of a rank-deficient covariance carry zero-variance components and pass
/// through the orthogonal round trip unchanged.
inline RasterStack sharpen_pca(const RasterStack& upsampled, const Grid& pan) {
  require(pan.width() == upsampled.width() && pan.height() == upsampled.height(), Errc::ShapeMismatch,
          "pan is not aligned with the upsampled bands");
  const std::vector<Grid> bands = upsampled.grids();
  PcaTransform pca = PcaTransform::fit(bands);
  double total = 0.0;
  for (double ev : pca.eigen.values) total += std::max(ev, 0.0);
  require(pca.eigen.values.front() > 0.0 && pca.eigen.values.front() > 1e-12 * total,
          Errc::DegenerateCovariance, "bands have no variance to substitute");
  std::vector<Grid> pcs = pca.forward(bands);
  // Orient PC1 along the pan so substitution does not invert contrast.
  if (stddev(pan) > 0.0 && pearson(pcs.front(), pan) < 0.0) {
    for (double& v : pca.eigen.vectors.front()) v = -v;
    for (double& v : pcs.front().values()) v = -v;
  }
  pcs.front() = match_moments(pan, pcs.front());
  return RasterStack::from_grids(upsampled.band_names(), pca.inverse(pcs), upsampled.resolution_m());
}

/// Generalized IHS for any band count: x-hat_b = x~_b + (pan - I), I the
/// band mean. The pan must already be matched to I.
inline RasterStack sharpen_gihs(const RasterStack& upsampled, const Grid& matched_pan) {
  require(matched_pan.width() == upsampled.width() && matched_pan.height() == upsampled.height(),
          Errc::ShapeMismatch, "pan is not aligned with the upsampled bands");
  const std::vector<Grid> bands = upsampled.grids();
  const Grid i = intensity_of(bands);
  const Grid detail = matched_pan - i;
  std::vector<Grid> out;
  for (const Grid& b : bands) out.push_back(b + detail);
  return RasterStack::from_grids(upsampled.band_names(), out, upsampled.resolution_m());
}

struct MethodProduct {
  std::string method;
  RasterStack fused;
};

/// The four reference methods on one scene, in table order: bicubic, PCA,
/// IHS, HPF.
inline std::vector<MethodProduct> baseline_suite(const RasterStack& z, const RasterStack& x) {
  const RasterStack up = sharpen_bicubic(x);
  const Grid pan = shared_pan(z, up);
  std::vector<MethodProduct> out;
  out.push_back({"bicubic", up});
  out.push_back({"PCA", sharpen_pca(up, pan)});
  out.push_back({"IHS", sharpen_gihs(up, match_moments(pan, intensity_of(up.grids())))});
  out.push_back({"HPF", sharpen_hpf(up, synth_pan(z, up).pans)});
  return out;
}

}  // namespace sen2sharp

#endif  // SEN2SHARP_BASELINES_HPP
