#ifndef SEN2SHARP_GRID_HPP
#define SEN2SHARP_GRID_HPP

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

namespace sen2sharp {

/// Row-major 2-D grid of 64-bit samples. All internal image processing runs
/// on this type; storage-level rasters keep 32-bit samples.
class Grid {
 public:
  Grid() = default;
  Grid(std::size_t width, std::size_t height, double fill = 0.0)
      : width_(width), height_(height), data_(width * height, fill) {}
  Grid(std::size_t width, std::size_t height, std::vector<double> data)
      : width_(width), height_(height), data_(std::move(data)) {
    assert(data_.size() == width_ * height_);
  }

  std::size_t width() const noexcept { return width_; }
  std::size_t height() const noexcept { return height_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  double& operator()(std::size_t x, std::size_t y) noexcept { return data_[y * width_ + x]; }
  double operator()(std::size_t x, std::size_t y) const noexcept { return data_[y * width_ + x]; }

  std::span<double> row(std::size_t y) noexcept { return {data_.data() + y * width_, width_}; }
  std::span<const double> row(std::size_t y) const noexcept {
    return {data_.data() + y * width_, width_};
  }

  std::span<double> values() noexcept { return data_; }
  std::span<const double> values() const noexcept { return data_; }
  const std::vector<double>& vector() const noexcept { return data_; }

  bool same_shape(const Grid& other) const noexcept {
    return width_ == other.width_ && height_ == other.height_;
  }

  friend bool operator==(const Grid&, const Grid&) = default;

 private:
  std::size_t width_ = 0;
  std::size_t height_ = 0;
  std::vector<double> data_;
};

inline double mean(const Grid& g) {
  double sum = 0.0;
  for (double v : g.values()) sum += v;
  return g.empty() ? 0.0 : sum / static_cast<double>(g.size());
}

/// Population standard deviation (1/N), two-pass.
inline double stddev(const Grid& g) {
  const double mu = mean(g);
  double acc = 0.0;
  for (double v : g.values()) acc += (v - mu) * (v - mu);
  return g.empty() ? 0.0 : std::sqrt(acc / static_cast<double>(g.size()));
}

inline double max_abs_diff(const Grid& a, const Grid& b) {
  assert(a.same_shape(b));
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    worst = std::max(worst, std::abs(a.values()[i] - b.values()[i]));
  return worst;
}

inline Grid operator-(const Grid& a, const Grid& b) {
  assert(a.same_shape(b));
  Grid out(a.width(), a.height());
  for (std::size_t i = 0; i < a.size(); ++i) out.values()[i] = a.values()[i] - b.values()[i];
  return out;
}

inline Grid operator+(const Grid& a, const Grid& b) {
  assert(a.same_shape(b));
  Grid out(a.width(), a.height());
  for (std::size_t i = 0; i < a.size(); ++i) out.values()[i] = a.values()[i] + b.values()[i];
  return out;
}

inline Grid crop(const Grid& g, std::size_t x0, std::size_t y0, std::size_t w, std::size_t h) {
  assert(x0 + w <= g.width() && y0 + h <= g.height());
  Grid out(w, h);
  for (std::size_t y = 0; y < h; ++y)
    std::copy_n(g.row(y0 + y).begin() + static_cast<std::ptrdiff_t>(x0), w, out.row(y).begin());
  return out;
}

}  // namespace sen2sharp

#endif  // SEN2SHARP_GRID_HPP
