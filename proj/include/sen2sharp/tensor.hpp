#ifndef SEN2SHARP_TENSOR_HPP
#define SEN2SHARP_TENSOR_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "sen2sharp/error.hpp"
#include "sen2sharp/grid.hpp"

namespace sen2sharp {

/// Dense NCHW tensor of 64-bit reals.
class Tensor4 {
 public:
  Tensor4() = default;
  Tensor4(std::size_t n, std::size_t c, std::size_t h, std::size_t w, double fill = 0.0)
      : n_(n), c_(c), h_(h), w_(w), data_(n * c * h * w, fill) {}

  std::size_t batch() const noexcept { return n_; }
  std::size_t channels() const noexcept { return c_; }
  std::size_t height() const noexcept { return h_; }
  std::size_t width() const noexcept { return w_; }
  std::size_t plane() const noexcept { return h_ * w_; }
  std::size_t size() const noexcept { return data_.size(); }

  double& operator()(std::size_t n, std::size_t c, std::size_t y, std::size_t x) noexcept {
    return data_[((n * c_ + c) * h_ + y) * w_ + x];
  }
  double operator()(std::size_t n, std::size_t c, std::size_t y, std::size_t x) const noexcept {
    return data_[((n * c_ + c) * h_ + y) * w_ + x];
  }

  std::span<double> channel(std::size_t n, std::size_t c) noexcept {
    return {data_.data() + (n * c_ + c) * plane(), plane()};
  }
  std::span<const double> channel(std::size_t n, std::size_t c) const noexcept {
    return {data_.data() + (n * c_ + c) * plane(), plane()};
  }

  std::span<double> values() noexcept { return data_; }
  std::span<const double> values() const noexcept { return data_; }

  bool same_shape(const Tensor4& o) const noexcept {
    return n_ == o.n_ && c_ == o.c_ && h_ == o.h_ && w_ == o.w_;
  }

  std::string shape_string() const {
    return std::to_string(n_) + "x" + std::to_string(c_) + "x" + std::to_string(h_) + "x" +
           std::to_string(w_);
  }

  bool all_finite() const {
    return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
  }

  Grid channel_grid(std::size_t n, std::size_t c) const {
    auto ch = channel(n, c);
    return Grid(w_, h_, std::vector<double>(ch.begin(), ch.end()));
  }

  void set_channel(std::size_t n, std::size_t c, const Grid& g) {
    require(g.width() == w_ && g.height() == h_, Errc::ShapeMismatch, "grid does not fit tensor");
    std::copy(g.values().begin(), g.values().end(), channel(n, c).begin());
  }

  friend bool operator==(const Tensor4&, const Tensor4&) = default;

 private:
  std::size_t n_ = 0, c_ = 0, h_ = 0, w_ = 0;
  std::vector<double> data_;
};

}  // namespace sen2sharp

#endif  // SEN2SHARP_TENSOR_HPP
