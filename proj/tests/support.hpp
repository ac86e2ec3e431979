#ifndef SEN2SHARP_TESTS_SUPPORT_HPP
#define SEN2SHARP_TESTS_SUPPORT_HPP

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include <unistd.h>

#include "sen2sharp/grid.hpp"
#include "sen2sharp/raster.hpp"
#include "sen2sharp/tensor.hpp"

namespace testing_support {

using namespace sen2sharp;

inline Grid random_grid(std::size_t w, std::size_t h, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> d(lo, hi);
  Grid g(w, h);
  for (double& v : g.values()) v = d(rng);
  return g;
}

// Float-representable values, so a grid survives a RasterStack unchanged.
inline Grid random_float_grid(std::size_t w, std::size_t h, std::mt19937_64& rng, double lo = 0.05,
                              double hi = 0.6) {
  Grid g = random_grid(w, h, rng, lo, hi);
  for (double& v : g.values()) v = static_cast<float>(v);
  return g;
}

inline RasterStack random_stack(const std::vector<std::string>& names, std::size_t w, std::size_t h,
                                double res, std::mt19937_64& rng) {
  std::vector<Grid> grids;
  for (std::size_t b = 0; b < names.size(); ++b) grids.push_back(random_float_grid(w, h, rng));
  return RasterStack::from_grids(names, grids, res);
}

inline std::vector<std::string> guide_names() { return {kGuideBandNames.begin(), kGuideBandNames.end()}; }
inline std::vector<std::string> target_names() { return {kTargetBandNames.begin(), kTargetBandNames.end()}; }

inline Tensor4 random_tensor(std::size_t n, std::size_t c, std::size_t h, std::size_t w, std::mt19937_64& rng,
                             double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> d(lo, hi);
  Tensor4 t(n, c, h, w);
  for (double& v : t.values()) v = d(rng);
  return t;
}

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("sen2sharp_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

}  // namespace testing_support


#endif  // SEN2SHARP_TESTS_SUPPORT_HPP
