#ifndef SEN2SHARP_PREVIEW_HPP
#define SEN2SHARP_PREVIEW_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "sen2sharp/error.hpp"
#include "sen2sharp/raster.hpp"

namespace sen2sharp {

struct RgbImage {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<std::uint8_t> pixels;  // interleaved RGB, row-major
};

/// Value at rank round(p * (n - 1)) of the sorted samples.
inline double percentile(std::vector<float> values, double p) {
  require(!values.empty(), Errc::InvalidArgument, "percentile of an empty band");
  const auto k = static_cast<std::size_t>(std::llround(p * static_cast<double>(values.size() - 1)));
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(k), values.end());
  return values[k];
}

/// Maps three bands to R, G, B with a per-band 2%-98% percentile stretch.
inline RgbImage render_preview(const RasterStack& stack, const std::array<std::string, 3>& bands,
                               double low = 0.02, double high = 0.98) {
  RgbImage img{stack.width(), stack.height(), std::vector<std::uint8_t>(stack.width() * stack.height() * 3)};
  for (std::size_t c = 0; c < 3; ++c) {
    const std::vector<float>& s = stack.band(stack.index_of(bands[c])).samples;
    const double lo = percentile(s, low), hi = percentile(s, high);
    const double span = hi > lo ? hi - lo : 1.0;
    for (std::size_t i = 0; i < s.size(); ++i) {
      const double t = std::clamp((static_cast<double>(s[i]) - lo) / span, 0.0, 1.0);
      img.pixels[i * 3 + c] = static_cast<std::uint8_t>(std::lround(t * 255.0));
    }
  }
  return img;
}

/// Binary PPM (P6, maxval 255).
inline std::vector<std::uint8_t> encode_ppm(const RgbImage& img) {
  const std::string head = "P6\n" + std::to_string(img.width) + " " + std::to_string(img.height) + "\n255\n";
  std::vector<std::uint8_t> out(head.begin(), head.end());
  out.insert(out.end(), img.pixels.begin(), img.pixels.end());
  return out;
}

}  // namespace sen2sharp

#endif  // SEN2SHARP_PREVIEW_HPP
