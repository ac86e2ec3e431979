#ifndef SEN2SHARP_RASTER_HPP
#define SEN2SHARP_RASTER_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <set>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "sen2sharp/detail/bytes.hpp"
#include "sen2sharp/error.hpp"
#include "sen2sharp/grid.hpp"

namespace sen2sharp {

inline constexpr std::array<const char*, 4> kGuideBandNames{"B02", "B03", "B04", "B08"};
inline constexpr std::array<const char*, 6> kTargetBandNames{"B05", "B06", "B07",
                                                             "B8A", "B11", "B12"};
inline constexpr std::size_t kGuideBands = kGuideBandNames.size();
inline constexpr std::size_t kTargetBands = kTargetBandNames.size();

struct Band {
  std::string name;
  std::vector<float> samples;  // row-major, width * height
};

/// Georeference-free multiband image with 32-bit samples.
/// Immutable after construction; the constructor enforces shape invariants
/// and finiteness.
class RasterStack {
 public:
  RasterStack(std::size_t width, std::size_t height, std::vector<Band> bands, double resolution_m)
      : width_(width), height_(height), resolution_m_(resolution_m), bands_(std::move(bands)) {
    require(width_ >= 1 && height_ >= 1, Errc::InvalidArgument, "raster dimensions must be >= 1");
    require(!bands_.empty(), Errc::InvalidArgument, "raster needs at least one band");
    require(std::isfinite(resolution_m_) && resolution_m_ > 0.0, Errc::InvalidArgument,
            "resolution must be positive");
    std::set<std::string> seen;
    for (const Band& b : bands_) {
      require(b.samples.size() == width_ * height_, Errc::SizeMismatch,
              "band " + b.name + " has wrong sample count");
      require(seen.insert(b.name).second, Errc::InvalidArgument, "duplicate band name " + b.name);
      for (float v : b.samples)
        require(std::isfinite(v), Errc::NonFiniteSample, "non-finite sample in band " + b.name);
    }
  }

  /// Builds a stack from 64-bit grids, rounding samples to 32 bits.
  static RasterStack from_grids(const std::vector<std::string>& names,
                                const std::vector<Grid>& grids, double resolution_m) {
    require(!grids.empty() && names.size() == grids.size(), Errc::InvalidArgument,
            "band names and grids differ in count");
    std::vector<Band> bands;
    bands.reserve(grids.size());
    for (std::size_t i = 0; i < grids.size(); ++i) {
      require(grids[i].same_shape(grids.front()), Errc::ShapeMismatch, "grids differ in shape");
      Band b{names[i], std::vector<float>(grids[i].size())};
      std::transform(grids[i].values().begin(), grids[i].values().end(), b.samples.begin(),
                     [](double v) { return static_cast<float>(v); });
      bands.push_back(std::move(b));
    }
    return RasterStack(grids.front().width(), grids.front().height(), std::move(bands),
                       resolution_m);
  }

  std::size_t width() const noexcept { return width_; }
  std::size_t height() const noexcept { return height_; }
  std::size_t band_count() const noexcept { return bands_.size(); }
  double resolution_m() const noexcept { return resolution_m_; }

  const Band& band(std::size_t i) const { return bands_.at(i); }
  const std::vector<Band>& bands() const noexcept { return bands_; }

  std::vector<std::string> band_names() const {
    std::vector<std::string> names;
    for (const Band& b : bands_) names.push_back(b.name);
    return names;
  }

  std::size_t index_of(const std::string& name) const {
    for (std::size_t i = 0; i < bands_.size(); ++i)
      if (bands_[i].name == name) return i;
    fail(Errc::UnknownBand, "no band named " + name);
  }

  Grid grid(std::size_t i) const {
    const Band& b = band(i);
    return Grid(width_, height_, std::vector<double>(b.samples.begin(), b.samples.end()));
  }

  std::vector<Grid> grids() const {
    std::vector<Grid> out;
    out.reserve(bands_.size());
    for (std::size_t i = 0; i < bands_.size(); ++i) out.push_back(grid(i));
    return out;
  }

  friend bool operator==(const RasterStack& a, const RasterStack& b) {
    if (a.width_ != b.width_ || a.height_ != b.height_ || a.resolution_m_ != b.resolution_m_ ||
        a.bands_.size() != b.bands_.size())
      return false;
    for (std::size_t i = 0; i < a.bands_.size(); ++i) {
      if (a.bands_[i].name != b.bands_[i].name) return false;
      if (std::memcmp(a.bands_[i].samples.data(), b.bands_[i].samples.data(),
                      a.bands_[i].samples.size() * sizeof(float)) != 0)
        return false;
    }
    return true;
  }

 private:
  std::size_t width_;
  std::size_t height_;
  double resolution_m_;
  std::vector<Band> bands_;
};

/// Co-registered 10-m guide (z) and 20-m target (x) stacks.
struct Scene {
  RasterStack z;
  RasterStack x;

  Scene(RasterStack z_, RasterStack x_) : z(std::move(z_)), x(std::move(x_)) {
    require(z.band_count() == kGuideBands, Errc::ShapeMismatch, "scene z must have 4 bands");
    require(x.band_count() == kTargetBands, Errc::ShapeMismatch, "scene x must have 6 bands");
    require(z.width() == 2 * x.width() && z.height() == 2 * x.height(), Errc::ShapeMismatch,
            "scene z must be exactly twice the size of x");
    require(z.resolution_m() * 2.0 == x.resolution_m(), Errc::ShapeMismatch,
            "scene x resolution must be twice that of z");
  }
};

// --- ".msr" container -------------------------------------------------------

inline constexpr std::string_view kRasterMagic = "MSR1";

inline std::vector<std::uint8_t> encode_raster(const RasterStack& stack) {
  nlohmann::json header = {
      {"width", stack.width()},
      {"height", stack.height()},
      {"bands", stack.band_names()},
      {"resolution_m", stack.resolution_m()},
      {"dtype", "f32le"},
  };
  std::vector<std::uint8_t> out = detail::frame_header(kRasterMagic, header.dump());
  out.reserve(out.size() + stack.width() * stack.height() * stack.band_count() * 4);
  for (const Band& b : stack.bands())
    for (float v : b.samples) detail::put_f32(out, v);
  return out;
}

inline RasterStack decode_raster(std::span<const std::uint8_t> bytes) {
  auto [text, offset] = detail::split_framed_header(bytes, kRasterMagic, Errc::MalformedHeader);
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    fail(Errc::MalformedHeader, std::string("header is not valid JSON: ") + e.what());
  }
  static const std::set<std::string> expected{"width", "height", "bands", "resolution_m", "dtype"};
  require(header.is_object() && header.size() == expected.size(), Errc::MalformedHeader,
          "header must be an object with exactly the keys width, height, bands, resolution_m, dtype");
  for (const auto& [key, value] : header.items())
    require(expected.contains(key), Errc::MalformedHeader, "unexpected header key " + key);

  const auto& w = header["width"];
  const auto& h = header["height"];
  const auto& names = header["bands"];
  const auto& res = header["resolution_m"];
  require(w.is_number_unsigned() && w.get<std::uint64_t>() >= 1, Errc::MalformedHeader,
          "width must be a positive integer");
  require(h.is_number_unsigned() && h.get<std::uint64_t>() >= 1, Errc::MalformedHeader,
          "height must be a positive integer");
  require(names.is_array() && !names.empty(), Errc::MalformedHeader,
          "bands must be a non-empty array");
  require(res.is_number() && std::isfinite(res.get<double>()) && res.get<double>() > 0.0,
          Errc::MalformedHeader, "resolution_m must be a positive number");
  require(header["dtype"] == "f32le", Errc::MalformedHeader, "dtype must be \"f32le\"");

  const std::size_t width = w.get<std::size_t>();
  const std::size_t height = h.get<std::size_t>();
  std::vector<Band> bands;
  std::set<std::string> seen;
  for (const auto& n : names) {
    require(n.is_string(), Errc::MalformedHeader, "band names must be strings");
    require(seen.insert(n.get<std::string>()).second, Errc::MalformedHeader,
            "duplicate band name " + n.get<std::string>());
    bands.push_back(Band{n.get<std::string>(), {}});
  }

  const std::size_t plane = width * height;
  const std::size_t payload = bytes.size() - offset;
  require(payload == plane * bands.size() * 4, Errc::SizeMismatch,
          "payload has " + std::to_string(payload) + " bytes, expected " +
              std::to_string(plane * bands.size() * 4));

  const std::uint8_t* p = bytes.data() + offset;
  for (Band& b : bands) {
    b.samples.resize(plane);
    for (std::size_t i = 0; i < plane; ++i, p += 4) b.samples[i] = detail::get_f32(p);
  }
  return RasterStack(width, height, std::move(bands), res.get<double>());
}

inline RasterStack load_raster(const std::filesystem::path& path) {
  return decode_raster(detail::read_file(path));
}

/// Samples are validated at construction, so any RasterStack is writable.
inline void save_raster(const RasterStack& stack, const std::filesystem::path& path) {
  detail::write_file(path, encode_raster(stack));
}

// --- stack operations -----------------------------------------------------

inline RasterStack crop(const RasterStack& stack, std::size_t x0, std::size_t y0, std::size_t w,
                        std::size_t h) {
  require(w >= 1 && h >= 1 && x0 + w <= stack.width() && y0 + h <= stack.height(),
          Errc::OutOfBounds, "crop window lies outside the raster");
  std::vector<Band> bands;
  for (const Band& src : stack.bands()) {
    Band b{src.name, std::vector<float>(w * h)};
    for (std::size_t y = 0; y < h; ++y) {
      const auto from = src.samples.begin() + static_cast<std::ptrdiff_t>((y0 + y) * stack.width() + x0);
      std::copy_n(from, w, b.samples.begin() + static_cast<std::ptrdiff_t>(y * w));
    }
    bands.push_back(std::move(b));
  }
  return RasterStack(w, h, std::move(bands), stack.resolution_m());
}

inline RasterStack select_bands(const RasterStack& stack, const std::vector<std::string>& names) {
  std::vector<Band> bands;
  for (const std::string& name : names) bands.push_back(stack.band(stack.index_of(name)));
  return RasterStack(stack.width(), stack.height(), std::move(bands), stack.resolution_m());
}

}  // namespace sen2sharp

#endif  // SEN2SHARP_RASTER_HPP
