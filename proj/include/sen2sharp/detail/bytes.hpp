#ifndef SEN2SHARP_DETAIL_BYTES_HPP
#define SEN2SHARP_DETAIL_BYTES_HPP

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <span>
#include <string>
#include <vector>

#include "sen2sharp/error.hpp"

namespace sen2sharp::detail {

template <typename UInt>
UInt byteswap_if_big(UInt v) noexcept {
  if constexpr (std::endian::native == std::endian::little) {
    return v;
  } else {
    UInt out = 0;
    for (std::size_t i = 0; i < sizeof(UInt); ++i) {
      out = static_cast<UInt>((out << 8) | (v & 0xFF));
      v = static_cast<UInt>(v >> 8);
    }
    return out;
  }
}

inline void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  v = byteswap_if_big(v);
  const auto* p = reinterpret_cast<const std::uint8_t*>(&v);
  out.insert(out.end(), p, p + 4);
}

inline void put_f32(std::vector<std::uint8_t>& out, float f) {
  const auto v = byteswap_if_big(std::bit_cast<std::uint32_t>(f));
  const auto* p = reinterpret_cast<const std::uint8_t*>(&v);
  out.insert(out.end(), p, p + 4);
}

inline void put_f64(std::vector<std::uint8_t>& out, double d) {
  const auto v = byteswap_if_big(std::bit_cast<std::uint64_t>(d));
  const auto* p = reinterpret_cast<const std::uint8_t*>(&v);
  out.insert(out.end(), p, p + 8);
}

inline std::uint32_t get_u32(const std::uint8_t* p) noexcept {
  std::uint32_t v;
  std::memcpy(&v, p, 4);
  return byteswap_if_big(v);
}

inline float get_f32(const std::uint8_t* p) noexcept {
  std::uint32_t v;
  std::memcpy(&v, p, 4);
  return std::bit_cast<float>(byteswap_if_big(v));
}

inline double get_f64(const std::uint8_t* p) noexcept {
  std::uint64_t v;
  std::memcpy(&v, p, 8);
  return std::bit_cast<double>(byteswap_if_big(v));
}

inline std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Errc::IoFailure, "cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  if (in.bad()) fail(Errc::IoFailure, "read error on " + path.string());
  return bytes;
}

inline void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(Errc::IoFailure, "cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  out.flush();
  if (!out) fail(Errc::IoFailure, "write error on " + path.string());
}

/// Splits "MAGIC | u32 len | json" framing. Returns the JSON text and the
/// offset of the first payload byte.
inline std::pair<std::string, std::size_t> split_framed_header(std::span<const std::uint8_t> bytes,
                                                               std::string_view magic,
                                                               Errc on_error) {
  if (bytes.size() < 8 || std::memcmp(bytes.data(), magic.data(), 4) != 0)
    fail(on_error, "missing magic \"" + std::string(magic) + "\"");
  const std::uint32_t len = get_u32(bytes.data() + 4);
  if (len > bytes.size() - 8) fail(on_error, "header length exceeds file size");
  return {std::string(reinterpret_cast<const char*>(bytes.data() + 8), len), 8 + std::size_t{len}};
}

inline std::vector<std::uint8_t> frame_header(std::string_view magic, const std::string& json) {
  std::vector<std::uint8_t> out(magic.begin(), magic.end());
  put_u32(out, static_cast<std::uint32_t>(json.size()));
  out.insert(out.end(), json.begin(), json.end());
  return out;
}

}  // namespace sen2sharp::detail

#endif  // SEN2SHARP_DETAIL_BYTES_HPP
