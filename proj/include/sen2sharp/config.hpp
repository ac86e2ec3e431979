#ifndef SEN2SHARP_CONFIG_HPP
#define SEN2SHARP_CONFIG_HPP

#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <initializer_list>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "sen2sharp/detail/bytes.hpp"
#include "sen2sharp/error.hpp"
#include "sen2sharp/flags.hpp"
#include "sen2sharp/fusion.hpp"
#include "sen2sharp/metrics.hpp"
#include "sen2sharp/net.hpp"
#include "sen2sharp/raster.hpp"
#include "sen2sharp/wald.hpp"

namespace sen2sharp {

enum class SharpenScale { Full, Reduced };

struct IoConfig {
  std::filesystem::path input_z;
  std::filesystem::path input_x;
  std::filesystem::path output;  // directory for every product
  std::array<std::string, 3> preview_bands{"B11", "B8A", "B05"};
  SharpenScale sharpen_scale = SharpenScale::Full;
};

struct WaldConfig {
  NyquistGains gains;
  std::size_t patch = 33;
  std::size_t stride = 17;
  double val_fraction = 0.1;
  std::uint64_t seed = 42;
  double hpf_gain = kDefaultNyquistGain;
};

struct ModelConfig {
  std::size_t hidden1 = 48;
  std::size_t hidden2 = 32;
  AblationFlags flags;
};

struct OptimConfig {
  std::size_t epochs = 200;
  std::size_t batch = 16;
  double lr = 1e-3;
  double momentum = 0.9;
};

struct RunConfig {
  IoConfig io;
  WaldConfig wald;
  ModelConfig model;
  OptimConfig train;
  MetricsOptions metrics;

  TrainConfig train_config() const {
    TrainConfig c;
    c.epochs = train.epochs;
    c.batch_size = train.batch;
    c.learning_rate = train.lr;
    c.momentum = train.momentum;
    c.patch = wald.patch;
    c.stride = wald.stride;
    c.flags = model.flags;
    c.seed = wald.seed;
    c.nyquist_gains = wald.gains;
    c.hpf_gain = wald.hpf_gain;
    c.val_fraction = wald.val_fraction;
    c.shape.hidden1 = model.hidden1;
    c.shape.hidden2 = model.hidden2;
    return c;
  }

  std::filesystem::path out(const std::string& name) const { return io.output / name; }
};

namespace detail {

using nlohmann::json;

inline void config_fail(const std::string& what) { fail(Errc::InvalidConfig, what); }

inline const json& section(const json& root, const char* key, std::initializer_list<const char*> allowed) {
  const json& s = root.at(key);
  if (!s.is_object()) config_fail(std::string(key) + " must be an object");
  for (const auto& [k, v] : s.items()) {
    bool known = false;
    for (const char* a : allowed) known = known || k == a;
    if (!known) config_fail("unknown key " + std::string(key) + "." + k);
  }
  return s;
}

inline std::size_t get_count(const json& s, const char* key, std::size_t fallback, std::size_t min = 1) {
  if (!s.contains(key)) return fallback;
  const json& v = s.at(key);
  if (!v.is_number_unsigned() || v.get<std::uint64_t>() < min)
    config_fail(std::string(key) + " must be an integer >= " + std::to_string(min));
  return v.get<std::size_t>();
}

inline double get_real(const json& s, const char* key, double fallback) {
  if (!s.contains(key)) return fallback;
  const json& v = s.at(key);
  if (!v.is_number() || !std::isfinite(v.get<double>())) config_fail(std::string(key) + " must be a finite number");
  return v.get<double>();
}

inline bool get_bool(const json& s, const char* key, bool fallback) {
  if (!s.contains(key)) return fallback;
  if (!s.at(key).is_boolean()) config_fail(std::string(key) + " must be true or false");
  return s.at(key).get<bool>();
}

inline std::filesystem::path get_path(const json& s, const char* key, const std::filesystem::path& base) {
  if (!s.contains(key) || !s.at(key).is_string() || s.at(key).get<std::string>().empty())
    config_fail("io." + std::string(key) + " must be a non-empty string");
  std::filesystem::path p = s.at(key).get<std::string>();
  return p.is_relative() ? base / p : p;
}

}  // namespace detail

/// Parses a run configuration. Relative paths resolve against base_dir
/// (normally the directory holding the config file).
inline RunConfig parse_run_config(const std::string& text, const std::filesystem::path& base_dir = {}) {
  using detail::json;
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    fail(Errc::InvalidConfig, std::string("config is not valid JSON: ") + e.what());
  }
  if (!root.is_object()) detail::config_fail("config must be a JSON object");
  static constexpr std::array<const char*, 5> kSections{"io", "wald", "model", "train", "metrics"};
  for (const char* k : kSections)
    if (!root.contains(k)) detail::config_fail(std::string("missing section ") + k);
  for (const auto& [k, v] : root.items()) {
    bool known = false;
    for (const char* s : kSections) known = known || k == s;
    if (!known) detail::config_fail("unknown top-level key " + k);
  }

  RunConfig c;
  const json& io = detail::section(root, "io", {"input_z", "input_x", "output", "preview_bands", "sharpen_scale"});
  c.io.input_z = detail::get_path(io, "input_z", base_dir);
  c.io.input_x = detail::get_path(io, "input_x", base_dir);
  c.io.output = detail::get_path(io, "output", base_dir);
  if (io.contains("preview_bands")) {
    const json& pb = io.at("preview_bands");
    if (!pb.is_array() || pb.size() != 3) detail::config_fail("io.preview_bands must list 3 band names");
    for (std::size_t i = 0; i < 3; ++i) {
      if (!pb[i].is_string()) detail::config_fail("io.preview_bands must list 3 band names");
      c.io.preview_bands[i] = pb[i].get<std::string>();
    }
  }
  if (io.contains("sharpen_scale")) {
    const json& s = io.at("sharpen_scale");
    if (s == "full")
      c.io.sharpen_scale = SharpenScale::Full;
    else if (s == "reduced")
      c.io.sharpen_scale = SharpenScale::Reduced;
    else
      detail::config_fail("io.sharpen_scale must be \"full\" or \"reduced\"");
  }

  const json& wald = detail::section(root, "wald", {"gains", "patch", "stride", "val_fraction", "seed", "hpf_gain"});
  if (wald.contains("gains")) {
    const json& g = wald.at("gains");
    if (!g.is_object()) detail::config_fail("wald.gains must map band names to gains");
    for (const auto& [band, v] : g.items()) {
      if (!v.is_number()) detail::config_fail("wald.gains." + band + " must be a number");
      const double gain = v.get<double>();
      if (!(gain > 0.0 && gain < 1.0)) detail::config_fail("wald.gains." + band + " must lie in (0, 1)");
      c.wald.gains.per_band[band] = gain;
    }
  }
  c.wald.patch = detail::get_count(wald, "patch", c.wald.patch);
  c.wald.stride = detail::get_count(wald, "stride", c.wald.stride);
  c.wald.val_fraction = detail::get_real(wald, "val_fraction", c.wald.val_fraction);
  if (!(c.wald.val_fraction >= 0.0 && c.wald.val_fraction < 1.0))
    detail::config_fail("wald.val_fraction must lie in [0, 1)");
  c.wald.seed = detail::get_count(wald, "seed", c.wald.seed, 0);
  c.wald.hpf_gain = detail::get_real(wald, "hpf_gain", c.wald.hpf_gain);
  if (!(c.wald.hpf_gain > 0.0 && c.wald.hpf_gain < 1.0)) detail::config_fail("wald.hpf_gain must lie in (0, 1)");

  const json& model = detail::section(root, "model", {"channels", "flags"});
  if (model.contains("channels")) {
    const json& ch = model.at("channels");
    if (!ch.is_array() || ch.size() != 2 || !ch[0].is_number_unsigned() || !ch[1].is_number_unsigned() ||
        ch[0].get<std::size_t>() == 0 || ch[1].get<std::size_t>() == 0)
      detail::config_fail("model.channels must be two positive hidden widths");
    c.model.hidden1 = ch[0].get<std::size_t>();
    c.model.hidden2 = ch[1].get<std::size_t>();
  }
  if (model.contains("flags")) {
    const json& f = detail::section(model, "flags", {"use_z", "use_hpf"});
    c.model.flags.use_z = detail::get_bool(f, "use_z", true);
    c.model.flags.use_hpf = detail::get_bool(f, "use_hpf", true);
  }

  const json& tr = detail::section(root, "train", {"epochs", "batch", "lr", "momentum"});
  c.train.epochs = detail::get_count(tr, "epochs", c.train.epochs);
  c.train.batch = detail::get_count(tr, "batch", c.train.batch);
  c.train.lr = detail::get_real(tr, "lr", c.train.lr);
  c.train.momentum = detail::get_real(tr, "momentum", c.train.momentum);
  c.train_config().validate();

  const json& m = detail::section(root, "metrics", {"q_window", "ergas_ratio"});
  c.metrics.q_window = detail::get_count(m, "q_window", c.metrics.q_window);
  c.metrics.ergas_ratio = detail::get_real(m, "ergas_ratio", c.metrics.ergas_ratio);
  if (!(c.metrics.ergas_ratio > 0.0)) detail::config_fail("metrics.ergas_ratio must be positive");
  return c;
}

inline RunConfig load_run_config(const std::filesystem::path& path) {
  const std::vector<std::uint8_t> bytes = detail::read_file(path);
  return parse_run_config(std::string(bytes.begin(), bytes.end()), path.parent_path());
}

}  // namespace sen2sharp

#endif  // SEN2SHARP_CONFIG_HPP
