#ifndef SEN2SHARP_COMMANDS_HPP
#define SEN2SHARP_COMMANDS_HPP

#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <system_error>
#include <vector>

#include "sen2sharp/baselines.hpp"
#include "sen2sharp/config.hpp"
#include "sen2sharp/detail/bytes.hpp"
#include "sen2sharp/fusion.hpp"
#include "sen2sharp/metrics.hpp"
#include "sen2sharp/net.hpp"
#include "sen2sharp/preview.hpp"
#include "sen2sharp/raster.hpp"
#include "sen2sharp/wald.hpp"

namespace sen2sharp {

/// Files produced by one command. Each file is written under a temporary
/// name and renamed into place; if the command does not commit, everything
/// it wrote is removed.
class OutputSet {
 public:
  OutputSet() = default;
  OutputSet(const OutputSet&) = delete;
  OutputSet& operator=(const OutputSet&) = delete;
  ~OutputSet() {
    if (committed_) return;
    std::error_code ec;
    for (const auto& p : written_) std::filesystem::remove(p, ec);
  }

  void write(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
    std::filesystem::path tmp = path;
    tmp += ".part";
    try {
      detail::write_file(tmp, bytes);
      std::filesystem::rename(tmp, path);
    } catch (...) {
      std::error_code ec;
      std::filesystem::remove(tmp, ec);
      throw;
    }
    written_.push_back(path);
  }

  void write(const std::filesystem::path& path, const std::string& text) {
    write(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
  }

  void commit() { committed_ = true; }
  const std::vector<std::filesystem::path>& written() const { return written_; }

 private:
  std::vector<std::filesystem::path> written_;
  bool committed_ = false;
};

namespace detail {

inline void require_file(const std::filesystem::path& p) {
  require(std::filesystem::is_regular_file(p), Errc::IoFailure, "missing input file " + p.string());
}

inline void require_output_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  require(!ec && std::filesystem::is_directory(dir), Errc::IoFailure,
          "cannot create output directory " + dir.string());
}

inline void require_parent(const std::filesystem::path& p) {
  if (p.has_parent_path()) require_output_dir(p.parent_path());
}

inline ReducedScene load_reduced(const RunConfig& cfg) {
  return ReducedScene{load_raster(cfg.out("z_down.msr")), load_raster(cfg.out("x_down.msr")),
                      load_raster(cfg.out("reference.msr"))};
}

}  // namespace detail

inline std::filesystem::path default_checkpoint(const RunConfig& cfg) { return cfg.out("model.fmc"); }

/// Wald degradation of the input scene into z_down.msr, x_down.msr and
/// reference.msr.
inline std::vector<std::filesystem::path> cmd_degrade(const RunConfig& cfg) {
  detail::require_file(cfg.io.input_z);
  detail::require_file(cfg.io.input_x);
  detail::require_output_dir(cfg.io.output);
  const Scene scene(load_raster(cfg.io.input_z), load_raster(cfg.io.input_x));
  const ReducedScene rs = make_reduced_scene(scene, cfg.wald.gains);
  OutputSet out;
  out.write(cfg.out("z_down.msr"), encode_raster(rs.z_down));
  out.write(cfg.out("x_down.msr"), encode_raster(rs.x_down));
  out.write(cfg.out("reference.msr"), encode_raster(rs.reference));
  out.commit();
  return out.written();
}

struct TrainOutcome {
  std::filesystem::path checkpoint;
  std::filesystem::path history;
  double final_val_loss = 0.0;
  double final_train_loss = 0.0;
};

/// Trains on the degraded scene; writes the checkpoint and history.csv.
inline TrainOutcome cmd_train(const RunConfig& cfg, const std::optional<std::filesystem::path>& checkpoint = {}) {
  const std::filesystem::path ckpt = checkpoint.value_or(default_checkpoint(cfg));
  for (const char* f : {"z_down.msr", "x_down.msr", "reference.msr"}) detail::require_file(cfg.out(f));
  detail::require_parent(ckpt);
  const TrainConfig tc = cfg.train_config();
  const Dataset ds = make_dataset(detail::load_reduced(cfg), tc);
  const TrainResult r = train(ds, tc);
  OutputSet out;
  out.write(ckpt, encode_checkpoint(r.model, nullptr));
  out.write(cfg.out("history.csv"), r.history.to_csv());
  out.commit();
  return TrainOutcome{ckpt, cfg.out("history.csv"), r.history.epochs.back().val_loss,
                      r.history.epochs.back().train_loss};
}

struct SharpenOptions {
  std::optional<std::filesystem::path> checkpoint;
  std::size_t tile = 256;
  std::size_t overlap = 16;
  std::optional<std::filesystem::path> preview;
};

/// Sharpens the configured scene (full or reduced scale) into fused.msr.
inline std::vector<std::filesystem::path> cmd_sharpen(const RunConfig& cfg, const SharpenOptions& opt = {}) {
  const std::filesystem::path ckpt = opt.checkpoint.value_or(default_checkpoint(cfg));
  const bool reduced = cfg.io.sharpen_scale == SharpenScale::Reduced;
  const std::filesystem::path zp = reduced ? cfg.out("z_down.msr") : cfg.io.input_z;
  const std::filesystem::path xp = reduced ? cfg.out("x_down.msr") : cfg.io.input_x;
  detail::require_file(ckpt);
  detail::require_file(zp);
  detail::require_file(xp);
  detail::require_output_dir(cfg.io.output);
  if (opt.preview) detail::require_parent(*opt.preview);
  require(opt.tile > 2 * opt.overlap, Errc::BadTiling, "tile must exceed twice the overlap");

  const FusionModel model = load_checkpoint(ckpt).model;
  require_flags(model, cfg.model.flags);
  const Scene scene(load_raster(zp), load_raster(xp));
  const RasterStack fused = sharpen_scene(model, scene, opt.tile, opt.overlap, cfg.train_config().hpf_kernel());
  OutputSet out;
  out.write(cfg.out("fused.msr"), encode_raster(fused));
  if (opt.preview) out.write(*opt.preview, encode_ppm(render_preview(fused, cfg.io.preview_bands)));
  out.commit();
  return out.written();
}

/// Scores fused.msr against reference.msr; writes report.json and report.csv.
inline MetricsReport cmd_evaluate(const RunConfig& cfg) {
  detail::require_file(cfg.out("fused.msr"));
  detail::require_file(cfg.out("reference.msr"));
  const RasterStack fused = load_raster(cfg.out("fused.msr")), ref = load_raster(cfg.out("reference.msr"));
  require(fused.width() == ref.width() && fused.height() == ref.height(), Errc::ShapeMismatch,
          "fused.msr is " + std::to_string(fused.width()) + "x" + std::to_string(fused.height()) +
              " but the reference is " + std::to_string(ref.width()) + "x" + std::to_string(ref.height()) +
              "; sharpen with io.sharpen_scale = \"reduced\" before evaluating");
  const MetricsReport r = evaluate(fused, ref, cfg.metrics);
  nlohmann::json j = r.to_json();
  OutputSet out;
  out.write(cfg.out("report.json"), j.dump(2) + "\n");
  out.write(cfg.out("report.csv"), r.csv_header() + "\n" + r.csv_row("fused") + "\n");
  out.commit();
  return r;
}

struct CompareRow {
  std::string method;
  MetricsReport report;
};

/// Every method on the degraded scene, scored against the reference. One
/// proposed row per checkpoint, labelled by its ablation flags.
inline std::vector<CompareRow> compare_methods(const ReducedScene& rs, const std::vector<FusionModel>& models,
                                               const SeparableKernel& hpf, const MetricsOptions& metrics) {
  std::vector<CompareRow> rows;
  for (const MethodProduct& p : baseline_suite(rs.z_down, rs.x_down))
    rows.push_back({p.method, evaluate(p.fused, rs.reference, metrics)});
  for (const FusionModel& m : models)
    rows.push_back({m.flags.label(), evaluate(forward_sr(m, &rs.z_down, rs.x_down, hpf), rs.reference, metrics)});
  return rows;
}

inline std::string compare_csv(const std::vector<CompareRow>& rows) {
  require(!rows.empty(), Errc::InvalidArgument, "nothing to compare");
  std::string s = rows.front().report.csv_header() + "\n";
  for (const CompareRow& r : rows) s += r.report.csv_row(r.method) + "\n";
  return s;
}

/// Writes compare.csv. Without explicit checkpoints the default one is used
/// when present.
inline std::vector<CompareRow> cmd_compare(const RunConfig& cfg, std::vector<std::filesystem::path> checkpoints = {}) {
  for (const char* f : {"z_down.msr", "x_down.msr", "reference.msr"}) detail::require_file(cfg.out(f));
  if (checkpoints.empty() && std::filesystem::is_regular_file(default_checkpoint(cfg)))
    checkpoints.push_back(default_checkpoint(cfg));
  for (const auto& c : checkpoints) detail::require_file(c);
  std::vector<FusionModel> models;
  for (const auto& c : checkpoints) models.push_back(load_checkpoint(c).model);
  const std::vector<CompareRow> rows =
      compare_methods(detail::load_reduced(cfg), models, cfg.train_config().hpf_kernel(), cfg.metrics);
  OutputSet out;
  out.write(cfg.out("compare.csv"), compare_csv(rows));
  out.commit();
  return rows;
}

}  // namespace sen2sharp

#endif  // SEN2SHARP_COMMANDS_HPP
