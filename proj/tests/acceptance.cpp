// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.
// Criteria 4 and 5 train six models on 512x512 synthetic scenes and dominate
// the runtime.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "gradcheck.hpp"
#include "sen2sharp/commands.hpp"
#include "sen2sharp/synthetic.hpp"
#include "support.hpp"

using namespace sen2sharp;
using namespace testing_support;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

double rel_err(double got, double want) {
  return std::fabs(got - want) / std::max(std::fabs(want), 1e-300);
}

// --- brute-force metric formulas --------------------------------------------

double q_brute(const Grid& a, const Grid& b, std::size_t win) {
  double total = 0;
  std::size_t used = 0;
  const double n = static_cast<double>(win * win);
  for (std::size_t y0 = 0; y0 + win <= a.height(); ++y0)
    for (std::size_t x0 = 0; x0 + win <= a.width(); ++x0) {
      double ma = 0, mb = 0;
      for (std::size_t y = y0; y < y0 + win; ++y)
        for (std::size_t x = x0; x < x0 + win; ++x) ma += a(x, y), mb += b(x, y);
      ma /= n, mb /= n;
      double va = 0, vb = 0, c = 0;
      for (std::size_t y = y0; y < y0 + win; ++y)
        for (std::size_t x = x0; x < x0 + win; ++x) {
          va += (a(x, y) - ma) * (a(x, y) - ma);
          vb += (b(x, y) - mb) * (b(x, y) - mb);
          c += (a(x, y) - ma) * (b(x, y) - mb);
        }
      va /= n, vb /= n, c /= n;
      const double den = (va + vb) * (ma * ma + mb * mb);
      if (den < 1e-12) continue;
      total += 4 * c * ma * mb / den;
      ++used;
    }
  return total / static_cast<double>(used);
}

double ergas_brute(const RasterStack& f, const RasterStack& r, double ratio) {
  double acc = 0;
  for (std::size_t b = 0; b < r.band_count(); ++b) {
    double se = 0, mu = 0;
    const auto& fs_ = f.band(b).samples;
    const auto& rs = r.band(b).samples;
    for (std::size_t i = 0; i < rs.size(); ++i) {
      const double d = static_cast<double>(fs_[i]) - rs[i];
      se += d * d;
      mu += rs[i];
    }
    const double n = static_cast<double>(rs.size());
    acc += (se / n) / ((mu / n) * (mu / n));
  }
  return 100 * ratio * std::sqrt(acc / static_cast<double>(r.band_count()));
}

double hcc_brute(const RasterStack& f, const RasterStack& r) {
  auto lap = [](const Grid& g) {
    const long w = static_cast<long>(g.width()), h = static_cast<long>(g.height());
    auto at = [&](long x, long y) {
      x = x < 0 ? -1 - x : (x >= w ? 2 * w - 1 - x : x);
      y = y < 0 ? -1 - y : (y >= h ? 2 * h - 1 - y : y);
      return g(static_cast<std::size_t>(x), static_cast<std::size_t>(y));
    };
    std::vector<double> out;
    for (long y = 0; y < h; ++y)
      for (long x = 0; x < w; ++x) out.push_back(4 * at(x, y) - at(x - 1, y) - at(x + 1, y) - at(x, y - 1) - at(x, y + 1));
    return out;
  };
  double acc = 0;
  for (std::size_t b = 0; b < r.band_count(); ++b) {
    const auto a = lap(f.grid(b)), c = lap(r.grid(b));
    const double n = static_cast<double>(a.size());
    double sa = 0, sc = 0, saa = 0, scc = 0, sac = 0;
    for (std::size_t i = 0; i < a.size(); ++i)
      sa += a[i], sc += c[i], saa += a[i] * a[i], scc += c[i] * c[i], sac += a[i] * c[i];
    acc += (sac - sa * sc / n) / std::sqrt((saa - sa * sa / n) * (scc - sc * sc / n));
  }
  return acc / static_cast<double>(r.band_count());
}

RasterStack noisy_copy(const RasterStack& s, double sigma, std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, sigma);
  std::vector<Grid> g = s.grids();
  for (Grid& band : g)
    for (double& v : band.values()) v += n(rng);
  return RasterStack::from_grids(s.band_names(), g, s.resolution_m());
}

struct Verdict {
  bool pass = false;
  std::string detail;
};

Verdict metric_oracles() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(2024);
  const std::size_t window = 8;
  double worst_q = 0, worst_e = 0, worst_h = 0;
  bool ideal = true;
  for (int pair = 0; pair < 50; ++pair) {
    const RasterStack ref = random_stack(target_names(), 16, 16, 20.0, rng);
    const RasterStack fused = pair % 2 ? noisy_copy(ref, 0.05, rng) : random_stack(target_names(), 16, 16, 20.0, rng);
    for (std::size_t b = 0; b < 6; ++b)
      worst_q = std::max(worst_q, rel_err(q_index(fused.grid(b), ref.grid(b), window),
                                          q_brute(fused.grid(b), ref.grid(b), window)));
    worst_e = std::max(worst_e, rel_err(ergas(fused, ref, 0.5), ergas_brute(fused, ref, 0.5)));
    worst_h = std::max(worst_h, rel_err(hcc(fused, ref), hcc_brute(fused, ref)));
    const MetricsReport same = evaluate(ref, ref, {window, 0.5});
    ideal = ideal && same.q_mean == 1.0 && same.ergas == 0.0 && same.hcc_mean == 1.0;
  }
  const double secs = seconds_since(t0);
  char buf[200];
  std::snprintf(buf, sizeof buf, "max rel err Q %.2e ERGAS %.2e HCC %.2e; identical -> (1,0,1) %s; %.2f s",
                worst_q, worst_e, worst_h, ideal ? "exact" : "NOT exact", secs);
  return {worst_q < 1e-9 && worst_e < 1e-9 && worst_h < 1e-9 && ideal && secs < 10.0, buf};
}

Verdict gradient_integrity() {
  const auto t0 = Clock::now();
  GradCheckResult worst;
  for (const AblationFlags f : {AblationFlags{true, true}, AblationFlags{false, true}}) {
    const GradCheckCase c = make_gradcheck_case(f, 4, 2, 8, f.use_z ? 11 : 12);
    const GradCheckResult r = check_gradients(c, 100000, kGradStep, 1);
    worst.checked = worst.checked == 0 ? r.checked : std::min(worst.checked, r.checked);
    worst.max_rel_error = std::max(worst.max_rel_error, r.max_rel_error);
  }
  const double secs = seconds_since(t0);
  char buf[200];
  std::snprintf(buf, sizeof buf, "%zu parameters per model, max rel err %.2e, %.2f s", worst.checked,
                worst.max_rel_error, secs);
  return {worst.checked >= 500 && worst.max_rel_error < 1e-4 && secs < 60.0, buf};
}

FusionModel zero_conv(FusionModel m) {
  for (ConvLayer& l : m.layers) {
    std::fill(l.weights.begin(), l.weights.end(), 0.0);
    std::fill(l.bias.begin(), l.bias.end(), 0.0);
  }
  return m;
}

Verdict residual_identity() {
  const SyntheticScene syn = make_synthetic_scene(128, 3);
  const RasterStack bicubic = sharpen_bicubic(syn.scene.x);
  const SeparableKernel hpf = mtf_gaussian_kernel(kDefaultNyquistGain, 2);
  bool exact = true;
  for (const AblationFlags f : {AblationFlags{true, true}, AblationFlags{false, true}}) {
    const FusionModel m = zero_conv(make_model(f, ModelShape{16, 16}, 7));
    exact = exact && sharpen_scene(m, syn.scene, 256, 16, hpf) == bicubic;
    exact = exact && sharpen_scene(m, syn.scene, 48, 8, hpf) == bicubic;
  }
  return {exact, exact ? "128x128 output bit-identical to bicubic (whole and tiled)" : "output differs from bicubic"};
}

struct SeedOutcome {
  double ergas_proposed = 0, ergas_hpf = 0, ergas_bicubic = 0, ergas_no_z = 0;
  double q_proposed = 0, q_bicubic = 0;
};

TrainConfig acceptance_train_config(std::uint64_t seed, const AblationFlags& flags) {
  TrainConfig c;
  c.epochs = 200;
  c.batch_size = 16;
  c.learning_rate = 1e-2;
  c.momentum = 0.9;
  c.patch = 33;
  c.stride = 17;
  c.val_fraction = 0.1;
  c.seed = seed;
  c.flags = flags;
  c.shape = ModelShape{16, 16};
  return c;
}

SeedOutcome ordering_run(std::uint64_t seed) {
  const SyntheticScene syn = make_synthetic_scene(512, seed);
  const ReducedScene rs = make_reduced_scene(syn.scene);
  std::vector<FusionModel> models;
  for (const AblationFlags f : {AblationFlags{true, true}, AblationFlags{false, true}}) {
    const TrainConfig tc = acceptance_train_config(seed, f);
    const auto t0 = Clock::now();
    const TrainResult r = train(make_dataset(rs, tc), tc);
    std::printf("  seed %llu %-22s trained in %6.1f s, final train %.3e val %.3e\n",
                static_cast<unsigned long long>(seed), f.label().c_str(), seconds_since(t0),
                r.history.epochs.back().train_loss, r.history.epochs.back().val_loss);
    models.push_back(r.model);
  }
  const std::vector<CompareRow> rows =
      compare_methods(rs, models, acceptance_train_config(seed, {}).hpf_kernel(), MetricsOptions{});
  SeedOutcome o;
  for (const CompareRow& r : rows) {
    std::printf("  seed %llu %-22s Q %.5f  ERGAS %.4f  HCC %.4f\n", static_cast<unsigned long long>(seed),
                r.method.c_str(), r.report.q_mean, r.report.ergas, r.report.hcc_mean);
    if (r.method == "bicubic") o.ergas_bicubic = r.report.ergas, o.q_bicubic = r.report.q_mean;
    if (r.method == "HPF") o.ergas_hpf = r.report.ergas;
    if (r.method == "proposed") o.ergas_proposed = r.report.ergas, o.q_proposed = r.report.q_mean;
    if (r.method == "proposed (without z)") o.ergas_no_z = r.report.ergas;
  }
  std::fflush(stdout);
  return o;
}

Verdict filter_contracts() {
  double worst_gain = 0, worst_sum = 0;
  for (double g : {0.2, 0.3, 0.4}) {
    const SeparableKernel k = mtf_gaussian_kernel(g, 2);
    // response at Nyquist of the decimated grid: frequency 1/(2r) cycles/sample
    double re = 0;
    for (std::size_t i = 0; i < k.taps.size(); ++i)
      re += k.taps[i] * std::cos(2 * std::numbers::pi * 0.25 * (static_cast<double>(i) - static_cast<double>(k.radius())));
    worst_gain = std::max(worst_gain, std::fabs(re - g));
  }
  std::vector<SeparableKernel> lowpass{box_kernel(3), box_kernel(5), box_kernel(7)};
  for (int i = 1; i < 100; ++i)
    for (std::size_t r : {2u, 3u, 4u}) lowpass.push_back(mtf_gaussian_kernel(i / 100.0, r));
  for (const SeparableKernel& k : lowpass) worst_sum = std::max(worst_sum, std::fabs(k.sum() - 1.0));
  char buf[160];
  std::snprintf(buf, sizeof buf, "max |H(Nyquist) - gain| %.2e; max |sum - 1| %.2e over %zu kernels", worst_gain,
                worst_sum, lowpass.size());
  return {worst_gain < 1e-3 && worst_sum <= 1e-12, buf};
}

Verdict round_trips() {
  TempDir dir;
  const SyntheticScene syn = make_synthetic_scene(192, 9);
  save_raster(syn.scene.x, dir / "x.msr");
  const auto first = detail::read_file(dir / "x.msr");
  save_raster(load_raster(dir / "x.msr"), dir / "x2.msr");
  const bool container = first == detail::read_file(dir / "x2.msr") && load_raster(dir / "x.msr") == syn.scene.x;

  // a briefly trained model so every parameter and running statistic is non-trivial
  TrainConfig tc = acceptance_train_config(5, {});
  tc.epochs = 2;
  const TrainResult tr = train(make_dataset(make_reduced_scene(syn.scene), tc), tc);
  const OptimizerState opt(tr.model, tc.learning_rate, tc.momentum);
  save_checkpoint(tr.model, dir / "m.fmc", &opt);
  const Checkpoint back = load_checkpoint(dir / "m.fmc");
  save_checkpoint(back.model, dir / "m2.fmc", back.optimizer ? &*back.optimizer : nullptr);
  const bool checkpoint = detail::read_file(dir / "m.fmc") == detail::read_file(dir / "m2.fmc") &&
                          back.model == tr.model && back.optimizer && *back.optimizer == opt;

  const SeparableKernel hpf = tc.hpf_kernel();
  const RasterStack whole = forward_sr(tr.model, syn.scene, hpf);
  double tiled_err = 0;
  for (auto [tile, overlap] : {std::pair<std::size_t, std::size_t>{64, 8}, {50, 12}, {100, 16}}) {
    const RasterStack t = sharpen_scene(tr.model, syn.scene, tile, overlap, hpf);
    for (std::size_t b = 0; b < 6; ++b) tiled_err = std::max(tiled_err, max_abs_diff(t.grid(b), whole.grid(b)));
  }

  std::mt19937_64 rng(4);
  const std::vector<Grid> bands = random_stack(target_names(), 64, 64, 20.0, rng).grids();
  const PcaTransform pca = PcaTransform::fit(bands);
  const std::vector<Grid> rt = pca.inverse(pca.forward(bands));
  double pca_err = 0;
  for (std::size_t b = 0; b < bands.size(); ++b) pca_err = std::max(pca_err, max_abs_diff(rt[b], bands[b]));

  char buf[200];
  std::snprintf(buf, sizeof buf, "container %s, checkpoint %s, tiled max diff %.2e, PCA round trip %.2e",
                container ? "identical" : "DIFFERS", checkpoint ? "identical" : "DIFFERS", tiled_err, pca_err);
  return {container && checkpoint && tiled_err < 1e-9 && pca_err < 1e-9, buf};
}

Verdict determinism() {
  TempDir root;
  const SyntheticScene syn = make_synthetic_scene(128, 13);
  auto run_once = [&](const std::string& name) {
    const fs::path dir = root / name;
    fs::create_directories(dir);
    save_raster(syn.scene.z, dir / "z.msr");
    save_raster(syn.scene.x, dir / "x.msr");
    const RunConfig cfg = parse_run_config(R"({
      "io": {"input_z": "z.msr", "input_x": "x.msr", "output": "out"},
      "wald": {"patch": 33, "stride": 17, "val_fraction": 0.1, "seed": 77},
      "model": {"channels": [16, 16]},
      "train": {"epochs": 10, "batch": 16, "lr": 0.01, "momentum": 0.9},
      "metrics": {"q_window": 32}
    })", dir);
    cmd_degrade(cfg);
    cmd_train(cfg);
    SharpenOptions o;
    o.tile = 96;
    o.overlap = 16;
    cmd_sharpen(cfg, o);
    return std::pair{detail::read_file(cfg.out("model.fmc")), detail::read_file(cfg.out("fused.msr"))};
  };
  const auto a = run_once("a"), b = run_once("b");
  const bool ckpt = a.first == b.first, fused = a.second == b.second;
  std::string d = std::string("checkpoint ") + (ckpt ? "identical" : "DIFFERS") + ", fused raster " +
                  (fused ? "identical" : "DIFFERS");
  return {ckpt && fused, d};
}

}  // namespace

int main() {
  std::vector<std::pair<std::string, Verdict>> results;
  auto report = [&](const std::string& name, const Verdict& v) {
    std::printf("AC%zu %s %s: %s\n", results.size() + 1, v.pass ? "PASS" : "FAIL", name.c_str(), v.detail.c_str());
    std::fflush(stdout);
    results.emplace_back(name, v);
  };
  auto guarded = [](const std::function<Verdict()>& f) {
    try {
      return f();
    } catch (const std::exception& e) {
      return Verdict{false, std::string("exception: ") + e.what()};
    }
  };

  report("metric oracles", guarded(metric_oracles));
  report("gradient integrity", guarded(gradient_integrity));
  report("residual identity", guarded(residual_identity));

  const auto t0 = Clock::now();
  std::vector<SeedOutcome> seeds;
  std::string error;
  try {
    for (std::uint64_t s : {1u, 2u, 3u}) seeds.push_back(ordering_run(s));
  } catch (const std::exception& e) {
    error = e.what();
  }
  const double train_secs = seconds_since(t0);
  int order_ok = 0, ablation_ok = 0;
  std::string order_detail, ablation_detail;
  for (const SeedOutcome& o : seeds) {
    const bool ord = o.ergas_proposed < o.ergas_hpf && o.ergas_hpf < o.ergas_bicubic && o.q_proposed > o.q_bicubic;
    const bool abl = o.ergas_proposed < o.ergas_no_z;
    order_ok += ord;
    ablation_ok += abl;
    char buf[160];
    std::snprintf(buf, sizeof buf, "[%.3f < %.3f < %.3f %s] ", o.ergas_proposed, o.ergas_hpf, o.ergas_bicubic,
                  ord ? "ok" : "no");
    order_detail += buf;
    std::snprintf(buf, sizeof buf, "[%.3f < %.3f %s] ", o.ergas_proposed, o.ergas_no_z, abl ? "ok" : "no");
    ablation_detail += buf;
  }
  char tail[96];
  std::snprintf(tail, sizeof tail, "%d/3 seeds, %.0f s", order_ok, train_secs);
  report("ordering", {error.empty() && order_ok >= 2, error.empty() ? order_detail + tail : "exception: " + error});
  std::snprintf(tail, sizeof tail, "%d/3 seeds", ablation_ok);
  report("ablation", {error.empty() && ablation_ok >= 2, error.empty() ? ablation_detail + tail : "exception: " + error});

  report("filter contracts", guarded(filter_contracts));
  report("round trips", guarded(round_trips));
  report("determinism", guarded(determinism));

  std::size_t failed = 0;
  for (const auto& r : results) failed += !r.second.pass;
  std::printf("%zu/%zu criteria passed\n", results.size() - failed, results.size());
  return failed == 0 ? 0 : 1;
}
