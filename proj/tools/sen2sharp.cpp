// sen2sharp: degrade, train, sharpen, evaluate and compare from one JSON
// config. Exit status is 0 only when every output was written.

#include <cstdio>
#include <exception>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "sen2sharp/commands.hpp"

namespace fs = std::filesystem;
using namespace sen2sharp;

namespace {

struct Args {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::vector<std::string> checkpoints;
  std::size_t tile = 256;
  std::size_t overlap = 16;
  std::string preview;
};

std::optional<fs::path> single_checkpoint(const Args& a) {
  if (a.checkpoints.empty()) return std::nullopt;
  if (a.checkpoints.size() > 1) fail(Errc::InvalidArgument, "this command takes at most one --checkpoint");
  return fs::path(a.checkpoints.front());
}

int run(const std::string& command, const Args& a) {
  RunConfig cfg = load_run_config(a.config);
  if (a.seed) cfg.wald.seed = *a.seed;

  if (command == "degrade") {
    for (const fs::path& p : cmd_degrade(cfg)) std::cout << "wrote " << p.string() << '\n';
  } else if (command == "train") {
    const TrainOutcome t = cmd_train(cfg, single_checkpoint(a));
    std::cout << "wrote " << t.checkpoint.string() << '\n' << "wrote " << t.history.string() << '\n';
    std::printf("final train loss %.9g\nfinal val loss %.9g\n", t.final_train_loss, t.final_val_loss);
  } else if (command == "sharpen") {
    SharpenOptions o;
    o.checkpoint = single_checkpoint(a);
    o.tile = a.tile;
    o.overlap = a.overlap;
    if (!a.preview.empty()) o.preview = fs::path(a.preview);
    for (const fs::path& p : cmd_sharpen(cfg, o)) std::cout << "wrote " << p.string() << '\n';
  } else if (command == "evaluate") {
    const MetricsReport r = cmd_evaluate(cfg);
    std::printf("Q %.6f  ERGAS %.6f  HCC %.6f\n", r.q_mean, r.ergas, r.hcc_mean);
  } else if (command == "compare") {
    std::vector<fs::path> ckpts(a.checkpoints.begin(), a.checkpoints.end());
    std::printf("%-30s %10s %10s %10s\n", "method", "Q", "ERGAS", "HCC");
    for (const CompareRow& r : cmd_compare(cfg, ckpts))
      std::printf("%-30s %10.6f %10.6f %10.6f\n", r.method.c_str(), r.report.q_mean, r.report.ergas,
                  r.report.hcc_mean);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sentinel-2 20 m band sharpening"};
  app.require_subcommand(1, 1);
  Args args;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", args.config, "run configuration (JSON)")->required()->check(CLI::ExistingFile);
    sub->add_option("--seed", args.seed, "overrides wald.seed");
  };
  CLI::App* degrade = app.add_subcommand("degrade", "write the reduced-resolution training scene");
  CLI::App* train_cmd = app.add_subcommand("train", "train a fusion model on the reduced scene");
  CLI::App* sharpen = app.add_subcommand("sharpen", "sharpen the 20 m bands with a trained model");
  CLI::App* evaluate_cmd = app.add_subcommand("evaluate", "score fused.msr against reference.msr");
  CLI::App* compare = app.add_subcommand("compare", "score every method on the reduced scene");
  for (CLI::App* s : {degrade, train_cmd, sharpen, evaluate_cmd, compare}) common(s);
  train_cmd->add_option("--checkpoint", args.checkpoints, "checkpoint to write")->expected(1);
  sharpen->add_option("--checkpoint", args.checkpoints, "checkpoint to load")->expected(1);
  sharpen->add_option("--tile", args.tile, "tile edge in pixels")->check(CLI::PositiveNumber);
  sharpen->add_option("--overlap", args.overlap, "tile overlap in pixels");
  sharpen->add_option("--preview", args.preview, "write an RGB preview (PPM)");
  compare->add_option("--checkpoint", args.checkpoints, "checkpoint to score; repeatable")->allow_extra_args(false);

  CLI11_PARSE(app, argc, argv);
  const std::string command = app.get_subcommands().front()->get_name();
  try {
    return run(command, args);
  } catch (const Error& e) {
    std::cerr << "sen2sharp " << command << ": " << to_string(e.code()) << ": " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "sen2sharp " << command << ": " << e.what() << '\n';
    return 1;
  }
}
