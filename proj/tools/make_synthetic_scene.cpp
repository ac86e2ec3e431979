// Writes a band-correlated synthetic scene as z.msr (4 bands, 10 m) and
// x.msr (6 bands, 20 m).

#include <filesystem>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "sen2sharp/raster.hpp"
#include "sen2sharp/synthetic.hpp"

int main(int argc, char** argv) {
  CLI::App app{"synthetic Sentinel-2 style scene"};
  std::size_t size = 512;
  std::uint64_t seed = 1;
  std::string out = ".";
  app.add_option("--size", size, "10 m extent in pixels (even)");
  app.add_option("--seed", seed, "scene seed");
  app.add_option("--out", out, "output directory");
  CLI11_PARSE(app, argc, argv);
  try {
    const auto s = sen2sharp::make_synthetic_scene(size, seed);
    std::filesystem::create_directories(out);
    sen2sharp::save_raster(s.scene.z, std::filesystem::path(out) / "z.msr");
    sen2sharp::save_raster(s.scene.x, std::filesystem::path(out) / "x.msr");
  } catch (const std::exception& e) {
    std::cerr << "make_synthetic_scene: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
