#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "anisohit/cli/run.hpp"

int main(int argc, char** argv) {
  using namespace anisohit::cli;
  CLI::App app{"Anisotropic Gaussian field hitting-probability experiments"};
  RunOptions opt;
  std::uint64_t seed = 0;
  std::string out;
  app.add_option("pipeline", opt.pipeline, "Pipeline to run")
      ->required()
      ->check(CLI::IsMember(pipeline_names()));
  app.add_option("--config", opt.config_path, "Config file (key = value lines)")->required();
  auto* seed_opt = app.add_option("--seed", seed, "Override the config seed");
  auto* out_opt = app.add_option("--out", out, "Output directory");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kConfigError;
  }
  if (*seed_opt) opt.seed = seed;
  if (*out_opt) opt.out = out;
  return run(opt, std::cout, std::cerr);
}
