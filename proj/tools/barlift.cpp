#include <cstdint>
#include <cstdio>
#include <exception>
#include <string>

#include <CLI11.hpp>

#include "barlift/runner.hpp"

int main(int argc, char** argv) {
  CLI::App app{"barlift: cooperative bar transport by two quadrotors"};
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "run an experiment from a config file");
  std::string config_path;
  run->add_option("config", config_path, "key=value config file")->required();
  std::string out_dir = ".";
  run->add_option("--output", out_dir, "directory for trace/report files");
  std::uint64_t seed = 0;
  auto* seed_opt = run->add_option("--seed", seed, "override the config seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    barlift::ExperimentConfig cfg = barlift::load_config(config_path);
    if (seed_opt->count() > 0) cfg.seed = seed;
    return barlift::run_experiment(cfg, out_dir);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
}
