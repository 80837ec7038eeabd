#include <CLI11.hpp>
#include <iostream>

#include "evolve/runner.hpp"

int main(int argc, char** argv) {
  CLI::App app{"evolve: batch validators, solves and convergence studies for "
               "parabolic problems on evolving spaces"};

  std::string config_path;
  std::string out_dir;
  std::string command;
  std::uint64_t seed = 0;
  bool seed_set = false;

  app.add_option("--config", config_path, "path to an INI-style run configuration")
      ->required();
  app.add_option("--out", out_dir, "output directory (overrides the config)");
  app.add_option("--command", command,
                 "validate | solve | converge | infsup | report (overrides the config)");
  auto* seed_opt = app.add_option("--seed", seed, "seed for randomized validators");

  CLI11_PARSE(app, argc, argv);
  seed_set = seed_opt->count() > 0;

  evolve::RunConfig cfg;
  try {
    cfg = evolve::parse_config_file(config_path);
    if (!out_dir.empty()) cfg.out_dir = out_dir;
    if (!command.empty()) cfg.command = command;
    if (seed_set) cfg.seed = seed;
    if (cfg.command != "validate" && cfg.command != "solve" && cfg.command != "converge" &&
        cfg.command != "infsup" && cfg.command != "report")
      throw evolve::ParseError("unknown command '" + cfg.command + "'", 0, 0);
  } catch (const evolve::ParseError& e) {
    std::cerr << "config error";
    if (e.line > 0) std::cerr << " at line " << e.line << ", column " << e.col;
    std::cerr << ": " << e.what() << "\n";
    return evolve::kExitParseError;
  }

  return evolve::run(cfg, std::cout);
}
