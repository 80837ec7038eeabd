#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "evolve/galerkin.hpp"
#include "evolve/instances.hpp"

namespace evolve {

// Batch run description. Parsed from INI-style text: [section] headers and
// key = value lines, decimal literals only.
struct RunConfig {
  InstanceSpec instance;
  std::string command = "validate";  // validate | solve | converge | infsup | report
  std::vector<int> levels{8};
  std::vector<int> step_counts{100};
  StepperConfig stepper;
  InitMode init_mode = InitMode::BTruncation;
  std::vector<double> gammas{0.0, 0.5, 1.0, 2.0};
  std::filesystem::path out_dir = "out";
  std::uint64_t seed = 0;
  bool emit_svg = true;
  double u0_decay = 0.5;
  double f_decay = 0.7;
  std::string f_kind = "decay";  // zero | decay | manufactured
  LoadTag f_tag = LoadTag::StateH;
};

RunConfig parse_config_text(const std::string& text);
RunConfig parse_config_file(const std::filesystem::path& path);

}  // namespace evolve
