#pragma once

#include <iosfwd>

#include "evolve/config.hpp"

namespace evolve {

// Exit codes of the batch front end.
inline constexpr int kExitOk = 0;
inline constexpr int kExitValidationFailure = 1;
inline constexpr int kExitParseError = 2;
inline constexpr int kExitBlowUp = 3;

// Executes the configured command and writes report.csv (plus ledger.csv,
// convergence.svg, u_N.csv where applicable) under cfg.out_dir.
// Returns 0 only if every pass flag in the report is true.
int run(const RunConfig& cfg, std::ostream& log);

// Number of worker threads for sweep cells (EVOLVE_THREADS, default 1).
int thread_cap();

}  // namespace evolve
