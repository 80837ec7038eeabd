#pragma once

#include "evolve/galerkin.hpp"

namespace evolve {

struct LedgerEntry {
  int N = 0;
  int steps = 0;
  Scheme scheme = Scheme::ImplicitMidpoint;
  InitMode init_mode = InitMode::BTruncation;
  LoadTag f_tag = LoadTag::StateH;
  double norm_uN_l2v = 0.0;
  double norm_duN_l2h = 0.0;
  double norm_duN_l2vstar = 0.0;
  double max_uN_h = 0.0;
  double norm_u0_h0 = 0.0;
  double norm_u0_v0 = 0.0;
  double norm_f_l2vstar = 0.0;
  double norm_f_l2h = 0.0;  // NaN when the load is only dual-tagged
  double ratio_uN = 0.0;
  double ratio_duN = 0.0;
  double energy_residual = 0.0;
};

using EstimateLedger = std::vector<LedgerEntry>;

LedgerEntry make_ledger_entry(const ParabolicProblem& prob, const SolveResult& sol,
                              const TimeGrid& quad);

struct AprioriReport {
  std::vector<int> levels;
  std::vector<double> ratios;
  double sup_over_last = 0.0;    // sup of ratios relative to the finest level
  double spread_last3 = 0.0;     // relative spread of the last three ratios
  bool bounded = false;          // sup <= 1.05 x last
  bool stable = false;           // last-three spread <= 5%
  bool pass() const { return bounded && stable; }
};

// Boundedness of |u_N|_{L2 V} relative to the data, across truncation levels.
AprioriReport apriori_uN(const EstimateLedger& ledger);

// Same for the derivative in the H scale; requires an H-tagged load and
// truncation-mode initial data on every entry.
AprioriReport apriori_dotuN(const EstimateLedger& ledger);

// Normalized defect of the integrated energy balance of the solved path.
double energy_identity_residual(const ParabolicProblem& prob, const SolveResult& sol,
                                const TimeGrid& quad);

struct RateRow {
  int N = 0;
  int steps = 0;
  double error = 0.0;  // L2-V distance to the reference
};

struct RateTable {
  std::vector<RateRow> rows;
  double temporal_order = 0.0;  // log-log fit over the step sweep at the largest N
  double spatial_floor = 0.0;   // smallest error over the level sweep at the largest M
};

RateTable convergence_study(const ParabolicProblem& prob, const std::vector<int>& levels,
                            const std::vector<int>& step_counts, const StepperConfig& cfg,
                            const Trajectory& reference, InitMode init_mode);

// Reference by a fine solve; refuses references coarser than 2x the largest
// level and 4x the largest step count.
RateTable convergence_study_fine(const ParabolicProblem& prob, const std::vector<int>& levels,
                                 const std::vector<int>& step_counts, const StepperConfig& cfg,
                                 int ref_level, int ref_steps, InitMode init_mode);

struct InfSupConfig {
  double gamma = 0.0;
  long max_space_time_dim = 4000;  // memory guard on N x M
};

// Smallest singular value of the norm-weighted space-time operator
// (piecewise-linear trial path with zero initial trace, discontinuous
// piecewise-linear test, graph norm on the trial side). gamma != 0 applies an
// exponential column weighting to the trial degrees of freedom.
double inf_sup_estimate(const ParabolicProblem& prob, int N, const TimeGrid& grid,
                        const InfSupConfig& cfg = InfSupConfig{});

struct GammaSweepPoint {
  double gamma;
  double sigma_min;
};

std::vector<GammaSweepPoint> inf_sup_gamma_sweep(const ParabolicProblem& prob, int N,
                                                 const TimeGrid& grid,
                                                 const std::vector<double>& gammas);

// Superposition defect over random data pairs plus exactness of the
// homogeneous problem; near zero certifies linearity and uniqueness of the
// discrete solution map.
double uniqueness_check(const ParabolicProblem& prob, int N, const StepperConfig& cfg,
                        const TimeGrid& grid, std::uint64_t seed);

}  // namespace evolve
