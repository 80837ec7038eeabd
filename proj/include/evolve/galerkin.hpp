#pragma once

#include "evolve/problem.hpp"

namespace evolve {

enum class Scheme { BackwardEuler, ImplicitMidpoint };

struct StepperConfig {
  Scheme scheme = Scheme::ImplicitMidpoint;
  int steps = 100;
  double lin_tol = 1e-10;
};

enum class InitMode { BTruncation, HProjection };

// The coefficient path of every transported basis direction is constant, so
// its material derivative is the zero path; returns the largest derivative
// magnitude actually measured (exactly zero).
double transported_basis_check(const std::shared_ptr<const SpaceFamily>& fam,
                               const TimeGrid& grid);

// H(t)-orthogonal projection onto the span of the first N hierarchy modes:
// solves the leading Gram block against the moment vector.
Vector project(const SpaceFamily& fam, double t, int N, const Vector& u_hat);

struct InitialData {
  Vector u0N;         // length N
  InitMode mode;
  double h0_ratio;    // |u0N|_{H0} / |u0|_{H0}
  double v0_ratio;    // |u0N|_{V0} / |u0|_{V0}
};

// B-truncation keeps the leading coefficients (requires the hierarchy to be
// orthogonal in both Gram matrices at t = 0); H-projection uses `project`.
InitialData build_initial_data(const ParabolicProblem& prob, int N, InitMode mode);

struct AssembledSystem {
  Matrix time_form;   // leading block of the l-form matrix
  Matrix elliptic;    // leading block of a_s + a_n
  Matrix drift;       // leading block of the metric-derivative matrix
  Vector load;        // pairings of f with the first N directions
};

AssembledSystem assemble(const ParabolicProblem& prob, int N, double t);

struct StageSample {
  double t;
  Vector u;     // length N
  Vector udot;  // length N
};

struct SolveResult {
  Trajectory u;      // full-dimension path, zero beyond the first N modes
  Trajectory udot;   // derivative path recovered from the scheme stages
  std::vector<StageSample> stages;
  int N = 0;
  StepperConfig config;
  InitMode init_mode = InitMode::BTruncation;
  Vector u0N;
};

// One-step integration of the truncated system on the grid nodes.
SolveResult solve(const ParabolicProblem& prob, int N, const StepperConfig& cfg,
                  const TimeGrid& grid, InitMode init_mode = InitMode::BTruncation);

// Max normalized defect of the discrete equation at the scheme's stage values.
double discrete_residual(const ParabolicProblem& prob, const SolveResult& sol);

}  // namespace evolve
