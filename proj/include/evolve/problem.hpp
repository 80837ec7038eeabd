#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "evolve/trajectory.hpp"

namespace evolve {

enum class LoadTag { DualVstar, StateH };

// The linear parabolic operator data in pullback form-matrix representation
// (row = test index, column = trial index):
//   time form      l(t; u, v)   = v . l_form(t) u,
//   elliptic form  a(t; u, v)   = v . (a_s(t) + a_n(t)) u,
//   drift form     lambda(t;.)  = v . gram_h_dot(t) u   (from the family),
// together with the load f and the initial state.
class ParabolicProblem {
 public:
  struct Setup {
    MatrixFn l_form;        // defaults to gram_h (identity time operator)
    MatrixFn l_form_dot;    // optional analytic derivative of l_form
    MatrixFn a_s;           // required, the differentiable part
    MatrixFn a_s_dot;       // optional analytic derivative of a_s
    std::function<double(double, const Vector&)> r_form;  // alternative to a_s_dot
    MatrixFn a_n;            // optional non-differentiable part
    std::optional<Trajectory> load;  // default: zero, H-tagged
    LoadTag load_tag = LoadTag::StateH;
    Vector initial_state;    // default: zero
  };

  ParabolicProblem(std::shared_ptr<const SpaceFamily> fam, Setup setup);

  const SpaceFamily& family() const { return *fam_; }
  const std::shared_ptr<const SpaceFamily>& family_ptr() const { return fam_; }
  int dim() const { return fam_->dim(); }
  double horizon() const { return fam_->horizon(); }

  Matrix l_matrix(double t) const { return setup_.l_form(t); }
  Matrix a_s_matrix(double t) const { return setup_.a_s(t); }
  Matrix a_n_matrix(double t) const;
  Matrix a_matrix(double t) const;
  Matrix lambda_matrix(double t) const { return fam_->gram_h_dot(t); }
  bool has_a_n() const { return static_cast<bool>(setup_.a_n); }
  bool a_s_time_dependent() const { return a_s_time_dependent_; }
  bool has_analytic_a_s_dot() const { return static_cast<bool>(setup_.a_s_dot); }

  // d/dt of the time-form matrix; with a transported basis this is the matrix
  // of the bilinear form that closes the product rule for l.
  Matrix m_matrix(double t) const;
  Matrix a_s_dot_matrix(double t) const;

  // Form matrix of the operator's own time derivative, recovered from the
  // product-rule matrix by removing the drift contribution.
  Matrix l_dot_form(double t) const;

  // d/dt a_s(t; y, y) = 2 a_s(t; y, dy) + r(t; y); supplied or derived.
  double r_value(double t, const Vector& y) const;

  const Trajectory& load() const { return *load_; }
  LoadTag load_tag() const { return setup_.load_tag; }
  // Dual coordinates of the load at time t (pairing against coordinates).
  Vector load_dual(double t) const;

  const Vector& initial_state() const { return u0_; }

  ParabolicProblem with_data(Vector u0, Trajectory f, LoadTag tag) const;

 private:
  std::shared_ptr<const SpaceFamily> fam_;
  Setup setup_;
  std::optional<Trajectory> load_;
  Vector u0_;
  bool a_s_time_dependent_ = false;
};

struct AssumptionEntry {
  std::string id;
  double constant = 0.0;
  double worst_t = 0.0;
  bool pass = false;
  std::string detail;
};

struct AssumptionReport {
  std::vector<AssumptionEntry> entries;
  bool all_pass() const;
  const AssumptionEntry& at(const std::string& id) const;
};

struct ValidatorConfig {
  int random_paths = 4;
  double fd_check_step = 1e-4;
  double product_rule_tol = 1e-6;
  double symmetry_tol = 1e-12;
  double growth_ratio_cap = 1.5;  // truncation-growth rule for the V x H bound
  std::uint64_t seed = 20240901;
};

struct GardingConstants {
  double coercivity = 0.0;  // multiplies the V norm
  double shift = 0.0;       // multiplies the H norm
  bool valid = false;
};

// Coercivity-up-to-shift pair estimated by a line search over the coercivity
// constant; ties resolve toward the largest one.
GardingConstants garding_constants(const ParabolicProblem& prob, const TimeGrid& grid);

// Normalized residual of  d/dt a_s(t; y, y) = 2 a_s(t; y, dy) + r(t; y)
// on random smooth coefficient paths.
double a7_residual(const ParabolicProblem& prob, const TimeGrid& grid, double fd_step,
                   std::uint64_t seed, bool richardson = true);

// Sampled spectral estimates of the structural assumptions on the time
// operator (coercivity, boundedness, symmetry, product rule, derivative bound).
AssumptionReport validate_L(const ParabolicProblem& prob, const TimeGrid& grid,
                            const ValidatorConfig& cfg = ValidatorConfig{});

// Same for the elliptic part: Garding pair, boundedness, positivity of the
// differentiable part, and the differentiation identity for a_s.
AssumptionReport validate_A(const ParabolicProblem& prob, const TimeGrid& grid,
                            const ValidatorConfig& cfg = ValidatorConfig{});

struct WeakFormResidual {
  double pointwise;    // normalized defect of the pointwise weak formulation
  double accumulated;  // normalized defect of the accumulated (distributional) form
};

WeakFormResidual weak_form_residual(const ParabolicProblem& prob, const Trajectory& u,
                                    const TimeGrid& grid);

}  // namespace evolve
