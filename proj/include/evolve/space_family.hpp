#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>

#include "evolve/linalg.hpp"
#include "evolve/time_grid.hpp"

namespace evolve {

// A compatible pair of evolving Hilbert spaces in pullback coordinates: the
// coordinate space is R^n (image of the inverse flow), and the moving geometry
// is carried entirely by the Gram matrix paths
//   gram_h(t): inner product of the larger space,
//   gram_v(t): inner product of the smaller (smooth) space.
// Pushforward and pullback never appear as matrices; transporting a fixed
// coordinate vector is the identity in these coordinates.
class SpaceFamily {
 public:
  struct Options {
    double fd_step_scale = 1e-5;   // h = fd_step_scale * max(1, T)
    double spd_tol = 1e-10;        // relative to trace/n
    double rcond_floor = 1e-14;    // dual-norm solve pivot-ratio floor
    std::optional<double> declared_cx;
    std::optional<Matrix> declared_h0;  // expected gram_h(0), when known a priori
  };

  SpaceFamily(int dim, double horizon, MatrixFn gram_h, MatrixFn gram_v,
              MatrixFn gram_h_dot, Options opt);
  SpaceFamily(int dim, double horizon, MatrixFn gram_h, MatrixFn gram_v,
              MatrixFn gram_h_dot = nullptr);

  // Tabulated family: plain-text header "n T M" followed by M+1 blocks of
  // row-major H-Gram then V-Gram entries at uniform times.
  static std::shared_ptr<const SpaceFamily> from_file(const std::filesystem::path& path);
  void to_file(const std::filesystem::path& path, int blocks) const;

  int dim() const { return dim_; }
  double horizon() const { return horizon_; }
  const Options& options() const { return opt_; }
  bool has_analytic_h_dot() const { return static_cast<bool>(gram_h_dot_); }

  Matrix gram_h(double t) const;
  Matrix gram_v(double t) const;
  // Time derivative of gram_h: analytic when supplied, else finite differences
  // (central + one Richardson step; one-sided second order at the ends).
  Matrix gram_h_dot(double t) const;

  double inner_h(double t, const Vector& u, const Vector& v) const;
  double inner_v(double t, const Vector& u, const Vector& v) const;
  double norm_h(double t, const Vector& u) const;
  double norm_v(double t, const Vector& u) const;

  // Norm of the functional v |-> g.v over the unit ball of the smooth space.
  double dual_norm_vstar(double t, const Vector& g) const;

  // Rate of change of the squared moving norm of a transported vector.
  double theta(double t, const Vector& u0) const;

  // Time derivative of the pulled-back inner product, evaluated by
  // polarization of theta; exactly symmetric in (u, v) by construction.
  double lambda_form(double t, const Vector& u, const Vector& v) const;

  // T with (T u, v)_{H at 0} equal to the moving inner product of the
  // transported vectors: gram_h(0)^{-1} gram_h(t).
  Matrix transfer_operator(double t) const;

  double fd_step() const { return opt_.fd_step_scale * std::max(1.0, horizon_); }

 private:
  void check_time(double t) const;
  void check_dim(const Vector& v) const;

  int dim_;
  double horizon_;
  MatrixFn gram_h_;
  MatrixFn gram_v_;
  MatrixFn gram_h_dot_;
  Options opt_;
};

struct CompatibilityReport {
  double cx_h = 0.0;           // measured uniform equivalence constant, H scale
  double cx_v = 0.0;           // same for the V scale
  double worst_t_h = 0.0;
  double worst_t_v = 0.0;
  double min_spd_margin_h = 0.0;  // min over samples of (min eig)/(trace/n)
  double min_spd_margin_v = 0.0;
  double max_jump = 0.0;       // continuity modulus over adjacent samples
  bool continuity_pass = false;
  bool initial_gram_matches = true;  // gram_h(0) vs declared_h0, when declared
  std::optional<double> declared_cx;
  bool declared_cx_pass = true;
  bool semigroup_structural = true;  // composition of pullbacks is exact in coordinates
  bool pass() const {
    return continuity_pass && initial_gram_matches && declared_cx_pass;
  }
};

// Samples SPD margins, equivalence constants and the continuity modulus on the
// grid (or n_samples uniform points when n_samples > 1). An SPD violation is a
// hard failure carrying the offending time.
CompatibilityReport check_compatibility(const SpaceFamily& fam, const TimeGrid& grid,
                                        int n_samples = 0, double continuity_bound = 0.25);

}  // namespace evolve
