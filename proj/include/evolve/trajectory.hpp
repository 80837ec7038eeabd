#pragma once

#include <filesystem>
#include <memory>
#include <vector>

#include "evolve/space_family.hpp"

namespace evolve {

// Vector-valued interpolating cubic spline, not-a-knot end conditions.
// Columns of `values` are the nodal vectors.
class CubicSpline {
 public:
  CubicSpline(std::vector<double> nodes, Matrix values);

  Vector value(double t) const;
  Vector derivative(double t) const;
  const std::vector<double>& nodes() const { return nodes_; }
  const Matrix& node_values() const { return values_; }

 private:
  int cell(double t) const;
  std::vector<double> nodes_;
  Matrix values_;
  Matrix moments_;  // second derivatives at the nodes, per coordinate
};

enum class Smoothness { C0, C1, ClosedForm };

// An element of the space-time trajectory space, stored as the coefficient
// path of its pullback: t -> u(t) in R^n. Either a closed-form evaluator or
// nodal values with cubic-spline interpolation.
class Trajectory {
 public:
  static Trajectory closed_form(std::shared_ptr<const SpaceFamily> fam, VectorFn value,
                                VectorFn derivative = nullptr);
  static Trajectory nodal(std::shared_ptr<const SpaceFamily> fam, std::vector<double> nodes,
                          Matrix values, Smoothness tag = Smoothness::C1);
  static Trajectory zero(std::shared_ptr<const SpaceFamily> fam);
  static Trajectory constant(std::shared_ptr<const SpaceFamily> fam, const Vector& w);

  static Trajectory from_csv(std::shared_ptr<const SpaceFamily> fam,
                             const std::filesystem::path& path,
                             Smoothness tag = Smoothness::C1);
  void to_csv(const std::filesystem::path& path) const;  // nodal only

  Vector value(double t) const;
  Smoothness smoothness() const { return tag_; }
  bool is_nodal() const { return spline_ != nullptr; }
  const SpaceFamily& family() const { return *fam_; }
  const std::shared_ptr<const SpaceFamily>& family_ptr() const { return fam_; }

  // Pullback-coordinate derivative path; in these coordinates this is the
  // material derivative. C0 trajectories are rejected.
  Trajectory material_derivative() const;

  static Trajectory linear_combination(double a, const Trajectory& u, double b,
                                       const Trajectory& v);

  // An empty trajectory; must be assigned before evaluation.
  Trajectory() = default;

 private:
  std::shared_ptr<const SpaceFamily> fam_;
  Smoothness tag_ = Smoothness::ClosedForm;
  VectorFn value_fn_;
  VectorFn deriv_fn_;
  std::shared_ptr<const CubicSpline> spline_;
};

enum class NormKind { H, V, Vstar };

// Quadrature approximation of the space-time norm in the requested scale.
// For Vstar the path is interpreted as dual coordinates.
double l2_norm(const Trajectory& traj, NormKind which, const TimeGrid& grid);

// Dual coordinates of a state path under the H pairing: t -> gram_h(t) u(t).
Trajectory as_dual(const Trajectory& state_traj);

// Compactly supported scalar profiles attached to transported directions:
// test functions t -> zeta_j(t) * (transported w_j).
struct TestFunction {
  std::function<double(double)> zeta;
  std::function<double(double)> zeta_dot;
  Vector w;
};

struct TestFunctionFamily {
  std::vector<TestFunction> fns;
  // zeta_j(t) = sin(j pi t / T) against cyclically chosen coordinate directions.
  static TestFunctionFamily standard(const SpaceFamily& fam, int count);
};

// Max over test functions of the normalized defect in the duality identity
// that defines the weak material derivative; near zero iff `cand` (dual
// coordinates) is the weak material derivative of u against these tests.
double weak_matder_residual(const Trajectory& u, const Trajectory& cand,
                            const TestFunctionFamily& tests, const TimeGrid& grid);

// Max over interior grid nodes of the defect in the moving-space product rule
// d/dt (u, v)_H = (du, v)_H + (dv, u)_H + lambda(u, v), normalized so the
// result is scale-free.
double transport_residual(const Trajectory& u, const Trajectory& v, const TimeGrid& grid);

// Normalized defect of the integrated (endpoint) form of the product rule.
double ibp_check(const Trajectory& u, const Trajectory& v, const TimeGrid& grid);

// Measured constant in  max_t |u(t)|_H <= C (|u|_{L2 V} + |du|_{L2 V*}).
double embedding_constant(const Trajectory& u, const TimeGrid& grid);

}  // namespace evolve
