#pragma once

#include <Eigen/Dense>
#include <functional>

#include "evolve/errors.hpp"

namespace evolve {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using MatrixFn = std::function<Matrix(double)>;
using VectorFn = std::function<Vector(double)>;

inline Matrix symmetrize(const Matrix& a) { return 0.5 * (a + a.transpose()); }

// Extreme eigenvalues of the symmetric pencil (A, B) with B positive definite.
struct PencilExtremes {
  double min;
  double max;
};

inline PencilExtremes pencil_extremes(const Matrix& a, const Matrix& b) {
  Eigen::GeneralizedSelfAdjointEigenSolver<Matrix> es(symmetrize(a), symmetrize(b),
                                                      Eigen::EigenvaluesOnly | Eigen::Ax_lBx);
  if (es.info() != Eigen::Success)
    throw SingularGramError("generalized eigensolve failed (right matrix not SPD?)");
  const auto& ev = es.eigenvalues();
  return {ev.minCoeff(), ev.maxCoeff()};
}

inline double pencil_min(const Matrix& a, const Matrix& b) { return pencil_extremes(a, b).min; }
inline double pencil_max(const Matrix& a, const Matrix& b) { return pencil_extremes(a, b).max; }

// Smallest eigenvalue of a symmetric matrix.
inline double min_eigenvalue(const Matrix& a) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(a), Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

// Symmetric inverse square root; requires a positive definite argument.
inline Matrix inverse_sqrt(const Matrix& a) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(a));
  const Vector& ev = es.eigenvalues();
  if (ev.minCoeff() <= 0.0)
    throw SingularGramError("inverse_sqrt: matrix is not positive definite");
  Vector inv = ev.array().rsqrt();
  return es.eigenvectors() * inv.asDiagonal() * es.eigenvectors().transpose();
}

namespace detail {
// rcond() is a 1-norm estimate and misses rank deficiency on small PSD
// matrices; the pivot ratio of the factorization is the reliable signal.
inline void check_ldlt(const Eigen::LDLT<Matrix>& ldlt, double pivot_floor) {
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive())
    throw SingularGramError("spd_solve: Gram matrix is not positive definite");
  const auto& d = ldlt.vectorD();
  double mx = d.maxCoeff();
  if (!(mx > 0.0) || d.minCoeff() <= pivot_floor * mx)
    throw SingularGramError("spd_solve: Gram matrix numerically singular");
}
}  // namespace detail

// Solve with an SPD matrix, rejecting near-singular systems.
inline Vector spd_solve(const Matrix& a, const Vector& rhs, double pivot_floor = 1e-14) {
  Eigen::LDLT<Matrix> ldlt(symmetrize(a));
  detail::check_ldlt(ldlt, pivot_floor);
  return ldlt.solve(rhs);
}

inline Matrix spd_solve(const Matrix& a, const Matrix& rhs, double pivot_floor = 1e-14) {
  Eigen::LDLT<Matrix> ldlt(symmetrize(a));
  detail::check_ldlt(ldlt, pivot_floor);
  return ldlt.solve(rhs);
}

// Central difference of a matrix path with one Richardson step; second-order
// one-sided stencils at the interval ends.
inline Matrix fd_matrix_derivative(const MatrixFn& f, double t, double horizon, double h) {
  auto central = [&](double step) { return ((f(t + step) - f(t - step)) / (2.0 * step)).eval(); };
  if (t - h >= 0.0 && t + h <= horizon) {
    Matrix coarse = central(h);
    Matrix fine = central(0.5 * h);
    return (4.0 * fine - coarse) / 3.0;
  }
  if (t + 2.0 * h <= horizon)
    return (-3.0 * f(t) + 4.0 * f(t + h) - f(t + 2.0 * h)) / (2.0 * h);
  if (t - 2.0 * h >= 0.0)
    return (3.0 * f(t) - 4.0 * f(t - h) + f(t - 2.0 * h)) / (2.0 * h);
  throw StencilError("fd_matrix_derivative: stencil of width " + std::to_string(h) +
                     " does not fit in [0," + std::to_string(horizon) + "] at t=" +
                     std::to_string(t));
}

}  // namespace evolve
