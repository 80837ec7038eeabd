#include "evolve/galerkin.hpp"

#include <cmath>

namespace evolve {

double transported_basis_check(const std::shared_ptr<const SpaceFamily>& fam,
                               const TimeGrid& grid) {
  double worst = 0.0;
  for (int j = 0; j < fam->dim(); ++j) {
    Trajectory basis = Trajectory::constant(fam, Vector::Unit(fam->dim(), j));
    Trajectory d = basis.material_derivative();
    for (double t : grid.nodes()) worst = std::max(worst, d.value(t).cwiseAbs().maxCoeff());
  }
  return worst;
}

Vector project(const SpaceFamily& fam, double t, int N, const Vector& u_hat) {
  if (N < 1 || N > fam.dim()) throw PreconditionError("project: invalid truncation level");
  if (u_hat.size() != fam.dim()) throw DimensionError("project: vector length");
  Matrix b = fam.gram_h(t);
  Vector moments = (b * u_hat).head(N);
  return spd_solve(Matrix(b.topLeftCorner(N, N)), moments);
}

namespace {

bool nearly_diagonal(const Matrix& g) {
  Matrix off = g;
  off.diagonal().setZero();
  return off.norm() <= 1e-10 * std::max(1.0, g.norm());
}

}  // namespace

InitialData build_initial_data(const ParabolicProblem& prob, int N, InitMode mode) {
  const SpaceFamily& fam = prob.family();
  if (N < 1 || N > fam.dim())
    throw PreconditionError("build_initial_data: invalid truncation level");
  const Vector& u0 = prob.initial_state();

  Vector u0N;
  if (mode == InitMode::BTruncation) {
    Matrix b0 = fam.gram_h(0.0);
    Matrix k0 = fam.gram_v(0.0);
    if (!nearly_diagonal(b0) || !nearly_diagonal(k0))
      throw PreconditionError(
          "build_initial_data: truncation mode needs a hierarchy orthogonal at t=0 "
          "in both the H and V Gram matrices; use the projection mode instead");
    u0N = u0.head(N);
  } else {
    u0N = project(fam, 0.0, N, u0);
  }

  Vector padded = Vector::Zero(fam.dim());
  padded.head(N) = u0N;
  double h0_full = fam.norm_h(0.0, u0);
  double v0_full = fam.norm_v(0.0, u0);
  InitialData out;
  out.u0N = std::move(u0N);
  out.mode = mode;
  out.h0_ratio = h0_full > 0.0 ? fam.norm_h(0.0, padded) / h0_full : 0.0;
  out.v0_ratio = v0_full > 0.0 ? fam.norm_v(0.0, padded) / v0_full : 0.0;
  return out;
}

AssembledSystem assemble(const ParabolicProblem& prob, int N, double t) {
  if (N < 1 || N > prob.dim()) throw PreconditionError("assemble: invalid truncation level");
  AssembledSystem sys;
  sys.time_form = prob.l_matrix(t).topLeftCorner(N, N);
  sys.elliptic = prob.a_matrix(t).topLeftCorner(N, N);
  sys.drift = prob.lambda_matrix(t).topLeftCorner(N, N);
  sys.load = prob.load_dual(t).head(N);
  return sys;
}

namespace {

Vector checked_solve(const Matrix& m, const Vector& rhs, long step) {
  Eigen::LDLT<Matrix> ldlt(m);
  if (ldlt.info() != Eigen::Success)
    throw BlowUpError("time step " + std::to_string(step) + ": singular system matrix", step);
  Vector x = ldlt.solve(rhs);
  if (!x.allFinite())
    throw BlowUpError("time step " + std::to_string(step) + ": non-finite update", step);
  return x;
}

void ensure_time_form_spd(const Matrix& time_form, long step) {
  Eigen::LDLT<Matrix> ldlt(symmetrize(time_form));
  bool ok = ldlt.info() == Eigen::Success && ldlt.isPositive();
  if (ok) {
    const auto& d = ldlt.vectorD();
    double mx = d.maxCoeff();
    ok = mx > 0.0 && d.minCoeff() > 1e-14 * mx;
  }
  if (!ok)
    throw BlowUpError("time step " + std::to_string(step) + ": time form lost positivity",
                      step);
}

// Consistent derivative at a node: time_form * udot = load - (elliptic+drift) u.
Vector ode_slope(const ParabolicProblem& prob, int N, double t, const Vector& u, long step) {
  AssembledSystem sys = assemble(prob, N, t);
  ensure_time_form_spd(sys.time_form, step);
  return checked_solve(sys.time_form, Vector(sys.load - (sys.elliptic + sys.drift) * u), step);
}

}  // namespace

SolveResult solve(const ParabolicProblem& prob, int N, const StepperConfig& cfg,
                  const TimeGrid& grid, InitMode init_mode) {
  const SpaceFamily& fam = prob.family();
  const std::vector<double>& t = grid.nodes();
  const int m = grid.steps();
  const int n = fam.dim();

  InitialData init = build_initial_data(prob, N, init_mode);
  Matrix u_nodes(N, m + 1);
  u_nodes.col(0) = init.u0N;

  SolveResult out;
  out.N = N;
  out.config = cfg;
  out.init_mode = init_mode;
  out.u0N = init.u0N;
  out.stages.reserve(m);

  std::vector<double> dot_nodes_t;
  std::vector<Vector> dot_nodes_v;

  if (cfg.scheme == Scheme::BackwardEuler) {
    dot_nodes_t.reserve(m + 1);
    dot_nodes_v.reserve(m + 1);
    dot_nodes_t.push_back(t[0]);
    dot_nodes_v.push_back(ode_slope(prob, N, t[0], init.u0N, 0));
    for (int k = 0; k < m; ++k) {
      double dt = t[k + 1] - t[k];
      AssembledSystem sys = assemble(prob, N, t[k + 1]);
      ensure_time_form_spd(sys.time_form, k + 1);
      Matrix lhs = sys.time_form + dt * (sys.elliptic + sys.drift);
      Vector rhs = sys.time_form * u_nodes.col(k) + dt * sys.load;
      Vector next = checked_solve(lhs, rhs, k + 1);
      u_nodes.col(k + 1) = next;
      Vector slope = (next - u_nodes.col(k)) / dt;
      out.stages.push_back({t[k + 1], next, slope});
      dot_nodes_t.push_back(t[k + 1]);
      dot_nodes_v.push_back(slope);
    }
  } else {
    dot_nodes_t.reserve(m + 2);
    dot_nodes_v.reserve(m + 2);
    dot_nodes_t.push_back(t[0]);
    dot_nodes_v.push_back(ode_slope(prob, N, t[0], init.u0N, 0));
    for (int k = 0; k < m; ++k) {
      double dt = t[k + 1] - t[k];
      double th = 0.5 * (t[k] + t[k + 1]);
      AssembledSystem sys = assemble(prob, N, th);
      ensure_time_form_spd(sys.time_form, k + 1);
      Matrix ops = sys.elliptic + sys.drift;
      Matrix lhs = sys.time_form + 0.5 * dt * ops;
      Vector rhs = sys.load - ops * u_nodes.col(k);
      Vector slope = checked_solve(lhs, rhs, k + 1);
      u_nodes.col(k + 1) = u_nodes.col(k) + dt * slope;
      out.stages.push_back({th, (u_nodes.col(k) + 0.5 * dt * slope).eval(), slope});
      dot_nodes_t.push_back(th);
      dot_nodes_v.push_back(slope);
    }
    dot_nodes_t.push_back(t[m]);
    dot_nodes_v.push_back(ode_slope(prob, N, t[m], u_nodes.col(m), m));
  }

  if (!u_nodes.allFinite()) throw BlowUpError("solution contains non-finite values", m);

  Matrix padded = Matrix::Zero(n, m + 1);
  padded.topRows(N) = u_nodes;
  out.u = Trajectory::nodal(prob.family_ptr(), t, std::move(padded), Smoothness::C1);

  Matrix dot_padded = Matrix::Zero(n, dot_nodes_v.size());
  for (std::size_t j = 0; j < dot_nodes_v.size(); ++j)
    dot_padded.col(j).head(N) = dot_nodes_v[j];
  out.udot =
      Trajectory::nodal(prob.family_ptr(), dot_nodes_t, std::move(dot_padded), Smoothness::C1);
  return out;
}

double discrete_residual(const ParabolicProblem& prob, const SolveResult& sol) {
  double worst = 0.0;
  for (const auto& st : sol.stages) {
    AssembledSystem sys = assemble(prob, sol.N, st.t);
    Vector defect = sys.time_form * st.udot + (sys.elliptic + sys.drift) * st.u - sys.load;
    double scale = 1.0 + sys.load.norm() + (sys.time_form * st.udot).norm();
    worst = std::max(worst, defect.norm() / scale);
  }
  return worst;
}

}  // namespace evolve
