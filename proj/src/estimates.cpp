#include "evolve/estimates.hpp"

#include <cmath>

#include "evolve/rng.hpp"

namespace evolve {

namespace {

double safe_ratio(double num, double denom) {
  if (denom <= 0.0) return num <= 1e-300 ? 0.0 : std::numeric_limits<double>::infinity();
  return num / denom;
}

}  // namespace

LedgerEntry make_ledger_entry(const ParabolicProblem& prob, const SolveResult& sol,
                              const TimeGrid& quad) {
  const SpaceFamily& fam = prob.family();
  LedgerEntry e;
  e.N = sol.N;
  e.steps = sol.config.steps;
  e.scheme = sol.config.scheme;
  e.init_mode = sol.init_mode;
  e.f_tag = prob.load_tag();

  e.norm_uN_l2v = l2_norm(sol.u, NormKind::V, quad);
  e.norm_duN_l2h = l2_norm(sol.udot, NormKind::H, quad);
  e.norm_duN_l2vstar = std::sqrt(std::max(0.0, quad.integrate([&](double t) {
    Vector g = fam.gram_h(t) * sol.udot.value(t);
    double d = fam.dual_norm_vstar(t, g);
    return d * d;
  })));
  e.max_uN_h = 0.0;
  for (double t : quad.nodes()) e.max_uN_h = std::max(e.max_uN_h, fam.norm_h(t, sol.u.value(t)));

  e.norm_u0_h0 = fam.norm_h(0.0, prob.initial_state());
  e.norm_u0_v0 = fam.norm_v(0.0, prob.initial_state());
  e.norm_f_l2vstar = std::sqrt(std::max(0.0, quad.integrate([&](double t) {
    double d = fam.dual_norm_vstar(t, Vector(prob.load_dual(t)));
    return d * d;
  })));
  if (prob.load_tag() == LoadTag::StateH)
    e.norm_f_l2h = l2_norm(prob.load(), NormKind::H, quad);
  else
    e.norm_f_l2h = std::numeric_limits<double>::quiet_NaN();

  e.ratio_uN = safe_ratio(e.norm_uN_l2v, e.norm_u0_h0 + e.norm_f_l2vstar);
  if (prob.load_tag() == LoadTag::StateH)
    e.ratio_duN = safe_ratio(e.norm_duN_l2h, e.norm_u0_v0 + e.norm_f_l2h);
  else
    e.ratio_duN = std::numeric_limits<double>::quiet_NaN();
  e.energy_residual = energy_identity_residual(prob, sol, quad);
  return e;
}

namespace {

AprioriReport ratio_report(std::vector<int> levels, std::vector<double> ratios) {
  AprioriReport rep;
  rep.levels = std::move(levels);
  rep.ratios = std::move(ratios);
  const std::size_t n = rep.ratios.size();
  if (n < 3) throw PreconditionError("a priori report needs at least three levels");
  for (double r : rep.ratios)
    if (!std::isfinite(r)) throw PreconditionError("a priori report: non-finite ratio");
  double last = rep.ratios.back();
  double sup = *std::max_element(rep.ratios.begin(), rep.ratios.end());
  rep.sup_over_last = last > 0.0 ? sup / last : (sup > 0.0 ? std::numeric_limits<double>::infinity() : 1.0);
  double lo = rep.ratios[n - 3], hi = lo;
  for (std::size_t i = n - 3; i < n; ++i) {
    lo = std::min(lo, rep.ratios[i]);
    hi = std::max(hi, rep.ratios[i]);
  }
  rep.spread_last3 = last > 0.0 ? (hi - lo) / last : (hi > lo ? std::numeric_limits<double>::infinity() : 0.0);
  rep.bounded = rep.sup_over_last <= 1.05;
  rep.stable = rep.spread_last3 <= 0.05;
  return rep;
}

}  // namespace

AprioriReport apriori_uN(const EstimateLedger& ledger) {
  std::vector<int> levels;
  std::vector<double> ratios;
  for (const auto& e : ledger) {
    levels.push_back(e.N);
    ratios.push_back(e.ratio_uN);
  }
  return ratio_report(std::move(levels), std::move(ratios));
}

AprioriReport apriori_dotuN(const EstimateLedger& ledger) {
  std::vector<int> levels;
  std::vector<double> ratios;
  for (const auto& e : ledger) {
    if (e.f_tag != LoadTag::StateH)
      throw PreconditionError(
          "apriori_dotuN: the derivative estimate requires f in L2_H and u_0 in V_0; "
          "the load is only V*-tagged");
    if (e.init_mode != InitMode::BTruncation)
      throw PreconditionError(
          "apriori_dotuN: the derivative estimate requires truncation-mode initial data "
          "(f in L2_H and u_0 in V_0 hypothesis)");
    levels.push_back(e.N);
    ratios.push_back(e.ratio_duN);
  }
  return ratio_report(std::move(levels), std::move(ratios));
}

double energy_identity_residual(const ParabolicProblem& prob, const SolveResult& sol,
                                const TimeGrid& quad) {
  const SpaceFamily& fam = prob.family();
  double horizon = fam.horizon();
  Vector uT = sol.u.value(horizon);
  Vector u0 = sol.u.value(0.0);
  double end_energy = 0.5 * uT.dot(prob.l_matrix(horizon) * uT);
  double start_energy = 0.5 * u0.dot(prob.l_matrix(0.0) * u0);

  double integral = 0.0, integral_abs = 0.0;
  for (const auto& [t, w] : quad.quad_points()) {
    Vector u = sol.u.value(t);
    double a = u.dot(symmetrize(prob.a_matrix(t)) * u);
    double lam = u.dot(prob.lambda_matrix(t) * u);
    double m = u.dot(prob.m_matrix(t) * u);
    double f = prob.load_dual(t).dot(u);
    integral += w * (a + lam - 0.5 * m - f);
    integral_abs += w * (std::abs(a) + std::abs(lam) + 0.5 * std::abs(m) + std::abs(f));
  }
  double raw = std::abs(end_energy - start_energy + integral);
  double scale = 1.0 + std::abs(end_energy) + std::abs(start_energy) + integral_abs;
  return raw / scale;
}

namespace {

double l2v_distance(const Trajectory& a, const Trajectory& b, const TimeGrid& quad) {
  const SpaceFamily& fam = a.family();
  return std::sqrt(std::max(0.0, quad.integrate([&](double t) {
    Vector d = a.value(t) - b.value(t);
    return fam.inner_v(t, d, d);
  })));
}

double fit_order(const std::vector<int>& steps, const std::vector<double>& errors) {
  // least-squares slope of log(error) against log(1/steps)
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  int n = 0;
  for (std::size_t i = 0; i < steps.size(); ++i) {
    if (errors[i] <= 0.0) continue;
    double x = -std::log(static_cast<double>(steps[i]));
    double y = std::log(errors[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++n;
  }
  if (n < 2) return 0.0;
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace

RateTable convergence_study(const ParabolicProblem& prob, const std::vector<int>& levels,
                            const std::vector<int>& step_counts, const StepperConfig& cfg,
                            const Trajectory& reference, InitMode init_mode) {
  if (levels.empty() || step_counts.empty())
    throw PreconditionError("convergence_study: empty sweep");
  RateTable table;
  int max_level = *std::max_element(levels.begin(), levels.end());
  int max_steps = *std::max_element(step_counts.begin(), step_counts.end());
  TimeGrid quad = TimeGrid::uniform(prob.horizon(), std::max(64, 2 * max_steps));

  std::vector<double> errs_at_max_level;
  std::vector<int> steps_at_max_level;
  double floor = std::numeric_limits<double>::infinity();
  for (int level : levels) {
    for (int steps : step_counts) {
      StepperConfig c = cfg;
      c.steps = steps;
      SolveResult sol = solve(prob, level, c, TimeGrid::uniform(prob.horizon(), steps), init_mode);
      double err = l2v_distance(sol.u, reference, quad);
      table.rows.push_back({level, steps, err});
      if (level == max_level) {
        errs_at_max_level.push_back(err);
        steps_at_max_level.push_back(steps);
      }
      if (steps == max_steps) floor = std::min(floor, err);
    }
  }
  table.temporal_order = fit_order(steps_at_max_level, errs_at_max_level);
  table.spatial_floor = floor;
  return table;
}

RateTable convergence_study_fine(const ParabolicProblem& prob, const std::vector<int>& levels,
                                 const std::vector<int>& step_counts, const StepperConfig& cfg,
                                 int ref_level, int ref_steps, InitMode init_mode) {
  int max_level = *std::max_element(levels.begin(), levels.end());
  int max_steps = *std::max_element(step_counts.begin(), step_counts.end());
  if (ref_level < 2 * max_level || ref_steps < 4 * max_steps)
    throw PreconditionError(
        "convergence_study_fine: reference must be at least 2x finer in level and 4x in steps");
  StepperConfig ref_cfg = cfg;
  ref_cfg.steps = ref_steps;
  SolveResult ref =
      solve(prob, ref_level, ref_cfg, TimeGrid::uniform(prob.horizon(), ref_steps), init_mode);
  return convergence_study(prob, levels, step_counts, cfg, ref.u, init_mode);
}

double inf_sup_estimate(const ParabolicProblem& prob, int N, const TimeGrid& grid,
                        const InfSupConfig& cfg) {
  const SpaceFamily& fam = prob.family();
  const std::vector<double>& t = grid.nodes();
  const int m = grid.steps();
  const long dim = static_cast<long>(N) * m;
  if (dim > cfg.max_space_time_dim)
    throw MemoryGuardError("inf_sup_estimate: space-time dimension " + std::to_string(dim) +
                           " exceeds the configured cap");
  if (pencil_min(prob.l_matrix(0.0), fam.gram_h(0.0)) <= 0.0)
    throw PreconditionError("inf_sup_estimate: time form is not H-coercive at t=0");

  // Trial: piecewise linear path with zero initial value (DOFs at t_1..t_M).
  // Test: discontinuous piecewise linear per cell ({1, theta} shape pair).
  // Constant-per-cell tests cannot see the linear-in-cell component of the
  // operator output, which makes the estimate drift badly under step
  // refinement on stiff instances; the linear pair resolves it. Cell
  // integrals use two Gauss points.
  Matrix op = Matrix::Zero(2 * dim, dim);
  Matrix test_gram_isqrt = Matrix::Zero(2 * dim, 2 * dim);
  Matrix trial_gram = Matrix::Zero(dim, dim);

  const double gauss_offset = 0.5 / std::sqrt(3.0);
  const double theta_q[2] = {0.5 - gauss_offset, 0.5 + gauss_offset};

  for (int k = 0; k < m; ++k) {
    double dt = t[k + 1] - t[k];
    auto col = [N](int node) { return (node - 1) * N; };

    Matrix op0_left = Matrix::Zero(N, N), op0_right = Matrix::Zero(N, N);
    Matrix op1_left = Matrix::Zero(N, N), op1_right = Matrix::Zero(N, N);
    Matrix g00 = Matrix::Zero(N, N), g01 = Matrix::Zero(N, N), g11 = Matrix::Zero(N, N);
    Matrix v_ll = Matrix::Zero(N, N), v_lr = Matrix::Zero(N, N), v_rr = Matrix::Zero(N, N);
    Matrix dual_cell = Matrix::Zero(N, N);

    for (double theta : theta_q) {
      double tq = t[k] + theta * dt;
      double w = 0.5 * dt;
      Matrix l = prob.l_matrix(tq).topLeftCorner(N, N);
      Matrix c = (prob.a_matrix(tq) + prob.lambda_matrix(tq)).topLeftCorner(N, N);
      Matrix kg = fam.gram_v(tq).topLeftCorner(N, N);
      Matrix bg = fam.gram_h(tq).topLeftCorner(N, N);

      Matrix out_left = -l / dt + (1.0 - theta) * c;
      Matrix out_right = l / dt + theta * c;
      op0_left += w * out_left;
      op0_right += w * out_right;
      op1_left += w * theta * out_left;
      op1_right += w * theta * out_right;
      g00 += w * kg;
      g01 += w * theta * kg;
      g11 += w * theta * theta * kg;
      v_ll += w * (1.0 - theta) * (1.0 - theta) * kg;
      v_lr += w * (1.0 - theta) * theta * kg;
      v_rr += w * theta * theta * kg;
      Matrix kinv = spd_solve(kg, Matrix(Matrix::Identity(N, N)));
      dual_cell += w * (bg * kinv * bg);
    }

    if (k >= 1) {
      op.block(2 * k * N, col(k), N, N) += op0_left;
      op.block((2 * k + 1) * N, col(k), N, N) += op1_left;
    }
    op.block(2 * k * N, col(k + 1), N, N) += op0_right;
    op.block((2 * k + 1) * N, col(k + 1), N, N) += op1_right;

    Matrix cell_gram(2 * N, 2 * N);
    cell_gram << g00, g01, g01.transpose(), g11;
    test_gram_isqrt.block(2 * k * N, 2 * k * N, 2 * N, 2 * N) = inverse_sqrt(cell_gram);

    Matrix d = dual_cell / (dt * dt);
    if (k >= 1) {
      trial_gram.block(col(k), col(k), N, N) += v_ll + d;
      trial_gram.block(col(k), col(k + 1), N, N) += v_lr - d;
      trial_gram.block(col(k + 1), col(k), N, N) += v_lr.transpose() - d;
    }
    trial_gram.block(col(k + 1), col(k + 1), N, N) += v_rr + d;
  }

  if (cfg.gamma != 0.0) {
    // Exponential weighting of the trial degrees of freedom; norms stay
    // unweighted so the sweep probes genuinely different operators.
    Vector scale(dim);
    for (int j = 1; j <= m; ++j)
      scale.segment((j - 1) * N, N).setConstant(std::exp(-cfg.gamma * t[j]));
    op = op * scale.asDiagonal();
  }

  Matrix normalized = test_gram_isqrt * op * inverse_sqrt(trial_gram);
  Eigen::BDCSVD<Matrix> svd(normalized);
  return svd.singularValues().minCoeff();
}

std::vector<GammaSweepPoint> inf_sup_gamma_sweep(const ParabolicProblem& prob, int N,
                                                 const TimeGrid& grid,
                                                 const std::vector<double>& gammas) {
  std::vector<GammaSweepPoint> out;
  out.reserve(gammas.size());
  for (double g : gammas) {
    InfSupConfig cfg;
    cfg.gamma = g;
    out.push_back({g, inf_sup_estimate(prob, N, grid, cfg)});
  }
  return out;
}

double uniqueness_check(const ParabolicProblem& prob, int N, const StepperConfig& cfg,
                        const TimeGrid& grid, std::uint64_t seed) {
  const SpaceFamily& fam = prob.family();
  const int n = fam.dim();
  Rng rng(seed);

  auto run = [&](const Vector& u0, const Trajectory& f) {
    ParabolicProblem p = prob.with_data(u0, f, LoadTag::StateH);
    return solve(p, N, cfg, grid, InitMode::HProjection);
  };

  auto random_load = [&]() {
    Vector base = rng.normal_vector(n);
    Vector amp = rng.normal_vector(n);
    return Trajectory::closed_form(
        prob.family_ptr(),
        [base, amp](double t) { return (base + std::sin(1.3 * t) * amp).eval(); },
        [amp](double t) { return (1.3 * std::cos(1.3 * t) * amp).eval(); });
  };

  Vector u0a = rng.normal_vector(n);
  Vector u0b = rng.normal_vector(n);
  Trajectory fa = random_load();
  Trajectory fb = random_load();

  SolveResult sa = run(u0a, fa);
  SolveResult sb = run(u0b, fb);
  SolveResult ssum = run(u0a + u0b, Trajectory::linear_combination(1.0, fa, 1.0, fb));
  SolveResult sscaled = run(2.0 * u0a, Trajectory::linear_combination(2.0, fa, 0.0, fb));

  double defect = 0.0;
  double scale = 1.0;
  for (double t : grid.nodes()) {
    Vector sum = sa.u.value(t) + sb.u.value(t);
    defect = std::max(defect, (ssum.u.value(t) - sum).norm());
    defect = std::max(defect, (sscaled.u.value(t) - 2.0 * sa.u.value(t)).norm());
    scale = std::max(scale, sum.norm());
  }

  SolveResult zero = run(Vector::Zero(n), Trajectory::zero(prob.family_ptr()));
  for (double t : grid.nodes())
    defect = std::max(defect, zero.u.value(t).cwiseAbs().maxCoeff());

  return defect / scale;
}

}  // namespace evolve
