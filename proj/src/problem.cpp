#include "evolve/problem.hpp"

#include <cmath>

#include "evolve/rng.hpp"

namespace evolve {

namespace {

bool matrices_close(const Matrix& a, const Matrix& b) {
  return (a - b).norm() <= 1e-13 * std::max(1.0, a.norm() + b.norm());
}

bool is_symmetric(const Matrix& a) {
  return (a - a.transpose()).norm() <= 1e-12 * std::max(1.0, a.norm());
}

// Component-wise trigonometric path with analytic derivative, for sampled
// differentiation checks.
struct TrigPath {
  Vector base, amp, freq, phase;
  Vector value(double t) const {
    Vector v = base;
    for (int i = 0; i < v.size(); ++i) v[i] += amp[i] * std::sin(freq[i] * t + phase[i]);
    return v;
  }
  Vector derivative(double t) const {
    Vector v(base.size());
    for (int i = 0; i < v.size(); ++i) v[i] = amp[i] * freq[i] * std::cos(freq[i] * t + phase[i]);
    return v;
  }
};

TrigPath random_trig_path(int n, Rng& rng) {
  TrigPath p;
  p.base = rng.normal_vector(n);
  p.amp = rng.normal_vector(n);
  p.freq = Vector(n);
  p.phase = Vector(n);
  for (int i = 0; i < n; ++i) {
    p.freq[i] = rng.uniform(0.5, 2.0);
    p.phase[i] = rng.uniform(0.0, 6.28);
  }
  return p;
}

}  // namespace

ParabolicProblem::ParabolicProblem(std::shared_ptr<const SpaceFamily> fam, Setup setup)
    : fam_(std::move(fam)), setup_(std::move(setup)) {
  if (!fam_) throw PreconditionError("ParabolicProblem: family required");
  if (!setup_.a_s) throw PreconditionError("ParabolicProblem: a_s form required");
  if (!setup_.l_form) {
    auto f = fam_;
    setup_.l_form = [f](double t) { return f->gram_h(t); };
    if (f->has_analytic_h_dot() && !setup_.l_form_dot)
      setup_.l_form_dot = [f](double t) { return f->gram_h_dot(t); };
  }
  const int n = fam_->dim();
  if (setup_.l_form(0.0).rows() != n) throw DimensionError("ParabolicProblem: l_form shape");
  if (setup_.a_s(0.0).rows() != n) throw DimensionError("ParabolicProblem: a_s shape");
  if (setup_.a_n && setup_.a_n(0.0).rows() != n)
    throw DimensionError("ParabolicProblem: a_n shape");

  double horizon = fam_->horizon();
  a_s_time_dependent_ = !matrices_close(setup_.a_s(0.0), setup_.a_s(0.37 * horizon)) ||
                        !matrices_close(setup_.a_s(0.0), setup_.a_s(horizon));
  if (a_s_time_dependent_) {
    if (setup_.a_s_dot && setup_.r_form)
      throw PreconditionError(
          "ParabolicProblem: supply exactly one of a_s_dot and r_form for a "
          "time-dependent a_s");
    if (!setup_.a_s_dot && !setup_.r_form)
      throw PreconditionError(
          "ParabolicProblem: a time-dependent a_s needs a_s_dot or r_form");
    if (setup_.a_s_dot && !is_symmetric(setup_.a_s(0.5 * horizon)))
      throw PreconditionError(
          "ParabolicProblem: auto-derived r requires a symmetric a_s; supply r_form");
  }

  if (setup_.initial_state.size() == 0) setup_.initial_state = Vector::Zero(n);
  if (setup_.initial_state.size() != n)
    throw DimensionError("ParabolicProblem: initial state length");
  u0_ = setup_.initial_state;
  if (setup_.load) {
    load_ = setup_.load;
    if (load_->family().dim() != n)
      throw DimensionError("ParabolicProblem: load dimension mismatch");
  } else {
    load_ = Trajectory::zero(fam_);
  }
}

Matrix ParabolicProblem::a_n_matrix(double t) const {
  if (setup_.a_n) return setup_.a_n(t);
  return Matrix::Zero(dim(), dim());
}

Matrix ParabolicProblem::a_matrix(double t) const {
  Matrix a = setup_.a_s(t);
  if (setup_.a_n) a += setup_.a_n(t);
  return a;
}

Matrix ParabolicProblem::m_matrix(double t) const {
  if (setup_.l_form_dot) return symmetrize(setup_.l_form_dot(t));
  return symmetrize(fd_matrix_derivative(setup_.l_form, t, horizon(), fam_->fd_step()));
}

Matrix ParabolicProblem::a_s_dot_matrix(double t) const {
  if (setup_.a_s_dot) return setup_.a_s_dot(t);
  return fd_matrix_derivative(setup_.a_s, t, horizon(), fam_->fd_step());
}

Matrix ParabolicProblem::l_dot_form(double t) const {
  Matrix composed = fam_->gram_h_dot(t) * spd_solve(fam_->gram_h(t), l_matrix(t));
  return m_matrix(t) - composed;
}

double ParabolicProblem::r_value(double t, const Vector& y) const {
  if (setup_.r_form) return setup_.r_form(t, y);
  if (!a_s_time_dependent_) return 0.0;
  Matrix d = symmetrize(a_s_dot_matrix(t));
  return y.dot(d * y);
}

Vector ParabolicProblem::load_dual(double t) const {
  Vector f = load_->value(t);
  if (setup_.load_tag == LoadTag::DualVstar) return f;
  return fam_->gram_h(t) * f;
}

ParabolicProblem ParabolicProblem::with_data(Vector u0, Trajectory f, LoadTag tag) const {
  Setup s = setup_;
  s.initial_state = std::move(u0);
  s.load = std::move(f);
  s.load_tag = tag;
  return ParabolicProblem(fam_, std::move(s));
}

bool AssumptionReport::all_pass() const {
  for (const auto& e : entries)
    if (!e.pass) return false;
  return true;
}

const AssumptionEntry& AssumptionReport::at(const std::string& id) const {
  for (const auto& e : entries)
    if (e.id == id) return e;
  throw PreconditionError("AssumptionReport: no entry " + id);
}

namespace {

struct Extremum {
  double value = 0.0;
  double at = 0.0;
};

template <typename F>
Extremum max_over(const std::vector<double>& times, F&& f) {
  Extremum out{-std::numeric_limits<double>::infinity(), 0.0};
  for (double t : times) {
    double v = f(t);
    if (v > out.value) out = {v, t};
  }
  return out;
}

template <typename F>
Extremum min_over(const std::vector<double>& times, F&& f) {
  Extremum out{std::numeric_limits<double>::infinity(), 0.0};
  for (double t : times) {
    double v = f(t);
    if (v < out.value) out = {v, t};
  }
  return out;
}

}  // namespace

AssumptionReport validate_L(const ParabolicProblem& prob, const TimeGrid& grid,
                            const ValidatorConfig& cfg) {
  const SpaceFamily& fam = prob.family();
  const std::vector<double>& times = grid.nodes();
  AssumptionReport rep;
  auto push = [&rep](std::string id, double c, double worst, bool pass, std::string detail) {
    rep.entries.push_back({std::move(id), c, worst, pass, std::move(detail)});
  };

  // Dual-space operator bounds: the operator acts on dual coordinates as
  // l_form * gram_h^{-1}.
  {
    double lower = std::numeric_limits<double>::infinity();
    double upper = 0.0;
    double worst = 0.0;
    for (double t : times) {
      Matrix b = fam.gram_h(t), k = fam.gram_v(t), l = prob.l_matrix(t);
      Matrix kinv = spd_solve(k, Matrix(Matrix::Identity(k.rows(), k.cols())));
      Matrix op = l * spd_solve(b, Matrix(Matrix::Identity(b.rows(), b.cols())));
      auto ext = pencil_extremes(op.transpose() * kinv * op, kinv);
      if (std::sqrt(std::max(0.0, ext.min)) < lower) {
        lower = std::sqrt(std::max(0.0, ext.min));
        worst = t;
      }
      upper = std::max(upper, std::sqrt(std::max(0.0, ext.max)));
    }
    push("L1", upper, worst, std::isfinite(upper) && lower > 0.0,
         "lower=" + std::to_string(lower));
  }

  {
    auto sym = max_over(times, [&](double t) {
      Matrix l = prob.l_matrix(t);
      return (l - l.transpose()).norm() / std::max(1.0, l.norm());
    });
    push("L2", sym.value, sym.at, sym.value <= cfg.symmetry_tol, "relative symmetry defect");
  }

  {
    auto c3 = max_over(times, [&](double t) {
      Matrix b = fam.gram_h(t), l = prob.l_matrix(t);
      Matrix linv_action = spd_solve(b, l);  // state-coordinate operator
      return std::sqrt(std::max(0.0, pencil_max(linv_action.transpose() * b * linv_action, b)));
    });
    push("L3", c3.value, c3.at, std::isfinite(c3.value), "H-operator norm");
  }

  {
    auto c4 = min_over(times, [&](double t) {
      return pencil_min(prob.l_matrix(t), fam.gram_h(t));
    });
    push("L4", c4.value, c4.at, std::isfinite(c4.value) && c4.value > 0.0,
         "H-coercivity constant");
  }

  {
    auto c5 = max_over(times, [&](double t) {
      Matrix k = fam.gram_v(t);
      Matrix op = spd_solve(fam.gram_h(t), prob.l_matrix(t));
      return std::sqrt(std::max(0.0, pencil_max(op.transpose() * k * op, k)));
    });
    push("L5", c5.value, c5.at, std::isfinite(c5.value), "V-operator norm");
  }

  {
    // Differentiability of the state-coordinate operator path.
    MatrixFn op = [&](double t) {
      return spd_solve(fam.gram_h(t), prob.l_matrix(t)).eval();
    };
    auto rate = max_over(times, [&](double t) {
      return fd_matrix_derivative(op, t, fam.horizon(), fam.fd_step()).norm();
    });
    push("L6", rate.value, rate.at, std::isfinite(rate.value),
         "operator path derivative magnitude (structural)");
  }

  {
    // Product rule: the derivative of (operator * path) matches the composed
    // form-level derivative on random smooth paths.
    Rng rng(cfg.seed);
    const int n = prob.dim();
    double worst = 0.0, worst_t = 0.0, scale = 1.0;
    double h = cfg.fd_check_step * std::max(1.0, fam.horizon());
    for (int p = 0; p < cfg.random_paths; ++p) {
      TrigPath path = random_trig_path(n, rng);
      auto lv = [&](double t) { return (spd_solve(fam.gram_h(t), prob.l_matrix(t)) * path.value(t)).eval(); };
      for (double t : times) {
        if (t - h < 0.0 || t + h > fam.horizon()) continue;
        Vector fd = (lv(t + h) - lv(t - h)) / (2.0 * h);
        Matrix b = fam.gram_h(t);
        Vector composed = spd_solve(b, Vector(prob.l_dot_form(t) * path.value(t))) +
                          spd_solve(b, prob.l_matrix(t)) * path.derivative(t);
        double r = (fd - composed).norm();
        scale = std::max(scale, fd.norm());
        if (r > worst) {
          worst = r;
          worst_t = t;
        }
      }
    }
    push("L7", worst / scale, worst_t, worst / scale <= cfg.product_rule_tol,
         "product-rule residual (normalized)");
  }

  {
    auto c = max_over(times, [&](double t) {
      Matrix ldot = prob.l_dot_form(t);
      Matrix kinv = spd_solve(fam.gram_v(t), Matrix(Matrix::Identity(prob.dim(), prob.dim())));
      return std::sqrt(
          std::max(0.0, pencil_max(ldot.transpose() * kinv * ldot, fam.gram_h(t))));
    });
    push("L8", c.value, c.at, std::isfinite(c.value), "derivative dual bound vs H norm");
  }

  return rep;
}

GardingConstants garding_constants(const ParabolicProblem& prob, const TimeGrid& grid) {
  const SpaceFamily& fam = prob.family();
  const std::vector<double>& times = grid.nodes();

  double min_ak = std::numeric_limits<double>::infinity();
  double max_ak = -std::numeric_limits<double>::infinity();
  for (double t : times) {
    auto ext = pencil_extremes(symmetrize(prob.a_matrix(t)), fam.gram_v(t));
    min_ak = std::min(min_ak, ext.min);
    max_ak = std::max(max_ak, ext.max);
  }
  double hi = min_ak > 0.0 ? min_ak : max_ak;
  if (!(hi > 0.0)) return {0.0, 0.0, false};

  double best_c1 = 0.0, best_c2 = std::numeric_limits<double>::infinity();
  double best_score = std::numeric_limits<double>::infinity();
  const int sweep = 50;
  for (int i = 0; i < sweep; ++i) {
    double c1 = hi * std::pow(10.0, -6.0 * (1.0 - static_cast<double>(i) / (sweep - 1)));
    double c2 = 0.0;
    for (double t : times) {
      Matrix shifted = symmetrize(prob.a_matrix(t)) - c1 * fam.gram_v(t);
      c2 = std::max(c2, std::max(0.0, -pencil_min(shifted, fam.gram_h(t))));
    }
    double score = c2 - c1;  // favour large coercivity at small shift
    if (score <= best_score) {
      best_score = score;
      best_c1 = c1;
      best_c2 = c2;
    }
  }
  return {best_c1, best_c2, best_c1 > 0.0};
}

double a7_residual(const ParabolicProblem& prob, const TimeGrid& grid, double fd_step,
                   std::uint64_t seed, bool richardson) {
  const SpaceFamily& fam = prob.family();
  Rng rng(seed);
  const int n = prob.dim();
  double worst = 0.0, scale = 1.0;
  double h = fd_step * std::max(1.0, fam.horizon());
  for (int p = 0; p < 4; ++p) {
    TrigPath path = random_trig_path(n, rng);
    auto s = [&](double t) {
      Vector y = path.value(t);
      return y.dot(prob.a_s_matrix(t) * y);
    };
    for (double t : grid.nodes()) {
      if (t - h < 0.0 || t + h > fam.horizon()) continue;
      double fd = (s(t + h) - s(t - h)) / (2.0 * h);
      if (richardson) {
        double fine = (s(t + 0.5 * h) - s(t - 0.5 * h)) / h;
        fd = (4.0 * fine - fd) / 3.0;
      }
      Vector y = path.value(t);
      Vector dy = path.derivative(t);
      double rhs = 2.0 * dy.dot(symmetrize(prob.a_s_matrix(t)) * y) + prob.r_value(t, y);
      worst = std::max(worst, std::abs(fd - rhs));
      scale = std::max(scale, std::abs(fd));
    }
  }
  return worst / scale;
}

AssumptionReport validate_A(const ParabolicProblem& prob, const TimeGrid& grid,
                            const ValidatorConfig& cfg) {
  const SpaceFamily& fam = prob.family();
  const std::vector<double>& times = grid.nodes();
  const int n = prob.dim();
  AssumptionReport rep;
  auto push = [&rep](std::string id, double c, double worst, bool pass, std::string detail) {
    rep.entries.push_back({std::move(id), c, worst, pass, std::move(detail)});
  };

  {
    GardingConstants g = garding_constants(prob, grid);
    bool verified = g.valid;
    if (verified) {
      Rng rng(cfg.seed);
      for (int d = 0; d < 32 && verified; ++d) {
        Vector v = rng.normal_vector(n);
        double t = times[d % times.size()];
        double lhs = v.dot(symmetrize(prob.a_matrix(t)) * v);
        double rhs = g.coercivity * fam.inner_v(t, v, v) - g.shift * fam.inner_h(t, v, v);
        verified = lhs >= rhs - 1e-9 * (std::abs(lhs) + std::abs(rhs) + 1.0);
      }
    }
    push("A1", g.coercivity, 0.0, verified, "shift=" + std::to_string(g.shift));
  }

  {
    auto c = max_over(times, [&](double t) {
      Matrix a = prob.a_matrix(t);
      Matrix kinv = spd_solve(fam.gram_v(t), Matrix(Matrix::Identity(n, n)));
      return std::sqrt(std::max(0.0, pencil_max(a.transpose() * kinv * a, fam.gram_v(t))));
    });
    push("A2", c.value, c.at, std::isfinite(c.value), "full-form bound");
  }

  {
    // Sampled absolute continuity of the quadratic path of a_s.
    Rng rng(cfg.seed + 1);
    TrigPath path = random_trig_path(n, rng);
    double rate = 0.0, at = 0.0;
    for (std::size_t i = 1; i < times.size(); ++i) {
      Vector y0 = path.value(times[i - 1]);
      Vector y1 = path.value(times[i]);
      double s0 = y0.dot(prob.a_s_matrix(times[i - 1]) * y0);
      double s1 = y1.dot(prob.a_s_matrix(times[i]) * y1);
      double q = std::abs(s1 - s0) / (times[i] - times[i - 1]);
      if (q > rate) {
        rate = q;
        at = times[i];
      }
    }
    push("A3", rate, at, std::isfinite(rate), "sampled difference-quotient bound");
  }

  {
    // V x H bound for a_n. A fixed-dimension constant is always finite, so the
    // check contrasts truncation levels: a genuinely V x V-strength term grows
    // under refinement of the mode hierarchy.
    if (!prob.has_a_n()) {
      push("A4", 0.0, 0.0, true, "a_n absent");
    } else {
      auto bound_at = [&](int m) {
        double worst = 0.0;
        for (double t : times) {
          Matrix an = prob.a_n_matrix(t).topLeftCorner(m, m);
          Matrix binv =
              spd_solve(Matrix(fam.gram_h(t).topLeftCorner(m, m)), Matrix(Matrix::Identity(m, m)));
          double v = pencil_max(an.transpose() * binv * an,
                                Matrix(fam.gram_v(t).topLeftCorner(m, m)));
          worst = std::max(worst, std::sqrt(std::max(0.0, v)));
        }
        return worst;
      };
      double full = bound_at(n);
      double half = bound_at(std::max(2, n / 2));
      double growth = full / std::max(half, 1e-30);
      bool pass = std::isfinite(full) && growth <= cfg.growth_ratio_cap;
      push("A4", full, 0.0, pass, "half-hierarchy growth=" + std::to_string(growth));
    }
  }

  {
    auto c = max_over(times, [&](double t) {
      Matrix as = prob.a_s_matrix(t);
      Matrix kinv = spd_solve(fam.gram_v(t), Matrix(Matrix::Identity(n, n)));
      return std::sqrt(std::max(0.0, pencil_max(as.transpose() * kinv * as, fam.gram_v(t))));
    });
    push("A5", c.value, c.at, std::isfinite(c.value), "a_s bound");
  }

  {
    auto mn = min_over(times, [&](double t) {
      return pencil_min(symmetrize(prob.a_s_matrix(t)), fam.gram_h(t));
    });
    push("A6", mn.value, mn.at, mn.value >= -1e-10, "a_s positivity margin");
  }

  {
    double r = a7_residual(prob, grid, cfg.fd_check_step, cfg.seed + 2, true);
    push("A7", r, 0.0, r <= cfg.product_rule_tol, "differentiation identity residual");
  }

  {
    double c = 0.0, at = 0.0;
    if (!prob.a_s_time_dependent()) {
      c = 0.0;
    } else if (prob.has_analytic_a_s_dot() || !prob.a_s_time_dependent()) {
      auto m = max_over(times, [&](double t) {
        auto ext = pencil_extremes(symmetrize(prob.a_s_dot_matrix(t)), fam.gram_v(t));
        return std::max(std::abs(ext.min), std::abs(ext.max));
      });
      c = m.value;
      at = m.at;
    } else {
      Rng rng(cfg.seed + 3);
      for (int d = 0; d < 32; ++d) {
        Vector v = rng.normal_vector(n);
        double t = times[d % times.size()];
        double denom = fam.inner_v(t, v, v);
        c = std::max(c, std::abs(prob.r_value(t, v)) / std::max(denom, 1e-30));
      }
    }
    push("A8", c, at, std::isfinite(c), "bound on the correction term r");
  }

  return rep;
}

WeakFormResidual weak_form_residual(const ParabolicProblem& prob, const Trajectory& u,
                                    const TimeGrid& grid) {
  const SpaceFamily& fam = prob.family();
  Trajectory du = u.material_derivative();
  const std::vector<double>& times = grid.nodes();

  double worst = 0.0, scale = 1.0;
  for (double t : times) {
    Vector uv = u.value(t);
    Vector duv = du.value(t);
    Vector lhs = prob.l_matrix(t) * duv + prob.a_matrix(t) * uv + prob.lambda_matrix(t) * uv;
    Vector defect = lhs - prob.load_dual(t);
    worst = std::max(worst, fam.dual_norm_vstar(t, defect));
    scale = std::max(scale,
                     fam.dual_norm_vstar(t, Vector(prob.load_dual(t))) +
                         fam.dual_norm_vstar(t, lhs));
  }
  double pointwise = worst / scale;

  // Accumulated characterization: d/dt of the time form against transported
  // directions matches the load minus the spatial terms plus the product-rule
  // correction; differences are taken on the grid.
  double acc_worst = 0.0, acc_scale = 1.0;
  for (std::size_t i = 1; i + 1 < times.size(); ++i) {
    double t = times[i];
    auto p = [&](double s) { return (prob.l_matrix(s) * u.value(s)).eval(); };
    Vector fd = (p(times[i + 1]) - p(times[i - 1])) / (times[i + 1] - times[i - 1]);
    Vector uv = u.value(t);
    Vector rhs = prob.load_dual(t) - prob.a_matrix(t) * uv - prob.lambda_matrix(t) * uv +
                 prob.m_matrix(t) * uv;
    acc_worst = std::max(acc_worst, fam.dual_norm_vstar(t, Vector(fd - rhs)));
    acc_scale = std::max(acc_scale, fam.dual_norm_vstar(t, fd) + fam.dual_norm_vstar(t, rhs));
  }
  return {pointwise, acc_worst / acc_scale};
}

}  // namespace evolve
