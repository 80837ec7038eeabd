#include "evolve/trajectory.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace evolve {

CubicSpline::CubicSpline(std::vector<double> nodes, Matrix values)
    : nodes_(std::move(nodes)), values_(std::move(values)) {
  const int m = static_cast<int>(nodes_.size()) - 1;
  if (m < 1) throw PreconditionError("CubicSpline: need at least two nodes");
  if (values_.cols() != m + 1) throw DimensionError("CubicSpline: values/nodes mismatch");
  for (int i = 0; i < m; ++i)
    if (!(nodes_[i + 1] > nodes_[i]))
      throw PreconditionError("CubicSpline: nodes must be strictly increasing");

  const int n = static_cast<int>(values_.rows());
  moments_ = Matrix::Zero(n, m + 1);
  if (m == 1) return;  // linear interpolation, zero moments

  std::vector<double> h(m);
  for (int i = 0; i < m; ++i) h[i] = nodes_[i + 1] - nodes_[i];

  if (m == 2) {
    // Three points: single quadratic, constant second derivative.
    for (int c = 0; c < n; ++c) {
      double d01 = (values_(c, 1) - values_(c, 0)) / h[0];
      double d12 = (values_(c, 2) - values_(c, 1)) / h[1];
      double dd = 2.0 * (d12 - d01) / (h[0] + h[1]);
      moments_.row(c).setConstant(dd);
    }
    return;
  }

  // Interior continuity equations with the end moments eliminated through the
  // not-a-knot conditions; Thomas solve per coordinate.
  const int k = m - 1;  // unknowns: moments at nodes 1..m-1
  std::vector<double> sub(k, 0.0), diag(k, 0.0), sup(k, 0.0);
  for (int i = 1; i <= m - 1; ++i) {
    int r = i - 1;
    if (i > 1) sub[r] = h[i - 1];
    diag[r] = 2.0 * (h[i - 1] + h[i]);
    if (i < m - 1) sup[r] = h[i];
  }
  diag[0] = h[0] * (1.0 + h[0] / h[1]) + 2.0 * (h[0] + h[1]);
  sup[0] = h[1] - h[0] * h[0] / h[1];
  diag[k - 1] = 2.0 * (h[m - 2] + h[m - 1]) + h[m - 1] * (1.0 + h[m - 1] / h[m - 2]);
  sub[k - 1] = h[m - 2] - h[m - 1] * h[m - 1] / h[m - 2];

  std::vector<double> cp(k), rhs(k);
  for (int c = 0; c < n; ++c) {
    for (int i = 1; i <= m - 1; ++i) {
      double dr = (values_(c, i + 1) - values_(c, i)) / h[i];
      double dl = (values_(c, i) - values_(c, i - 1)) / h[i - 1];
      rhs[i - 1] = 6.0 * (dr - dl);
    }
    // forward sweep
    cp[0] = sup[0] / diag[0];
    rhs[0] = rhs[0] / diag[0];
    for (int i = 1; i < k; ++i) {
      double denom = diag[i] - sub[i] * cp[i - 1];
      cp[i] = sup[i] / denom;
      rhs[i] = (rhs[i] - sub[i] * rhs[i - 1]) / denom;
    }
    for (int i = k - 2; i >= 0; --i) rhs[i] -= cp[i] * rhs[i + 1];
    for (int i = 1; i <= m - 1; ++i) moments_(c, i) = rhs[i - 1];
    moments_(c, 0) =
        moments_(c, 1) * (1.0 + h[0] / h[1]) - moments_(c, 2) * (h[0] / h[1]);
    moments_(c, m) = moments_(c, m - 1) * (1.0 + h[m - 1] / h[m - 2]) -
                     moments_(c, m - 2) * (h[m - 1] / h[m - 2]);
  }
}

int CubicSpline::cell(double t) const {
  const double lo = nodes_.front();
  const double hi = nodes_.back();
  if (t < lo - 1e-12 * std::max(1.0, std::abs(hi)) ||
      t > hi + 1e-12 * std::max(1.0, std::abs(hi)))
    throw TimeDomainError("spline evaluation outside the nodal range");
  auto it = std::upper_bound(nodes_.begin(), nodes_.end(), t);
  int c = static_cast<int>(it - nodes_.begin()) - 1;
  return std::clamp(c, 0, static_cast<int>(nodes_.size()) - 2);
}

Vector CubicSpline::value(double t) const {
  int i = cell(t);
  double h = nodes_[i + 1] - nodes_[i];
  double a = nodes_[i + 1] - t;
  double b = t - nodes_[i];
  Vector mi = moments_.col(i);
  Vector mj = moments_.col(i + 1);
  Vector yi = values_.col(i);
  Vector yj = values_.col(i + 1);
  return (mi * (a * a * a) + mj * (b * b * b)) / (6.0 * h) +
         (yi / h - mi * (h / 6.0)) * a + (yj / h - mj * (h / 6.0)) * b;
}

Vector CubicSpline::derivative(double t) const {
  int i = cell(t);
  double h = nodes_[i + 1] - nodes_[i];
  double a = nodes_[i + 1] - t;
  double b = t - nodes_[i];
  Vector mi = moments_.col(i);
  Vector mj = moments_.col(i + 1);
  return (-mi * (a * a) + mj * (b * b)) / (2.0 * h) +
         (values_.col(i + 1) - values_.col(i)) / h - (mj - mi) * (h / 6.0);
}

Trajectory Trajectory::closed_form(std::shared_ptr<const SpaceFamily> fam, VectorFn value,
                                   VectorFn derivative) {
  if (!fam || !value) throw PreconditionError("Trajectory: family and evaluator required");
  Trajectory tr;
  tr.fam_ = std::move(fam);
  tr.tag_ = Smoothness::ClosedForm;
  tr.value_fn_ = std::move(value);
  tr.deriv_fn_ = std::move(derivative);
  Vector probe = tr.value_fn_(0.0);
  if (probe.size() != tr.fam_->dim())
    throw DimensionError("Trajectory: evaluator length does not match the family");
  return tr;
}

Trajectory Trajectory::nodal(std::shared_ptr<const SpaceFamily> fam, std::vector<double> nodes,
                             Matrix values, Smoothness tag) {
  if (!fam) throw PreconditionError("Trajectory: family required");
  if (values.rows() != fam->dim())
    throw DimensionError("Trajectory: nodal values do not match the family dimension");
  if (nodes.empty() || std::abs(nodes.front()) > 1e-14 * std::max(1.0, fam->horizon()) ||
      std::abs(nodes.back() - fam->horizon()) > 1e-12 * std::max(1.0, fam->horizon()))
    throw PreconditionError("Trajectory: nodal representation must cover [0, T]");
  Trajectory tr;
  tr.fam_ = std::move(fam);
  tr.tag_ = tag == Smoothness::ClosedForm ? Smoothness::C1 : tag;
  tr.spline_ = std::make_shared<CubicSpline>(std::move(nodes), std::move(values));
  return tr;
}

Trajectory Trajectory::zero(std::shared_ptr<const SpaceFamily> fam) {
  int n = fam->dim();
  return closed_form(
      std::move(fam), [n](double) { return Vector::Zero(n).eval(); },
      [n](double) { return Vector::Zero(n).eval(); });
}

Trajectory Trajectory::constant(std::shared_ptr<const SpaceFamily> fam, const Vector& w) {
  if (w.size() != fam->dim()) throw DimensionError("Trajectory::constant: wrong length");
  int n = fam->dim();
  return closed_form(
      std::move(fam), [w](double) { return w; },
      [n](double) { return Vector::Zero(n).eval(); });
}

Vector Trajectory::value(double t) const {
  if (spline_) return spline_->value(t);
  if (!value_fn_) throw PreconditionError("Trajectory: evaluation of an empty trajectory");
  return value_fn_(t);
}

Trajectory Trajectory::material_derivative() const {
  if (tag_ == Smoothness::C0)
    throw PreconditionError("material_derivative: trajectory is only C0");
  Trajectory tr;
  tr.fam_ = fam_;
  tr.tag_ = Smoothness::C0;
  if (spline_) {
    auto sp = spline_;
    tr.value_fn_ = [sp](double t) { return sp->derivative(t); };
    return tr;
  }
  if (deriv_fn_) {
    tr.value_fn_ = deriv_fn_;
    tr.tag_ = Smoothness::ClosedForm;
    return tr;
  }
  // Closed form without a supplied derivative: second-order differences.
  auto f = value_fn_;
  double horizon = fam_->horizon();
  double h = 1e-6 * std::max(1.0, horizon);
  tr.value_fn_ = [f, horizon, h](double t) -> Vector {
    if (t - h >= 0.0 && t + h <= horizon) return (f(t + h) - f(t - h)) / (2.0 * h);
    if (t + 2.0 * h <= horizon)
      return (-3.0 * f(t) + 4.0 * f(t + h) - f(t + 2.0 * h)) / (2.0 * h);
    return (3.0 * f(t) - 4.0 * f(t - h) + f(t - 2.0 * h)) / (2.0 * h);
  };
  return tr;
}

Trajectory Trajectory::linear_combination(double a, const Trajectory& u, double b,
                                          const Trajectory& v) {
  if (u.fam_ != v.fam_ && u.fam_->dim() != v.fam_->dim())
    throw DimensionError("linear_combination: incompatible trajectories");
  if (u.spline_ && v.spline_ && u.spline_->nodes() == v.spline_->nodes()) {
    Matrix vals = a * u.spline_->node_values() + b * v.spline_->node_values();
    auto tag = (u.tag_ == Smoothness::C0 || v.tag_ == Smoothness::C0) ? Smoothness::C0
                                                                      : Smoothness::C1;
    return nodal(u.fam_, u.spline_->nodes(), std::move(vals), tag);
  }
  Trajectory tr;
  tr.fam_ = u.fam_;
  tr.tag_ = (u.tag_ == Smoothness::C0 || v.tag_ == Smoothness::C0) ? Smoothness::C0
                                                                   : Smoothness::ClosedForm;
  Trajectory uc = u, vc = v;
  tr.value_fn_ = [a, uc, b, vc](double t) { return (a * uc.value(t) + b * vc.value(t)).eval(); };
  return tr;
}

Trajectory Trajectory::from_csv(std::shared_ptr<const SpaceFamily> fam,
                                const std::filesystem::path& path, Smoothness tag) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open trajectory file " + path.string(), 0, 0);
  std::string header;
  std::getline(in, header);
  std::vector<double> nodes;
  std::vector<Vector> cols;
  std::string line;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string field;
    std::vector<double> row;
    while (std::getline(ss, field, ',')) {
      try {
        row.push_back(std::stod(field));
      } catch (const std::exception&) {
        throw ParseError("trajectory csv: bad number", lineno, 1);
      }
    }
    if (static_cast<int>(row.size()) != fam->dim() + 1)
      throw ParseError("trajectory csv: wrong column count", lineno, 1);
    nodes.push_back(row[0]);
    Vector v(fam->dim());
    for (int i = 0; i < fam->dim(); ++i) v[i] = row[i + 1];
    cols.push_back(std::move(v));
  }
  Matrix values(fam->dim(), cols.size());
  for (std::size_t j = 0; j < cols.size(); ++j) values.col(j) = cols[j];
  return nodal(std::move(fam), std::move(nodes), std::move(values), tag);
}

void Trajectory::to_csv(const std::filesystem::path& path) const {
  if (!spline_) throw PreconditionError("to_csv: only nodal trajectories are exportable");
  std::ofstream out(path);
  out.precision(17);
  out << "t";
  for (int i = 1; i <= fam_->dim(); ++i) out << ",c" << i;
  out << "\n";
  const auto& nodes = spline_->nodes();
  const Matrix& vals = spline_->node_values();
  for (std::size_t j = 0; j < nodes.size(); ++j) {
    out << nodes[j];
    for (int i = 0; i < fam_->dim(); ++i) out << "," << vals(i, j);
    out << "\n";
  }
}

double l2_norm(const Trajectory& traj, NormKind which, const TimeGrid& grid) {
  const SpaceFamily& fam = traj.family();
  double acc = 0.0;
  for (const auto& [t, w] : grid.quad_points()) {
    Vector u = traj.value(t);
    double q = 0.0;
    switch (which) {
      case NormKind::H:
        q = fam.inner_h(t, u, u);
        break;
      case NormKind::V:
        q = fam.inner_v(t, u, u);
        break;
      case NormKind::Vstar: {
        double d = fam.dual_norm_vstar(t, u);
        q = d * d;
        break;
      }
    }
    acc += w * q;
  }
  return std::sqrt(std::max(0.0, acc));
}

Trajectory as_dual(const Trajectory& state_traj) {
  auto fam = state_traj.family_ptr();
  Trajectory copy = state_traj;
  return Trajectory::closed_form(
      fam, [fam, copy](double t) { return (fam->gram_h(t) * copy.value(t)).eval(); });
}

TestFunctionFamily TestFunctionFamily::standard(const SpaceFamily& fam, int count) {
  TestFunctionFamily out;
  const double horizon = fam.horizon();
  const double pi = 3.14159265358979323846;
  for (int j = 1; j <= count; ++j) {
    double freq = j * pi / horizon;
    TestFunction tf;
    tf.zeta = [freq](double t) { return std::sin(freq * t); };
    tf.zeta_dot = [freq](double t) { return freq * std::cos(freq * t); };
    tf.w = Vector::Unit(fam.dim(), (j - 1) % fam.dim());
    out.fns.push_back(std::move(tf));
  }
  return out;
}

double weak_matder_residual(const Trajectory& u, const Trajectory& cand,
                            const TestFunctionFamily& tests, const TimeGrid& grid) {
  if (tests.fns.empty()) throw PreconditionError("weak_matder_residual: empty test family");
  const SpaceFamily& fam = u.family();
  const double horizon = grid.horizon();
  for (const auto& tf : tests.fns) {
    double scale = 1.0 + std::abs(tf.zeta(0.5 * horizon));
    if (std::abs(tf.zeta(0.0)) > 1e-12 * scale || std::abs(tf.zeta(horizon)) > 1e-12 * scale)
      throw PreconditionError(
          "weak_matder_residual: test profiles must vanish at both endpoints");
  }
  double worst = 0.0;
  for (const auto& tf : tests.fns) {
    double defect = grid.integrate([&](double t) {
      Vector eta = tf.zeta(t) * tf.w;
      Vector eta_dot = tf.zeta_dot(t) * tf.w;
      Vector uv = u.value(t);
      double pairing = cand.value(t).dot(eta);
      double h_term = fam.inner_h(t, uv, eta_dot);
      double lam = fam.lambda_form(t, uv, eta);
      return pairing + h_term + lam;
    });
    double eta_norm = std::sqrt(std::max(
        grid.integrate([&](double t) {
          double z = tf.zeta(t);
          return z * z * fam.inner_v(t, tf.w, tf.w);
        }),
        1e-300));
    worst = std::max(worst, std::abs(defect) / eta_norm);
  }
  return worst;
}

double transport_residual(const Trajectory& u, const Trajectory& v, const TimeGrid& grid) {
  const SpaceFamily& fam = u.family();
  Trajectory du = u.material_derivative();
  Trajectory dv = v.material_derivative();
  const auto& nodes = grid.nodes();
  auto pairing = [&](double t) { return fam.inner_h(t, u.value(t), v.value(t)); };
  double worst = 0.0;
  double scale = 1.0;
  for (std::size_t i = 1; i + 1 < nodes.size(); ++i) {
    double t = nodes[i];
    double fd = (pairing(nodes[i + 1]) - pairing(nodes[i - 1])) / (nodes[i + 1] - nodes[i - 1]);
    Vector ut = u.value(t), vt = v.value(t);
    double rhs = fam.inner_h(t, du.value(t), vt) + fam.inner_h(t, dv.value(t), ut) +
                 fam.lambda_form(t, ut, vt);
    worst = std::max(worst, std::abs(fd - rhs));
    scale = std::max(scale, std::abs(fd));
  }
  return worst / scale;
}

double ibp_check(const Trajectory& u, const Trajectory& v, const TimeGrid& grid) {
  const SpaceFamily& fam = u.family();
  Trajectory du = u.material_derivative();
  Trajectory dv = v.material_derivative();
  double horizon = grid.horizon();
  double end_term = fam.inner_h(horizon, u.value(horizon), v.value(horizon));
  double start_term = fam.inner_h(0.0, u.value(0.0), v.value(0.0));
  double integral = 0.0, integral_abs = 0.0;
  for (const auto& [t, w] : grid.quad_points()) {
    Vector ut = u.value(t), vt = v.value(t);
    double a = fam.inner_h(t, du.value(t), vt);
    double b = fam.inner_h(t, dv.value(t), ut);
    double c = fam.lambda_form(t, ut, vt);
    integral += w * (a + b + c);
    integral_abs += w * (std::abs(a) + std::abs(b) + std::abs(c));
  }
  double raw = std::abs(end_term - start_term - integral);
  double scale = 1.0 + std::abs(end_term) + std::abs(start_term) + integral_abs;
  return raw / scale;
}

double embedding_constant(const Trajectory& u, const TimeGrid& grid) {
  const SpaceFamily& fam = u.family();
  Trajectory du = u.material_derivative();
  double sup_h = 0.0;
  for (double t : grid.nodes()) sup_h = std::max(sup_h, fam.norm_h(t, u.value(t)));
  double lv = l2_norm(u, NormKind::V, grid);
  // The derivative acts on the smooth space through the H pairing, so its dual
  // coordinates are gram_h * value.
  double lvstar = std::sqrt(std::max(0.0, grid.integrate([&](double t) {
    Vector g = fam.gram_h(t) * du.value(t);
    double d = fam.dual_norm_vstar(t, g);
    return d * d;
  })));
  double denom = lv + lvstar;
  if (denom <= 0.0) return 0.0;
  return sup_h / denom;
}

}  // namespace evolve
