#include "evolve/instances.hpp"

#include <cmath>

namespace evolve {

namespace {
constexpr double kPi = 3.14159265358979323846;
}

double Profile::value(double t) const {
  if (kind == Kind::Affine) return c0 + c1 * t;
  return c0 + c1 * std::sin(omega * t);
}

double Profile::derivative(double t) const {
  if (kind == Kind::Affine) return c1;
  return c1 * omega * std::cos(omega * t);
}

double Profile::min_on(double horizon) const {
  if (kind == Kind::Affine) return std::min(c0, c0 + c1 * horizon);
  return c0 - std::abs(c1);
}

InstanceSpec InstanceSpec::parse_name(const std::string& name, int n, double horizon,
                                      Profile profile) {
  InstanceSpec spec;
  if (name == "static-circle")
    spec.name = Name::StaticCircle;
  else if (name == "weighted-Rn")
    spec.name = Name::WeightedRn;
  else if (name == "evolving-circle")
    spec.name = Name::EvolvingCircle;
  else if (name == "moving-interval-fem")
    spec.name = Name::MovingIntervalFem;
  else
    throw PreconditionError("unknown instance name: " + name);
  spec.n = n;
  spec.horizon = horizon;
  spec.profile = profile;
  return spec;
}

int circle_wavenumber(int index) { return index == 0 ? 0 : (index + 1) / 2; }

namespace {

// Gram matrix of {1, cos k., sin k.} on the unit circle: diag(2pi, pi, ...).
Matrix circle_measure(int n) {
  Vector d(n);
  d[0] = 2.0 * kPi;
  for (int i = 1; i < n; ++i) d[i] = kPi;
  return d.asDiagonal();
}

Matrix circle_stiffness_unit(int n) {
  Vector d(n);
  for (int i = 0; i < n; ++i) {
    double k = circle_wavenumber(i);
    d[i] = k * k * (i == 0 ? 2.0 * kPi : kPi);
  }
  return d.asDiagonal();
}

// Reference P1 assembly on [0, 1] with two Gauss points per element; the
// caller supplies the density picked up by the change of variables.
Matrix assemble_p1(int nodes, const std::function<double(double)>& density, bool gradients) {
  const int elems = nodes - 1;
  const double h = 1.0 / elems;
  Matrix out = Matrix::Zero(nodes, nodes);
  const double q[2] = {0.5 - 0.5 / std::sqrt(3.0), 0.5 + 0.5 / std::sqrt(3.0)};
  for (int e = 0; e < elems; ++e) {
    for (double qp : q) {
      double xi = (e + qp) * h;
      double w = 0.5 * h * density(xi);
      double phi_left, phi_right;
      if (gradients) {
        phi_left = -1.0 / h;
        phi_right = 1.0 / h;
      } else {
        phi_left = 1.0 - qp;
        phi_right = qp;
      }
      out(e, e) += w * phi_left * phi_left;
      out(e, e + 1) += w * phi_left * phi_right;
      out(e + 1, e) += w * phi_right * phi_left;
      out(e + 1, e + 1) += w * phi_right * phi_right;
    }
  }
  return out;
}

void check_profile(const InstanceSpec& spec, const char* role) {
  if (spec.profile.min_on(spec.horizon) <= 0.0)
    throw PreconditionError(std::string("instance profile (") + role +
                            ") must stay positive on [0, T]");
}

}  // namespace

Instance make_instance(const InstanceSpec& spec) {
  if (spec.n < 2) throw PreconditionError("instance needs dimension >= 2");
  if (spec.horizon <= 0.0) throw PreconditionError("instance horizon must be positive");
  const int n = spec.n;
  const double horizon = spec.horizon;

  switch (spec.name) {
    case InstanceSpec::Name::StaticCircle: {
      Matrix measure = circle_measure(n);
      Matrix stiff = circle_stiffness_unit(n);
      auto fam = std::make_shared<SpaceFamily>(
          n, horizon, [measure](double) { return measure; },
          [measure, stiff](double) { return (measure + stiff).eval(); },
          [n](double) { return Matrix::Zero(n, n).eval(); });
      ParabolicProblem::Setup setup;
      setup.a_s = [stiff](double) { return stiff; };
      return {fam, ParabolicProblem(fam, std::move(setup))};
    }

    case InstanceSpec::Name::WeightedRn: {
      check_profile(spec, "weight");
      Profile w = spec.profile;
      Matrix g0 = Matrix::Identity(n, n);
      Vector kdiag(n);
      for (int i = 0; i < n; ++i) kdiag[i] = 1.0 + static_cast<double>(i) * i;
      Matrix k0 = kdiag.asDiagonal();
      SpaceFamily::Options opt;
      auto fam = std::make_shared<SpaceFamily>(
          n, horizon, [w, g0](double t) { return (w.value(t) * g0).eval(); },
          [w, k0](double t) { return (w.value(t) * k0).eval(); },
          [w, g0](double t) { return (w.derivative(t) * g0).eval(); }, opt);
      ParabolicProblem::Setup setup;
      setup.a_s = [w, k0](double t) { return (w.value(t) * k0).eval(); };
      setup.a_s_dot = [w, k0](double t) { return (w.derivative(t) * k0).eval(); };
      return {fam, ParabolicProblem(fam, std::move(setup))};
    }

    case InstanceSpec::Name::EvolvingCircle: {
      check_profile(spec, "radius");
      Profile radius = spec.profile;
      Matrix measure = circle_measure(n);
      Matrix stiff = circle_stiffness_unit(n);
      auto gram_h = [radius, measure](double t) { return (radius.value(t) * measure).eval(); };
      auto a_s = [radius, stiff](double t) { return (stiff / radius.value(t)).eval(); };
      auto fam = std::make_shared<SpaceFamily>(
          n, horizon, gram_h,
          [gram_h, a_s](double t) { return (gram_h(t) + a_s(t)).eval(); },
          [radius, measure](double t) { return (radius.derivative(t) * measure).eval(); });
      ParabolicProblem::Setup setup;
      setup.a_s = a_s;
      setup.a_s_dot = [radius, stiff](double t) {
        double r = radius.value(t);
        return (-radius.derivative(t) / (r * r) * stiff).eval();
      };
      return {fam, ParabolicProblem(fam, std::move(setup))};
    }

    case InstanceSpec::Name::MovingIntervalFem: {
      check_profile(spec, "endpoint");
      Profile g = spec.profile;
      // Hat functions on the reference interval transported by x = g(t) xi;
      // the change of variables contributes g for values and 1/g for gradients.
      auto gram_h = [g, n](double t) {
        return assemble_p1(n, [&](double) { return g.value(t); }, false);
      };
      auto a_s = [g, n](double t) {
        return assemble_p1(n, [&](double) { return 1.0 / g.value(t); }, true);
      };
      // No analytic derivative of the H Gram: the drift matrix is exercised
      // through the finite-difference path here.
      auto fam = std::make_shared<SpaceFamily>(
          n, horizon, gram_h,
          [gram_h, a_s](double t) { return (gram_h(t) + a_s(t)).eval(); });
      ParabolicProblem::Setup setup;
      setup.a_s = a_s;
      setup.a_s_dot = [g, a_s](double t) {
        double v = g.value(t);
        return (-g.derivative(t) * v * a_s(t) / (v * v)).eval();
      };
      return {fam, ParabolicProblem(fam, std::move(setup))};
    }
  }
  throw PreconditionError("unreachable instance name");
}

ParabolicProblem manufacture(const Instance& inst, const Trajectory& u_exact) {
  const auto& fam = inst.fam;
  if (u_exact.value(0.0).size() != fam->dim())
    throw PreconditionError("manufacture: exact solution not supported on this hierarchy");
  Trajectory du = u_exact.material_derivative();
  const ParabolicProblem& base = inst.prob;
  Trajectory u_copy = u_exact;
  auto load_state = [fam, base, u_copy, du](double t) -> Vector {
    Vector u = u_copy.value(t);
    Vector rhs = base.l_matrix(t) * du.value(t) + base.a_matrix(t) * u +
                 base.lambda_matrix(t) * u;
    return spd_solve(fam->gram_h(t), rhs);
  };
  Trajectory f = Trajectory::closed_form(fam, load_state);
  return base.with_data(u_exact.value(0.0), std::move(f), LoadTag::StateH);
}

}  // namespace evolve
