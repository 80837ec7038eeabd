#include <doctest.h>

#include <cmath>

#include "evolve/instances.hpp"
#include "evolve/problem.hpp"
#include "evolve/rng.hpp"

using namespace evolve;

namespace {

std::shared_ptr<SpaceFamily> curved_family(int n, double horizon = 1.0) {
  return std::make_shared<SpaceFamily>(
      n, horizon,
      [n](double t) {
        Matrix b = Matrix::Identity(n, n);
        for (int i = 0; i < n; ++i) b(i, i) += 0.3 * std::sin((i + 1.0) * t);
        return b;
      },
      [n](double t) {
        Matrix k = 2.0 * Matrix::Identity(n, n);
        for (int i = 0; i < n; ++i) k(i, i) += 0.2 * std::cos((i + 1.0) * t);
        return k;
      });
}

ParabolicProblem identity_time_problem(std::shared_ptr<const SpaceFamily> fam) {
  ParabolicProblem::Setup setup;
  auto f = fam;
  setup.a_s = [f](double t) { return f->gram_v(t); };
  setup.a_s_dot = [f](double t) {
    return fd_matrix_derivative([f](double s) { return f->gram_v(s); }, t, f->horizon(),
                                f->fd_step());
  };
  return ParabolicProblem(fam, std::move(setup));
}

}  // namespace

TEST_CASE("product-rule matrix of the time form") {
  auto fam = curved_family(2);

  ParabolicProblem::Setup constant;
  constant.l_form = [](double) { return Matrix::Identity(2, 2).eval(); };
  constant.a_s = [](double) { return Matrix::Identity(2, 2).eval(); };
  ParabolicProblem pc(fam, std::move(constant));
  CHECK(pc.m_matrix(0.5).norm() <= 1e-9);

  ParabolicProblem::Setup affine;
  affine.l_form = [](double t) { return ((1.0 + t) * Matrix::Identity(2, 2)).eval(); };
  affine.a_s = [](double) { return Matrix::Identity(2, 2).eval(); };
  ParabolicProblem pa(fam, std::move(affine));
  // oracle: finite difference of the form path
  Matrix fd = fd_matrix_derivative(
      [](double t) { return ((1.0 + t) * Matrix::Identity(2, 2)).eval(); }, 0.3, 1.0, 1e-5);
  CHECK((pa.m_matrix(0.3) - fd).norm() <= 1e-9);
  CHECK((pa.m_matrix(0.3) - Matrix::Identity(2, 2)).norm() <= 1e-9);

  // identity time operator: the product-rule matrix equals the drift matrix
  ParabolicProblem pid = identity_time_problem(fam);
  CHECK((pid.m_matrix(0.4) - fam->gram_h_dot(0.4)).norm() <= 1e-9);
  CHECK((pid.m_matrix(0.4) - pid.m_matrix(0.4).transpose()).norm() == 0.0);
}

TEST_CASE("time-operator validator accepts the identity and scaled operators") {
  TimeGrid grid = TimeGrid::uniform(1.0, 48);
  for (auto fam : {curved_family(3), curved_family(2, 0.7)}) {
    ParabolicProblem p = identity_time_problem(fam);
    auto rep = validate_L(p, TimeGrid::uniform(fam->horizon(), 48));
    CHECK(rep.all_pass());
    CHECK(rep.at("L3").constant == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(rep.at("L4").constant == doctest::Approx(1.0).epsilon(1e-10));
  }

  auto fam = curved_family(3);
  ParabolicProblem::Setup doubled;
  auto f = fam;
  doubled.l_form = [f](double t) { return (2.0 * f->gram_h(t)).eval(); };
  doubled.a_s = [f](double t) { return f->gram_v(t); };
  doubled.a_s_dot = [f](double t) {
    return fd_matrix_derivative([f](double s) { return f->gram_v(s); }, t, 1.0, f->fd_step());
  };
  ParabolicProblem p2(fam, std::move(doubled));
  auto rep = validate_L(p2, grid);
  // oracle: generalized eigenvalues of 2B against B are exactly 2
  CHECK(rep.at("L3").constant == doctest::Approx(2.0).epsilon(1e-10));
  CHECK(rep.at("L4").constant == doctest::Approx(2.0).epsilon(1e-10));
  CHECK(rep.all_pass());
}

TEST_CASE("an indefinite time form fails the coercivity entry with its worst time") {
  auto fam = curved_family(2);
  ParabolicProblem::Setup bad;
  auto f = fam;
  bad.l_form = [f](double t) { return ((1.0 - 2.0 * t) * f->gram_h(t)).eval(); };
  bad.a_s = [f](double t) { return f->gram_v(t); };
  bad.a_s_dot = [f](double t) {
    return fd_matrix_derivative([f](double s) { return f->gram_v(s); }, t, 1.0, f->fd_step());
  };
  ParabolicProblem p(fam, std::move(bad));
  auto rep = validate_L(p, TimeGrid::uniform(1.0, 48));
  CHECK(!rep.at("L4").pass);
  CHECK(rep.at("L4").worst_t > 0.5);
  CHECK(!rep.all_pass());
}

TEST_CASE("elliptic validator on the V-inner-product form") {
  auto fam = curved_family(3);
  ParabolicProblem p = identity_time_problem(fam);  // a_s equals the V Gram
  TimeGrid grid = TimeGrid::uniform(1.0, 48);
  auto rep = validate_A(p, grid);
  CHECK(rep.all_pass());
  CHECK(rep.at("A1").constant == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(rep.at("A6").pass);

  GardingConstants g = garding_constants(p, grid);
  CHECK(g.coercivity == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(g.shift <= 1e-9);
}

TEST_CASE("elliptic validator on the evolving-circle operator") {
  InstanceSpec spec;
  spec.name = InstanceSpec::Name::EvolvingCircle;
  spec.n = 9;
  spec.profile = Profile::affine(1.0, 0.5);
  Instance inst = make_instance(spec);
  TimeGrid grid = TimeGrid::uniform(1.0, 48);
  auto rep = validate_A(inst.prob, grid);
  CHECK(rep.all_pass());
  for (const char* id : {"A1", "A2", "A5", "A8"}) CHECK(std::isfinite(rep.at(id).constant));
  CHECK(rep.at("A7").constant <= 1e-8);

  // reported pair satisfies the coercivity-up-to-shift inequality
  GardingConstants g = garding_constants(inst.prob, grid);
  Rng rng(5);
  for (int d = 0; d < 20; ++d) {
    Vector v = rng.normal_vector(9);
    double t = 0.05 * d;
    double lhs = v.dot(symmetrize(inst.prob.a_matrix(t)) * v);
    double rhs = g.coercivity * inst.fam->inner_v(t, v, v) - g.shift * inst.fam->inner_h(t, v, v);
    CHECK(lhs >= rhs - 1e-9 * (std::abs(lhs) + std::abs(rhs) + 1.0));
  }
}

TEST_CASE("a V x V-strength term declared as the rough part fails its bound") {
  InstanceSpec spec;
  spec.name = InstanceSpec::Name::StaticCircle;
  spec.n = 13;
  Instance inst = make_instance(spec);
  auto fam = inst.fam;
  ParabolicProblem::Setup setup;
  setup.a_s = [fam](double t) { return fam->gram_v(t); };
  setup.a_n = [fam](double t) { return fam->gram_v(t); };  // too strong for V x H
  ParabolicProblem p(fam, std::move(setup));
  auto rep = validate_A(p, TimeGrid::uniform(1.0, 16));
  CHECK(!rep.at("A4").pass);

  // an H-strength rough part is accepted
  ParabolicProblem::Setup ok;
  ok.a_s = [fam](double t) { return fam->gram_v(t); };
  ok.a_n = [fam](double t) { return fam->gram_h(t); };
  ParabolicProblem pok(fam, std::move(ok));
  CHECK(validate_A(pok, TimeGrid::uniform(1.0, 16)).at("A4").pass);
}

TEST_CASE("differentiation-identity residual refines at second order") {
  InstanceSpec spec;
  spec.name = InstanceSpec::Name::WeightedRn;
  spec.n = 4;
  spec.profile = Profile::sin_offset(1.5, 0.4, 2.0);
  Instance inst = make_instance(spec);
  TimeGrid grid = TimeGrid::uniform(1.0, 24);
  double coarse = a7_residual(inst.prob, grid, 1e-2, 99, false);
  double fine = a7_residual(inst.prob, grid, 5e-3, 99, false);
  CHECK(std::log2(coarse / fine) >= 1.9);
}

TEST_CASE("exactly one differentiation route for a time-dependent smooth part") {
  auto fam = curved_family(2);
  auto f = fam;

  ParabolicProblem::Setup both;
  both.a_s = [f](double t) { return f->gram_v(t); };
  both.a_s_dot = [](double) { return Matrix::Zero(2, 2).eval(); };
  both.r_form = [](double, const Vector&) { return 0.0; };
  CHECK_THROWS_AS(ParabolicProblem(fam, std::move(both)), PreconditionError);

  ParabolicProblem::Setup neither;
  neither.a_s = [f](double t) { return f->gram_v(t); };
  CHECK_THROWS_AS(ParabolicProblem(fam, std::move(neither)), PreconditionError);

  // nonsymmetric smooth part cannot use the auto-derived correction
  ParabolicProblem::Setup skewed;
  skewed.a_s = [](double t) {
    Matrix a(2, 2);
    a << 1.0, t, 0.0, 1.0;
    return a;
  };
  skewed.a_s_dot = [](double) {
    Matrix a(2, 2);
    a << 0.0, 1.0, 0.0, 0.0;
    return a;
  };
  CHECK_THROWS_AS(ParabolicProblem(fam, std::move(skewed)), PreconditionError);
}

TEST_CASE("weak-form residual on manufactured, zero, and load-only data") {
  InstanceSpec spec;
  spec.name = InstanceSpec::Name::WeightedRn;
  spec.n = 3;
  spec.profile = Profile::affine(1.0, 1.0);
  Instance inst = make_instance(spec);
  auto fam = inst.fam;
  TimeGrid grid = TimeGrid::uniform(1.0, 400);

  Vector amp(3);
  amp << 1.0, 0.5, 0.25;
  Trajectory exact = Trajectory::closed_form(
      fam, [amp](double t) { return (std::exp(-t) * amp).eval(); },
      [amp](double t) { return (-std::exp(-t) * amp).eval(); });
  ParabolicProblem manufactured = manufacture(inst, exact);
  WeakFormResidual wr = weak_form_residual(manufactured, exact, grid);
  CHECK(wr.pointwise <= 1e-12);
  CHECK(wr.accumulated <= 1e-3);

  WeakFormResidual zero = weak_form_residual(inst.prob, Trajectory::zero(fam), grid);
  CHECK(zero.pointwise == 0.0);

  Vector fvec(3);
  fvec << 2.0, -1.0, 0.5;
  ParabolicProblem loaded =
      inst.prob.with_data(Vector::Zero(3), Trajectory::constant(fam, fvec), LoadTag::StateH);
  WeakFormResidual lr = weak_form_residual(loaded, Trajectory::zero(fam), grid);
  // oracle: normalized peak dual norm of the load
  double peak = 0.0;
  for (double t : grid.nodes())
    peak = std::max(peak, fam->dual_norm_vstar(t, Vector(fam->gram_h(t) * fvec)));
  CHECK(lr.pointwise == doctest::Approx(peak / std::max(1.0, peak)).epsilon(1e-12));
}
