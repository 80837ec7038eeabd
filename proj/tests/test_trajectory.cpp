#include <doctest.h>

#include <cmath>

#include "evolve/rng.hpp"
#include "evolve/trajectory.hpp"

using namespace evolve;

namespace {

std::shared_ptr<SpaceFamily> identity_family(int n, double horizon = 1.0) {
  return std::make_shared<SpaceFamily>(
      n, horizon, [n](double) { return Matrix::Identity(n, n).eval(); },
      [n](double) { return Matrix::Identity(n, n).eval(); });
}

std::shared_ptr<SpaceFamily> affine_weight_family(int n, double horizon = 1.0) {
  return std::make_shared<SpaceFamily>(
      n, horizon, [n](double t) { return ((1.0 + t) * Matrix::Identity(n, n)).eval(); },
      [n](double t) { return ((1.0 + t) * Matrix::Identity(n, n)).eval(); });
}

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

Matrix sample_path(const std::vector<double>& nodes, const std::function<Vector(double)>& f) {
  Matrix vals(f(nodes.front()).size(), nodes.size());
  for (std::size_t j = 0; j < nodes.size(); ++j) vals.col(j) = f(nodes[j]);
  return vals;
}

}  // namespace

TEST_CASE("not-a-knot spline reproduces cubics with exact derivatives") {
  std::vector<double> nodes;
  for (int i = 0; i <= 13; ++i) nodes.push_back(i / 13.0);
  auto cubic = [](double t) {
    Vector v(2);
    v << t * t * t - 0.5 * t + 2.0, 1.0 - t * t;
    return v;
  };
  CubicSpline sp(nodes, sample_path(nodes, cubic));
  for (double t : {0.0, 0.111, 0.5, 0.77, 1.0}) {
    CHECK((sp.value(t) - cubic(t)).norm() <= 1e-12);
    Vector d(2);
    d << 3.0 * t * t - 0.5, -2.0 * t;
    CHECK((sp.derivative(t) - d).norm() <= 1e-11);
  }
}

TEST_CASE("space-time norms match closed-form weights") {
  auto fam = identity_family(2);
  TimeGrid grid = TimeGrid::uniform(1.0, 64);
  Vector e0 = Vector::Unit(2, 0);
  Trajectory constant = Trajectory::constant(fam, e0);
  CHECK(l2_norm(constant, NormKind::H, grid) == doctest::Approx(1.0));

  auto w = affine_weight_family(1);
  Trajectory one = Trajectory::constant(w, Vector::Ones(1));
  // oracle: integral of (1 + t) over [0, 1] is 3/2, exactly integrated
  CHECK(l2_norm(one, NormKind::H, grid) == doctest::Approx(std::sqrt(1.5)).epsilon(1e-12));
}

TEST_CASE("pullback norm is equivalent to the moving norm within the measured constant") {
  auto fam = curved_family(3);
  TimeGrid grid = TimeGrid::uniform(1.0, 64);
  auto rep = check_compatibility(*fam, grid);
  Rng rng(21);
  for (int k = 0; k < 5; ++k) {
    Vector a = rng.normal_vector(3), b = rng.normal_vector(3);
    Trajectory u = Trajectory::closed_form(
        fam, [a, b](double t) { return (a + std::sin(2.0 * t) * b).eval(); });
    double moving = l2_norm(u, NormKind::H, grid);
    Matrix b0 = fam->gram_h(0.0);
    double fixed = std::sqrt(grid.integrate([&](double t) {
      Vector v = u.value(t);
      return v.dot(b0 * v);
    }));
    CHECK(fixed <= rep.cx_h * moving * (1.0 + 1e-9));
    CHECK(fixed >= moving / rep.cx_h * (1.0 - 1e-9));
  }
}

TEST_CASE("material derivative of a transported vector is the zero path") {
  auto fam = curved_family(2);
  Vector w(2);
  w << 0.7, -0.4;
  Trajectory u = Trajectory::constant(fam, w);
  Trajectory du = u.material_derivative();
  for (double t : {0.0, 0.33, 0.5, 1.0}) CHECK(du.value(t).norm() == 0.0);
}

TEST_CASE("material derivative of simple coefficient paths") {
  auto fam = identity_family(2);
  Trajectory linear = Trajectory::closed_form(
      fam,
      [](double t) {
        Vector v(2);
        v << t, 0.0;
        return v;
      },
      [](double) {
        Vector v(2);
        v << 1.0, 0.0;
        return v;
      });
  Vector expected(2);
  expected << 1.0, 0.0;
  CHECK((linear.material_derivative().value(0.4) - expected).norm() <= 1e-14);

  // nodal t^2 path: oracle is a central difference of the spline itself
  auto fam1 = identity_family(1);
  std::vector<double> nodes;
  for (int i = 0; i <= 40; ++i) nodes.push_back(i / 40.0);
  Trajectory sq = Trajectory::nodal(
      fam1, nodes, sample_path(nodes, [](double t) { return Vector::Constant(1, t * t); }));
  Trajectory dsq = sq.material_derivative();
  double h = 1e-6;
  double oracle = (sq.value(1.0) - sq.value(1.0 - 2.0 * h)).x() / (2.0 * h);
  CHECK(dsq.value(1.0).x() == doctest::Approx(oracle).epsilon(1e-6));
  CHECK(dsq.value(1.0).x() == doctest::Approx(2.0).epsilon(1e-9));
}

TEST_CASE("material derivative is linear") {
  auto fam = curved_family(2);
  std::vector<double> nodes;
  for (int i = 0; i <= 24; ++i) nodes.push_back(i / 24.0);
  Trajectory u = Trajectory::nodal(fam, nodes, sample_path(nodes, [](double t) {
                                     Vector v(2);
                                     v << std::sin(t), t;
                                     return v;
                                   }));
  Trajectory v = Trajectory::nodal(fam, nodes, sample_path(nodes, [](double t) {
                                     Vector v2(2);
                                     v2 << t * t, std::cos(t);
                                     return v2;
                                   }));
  Trajectory combo = Trajectory::linear_combination(2.0, u, -3.0, v);
  Trajectory lhs = combo.material_derivative();
  Trajectory du = u.material_derivative();
  Trajectory dv = v.material_derivative();
  for (double t : {0.1, 0.5, 0.9}) {
    Vector rhs = 2.0 * du.value(t) - 3.0 * dv.value(t);
    CHECK((lhs.value(t) - rhs).norm() <= 1e-12);
  }
}

TEST_CASE("C0 trajectories cannot be differentiated") {
  auto fam = identity_family(1);
  std::vector<double> nodes{0.0, 0.5, 1.0};
  Trajectory rough = Trajectory::nodal(fam, nodes, Matrix::Ones(1, 3), Smoothness::C0);
  CHECK_THROWS_AS(rough.material_derivative(), PreconditionError);
}

TEST_CASE("strong material derivatives satisfy the weak identity") {
  auto fam = curved_family(2);
  TimeGrid grid = TimeGrid::uniform(1.0, 200);
  auto tests = TestFunctionFamily::standard(*fam, 4);

  Trajectory u = Trajectory::closed_form(
      fam,
      [](double t) {
        Vector v(2);
        v << std::exp(0.5 * t), std::sin(t);
        return v;
      },
      [](double t) {
        Vector v(2);
        v << 0.5 * std::exp(0.5 * t), std::cos(t);
        return v;
      });
  double resid = weak_matder_residual(u, as_dual(u.material_derivative()), tests, grid);
  CHECK(resid <= 1e-9);

  // transported vectors have zero weak material derivative
  Trajectory c = Trajectory::constant(fam, Vector::Ones(2));
  double resid0 = weak_matder_residual(c, Trajectory::zero(fam), tests, grid);
  CHECK(resid0 <= 1e-9);

  CHECK_THROWS_AS(weak_matder_residual(u, Trajectory::zero(fam), TestFunctionFamily{}, grid),
                  PreconditionError);

  TestFunctionFamily bad;
  bad.fns.push_back({[](double) { return 1.0; }, [](double) { return 0.0; }, Vector::Ones(2)});
  CHECK_THROWS_AS(weak_matder_residual(u, Trajectory::zero(fam), bad, grid), PreconditionError);
}

TEST_CASE("a constant perturbation of the candidate shows up as the test integral") {
  auto fam = identity_family(2);
  TimeGrid grid = TimeGrid::uniform(1.0, 400);
  auto tests = TestFunctionFamily::standard(*fam, 2);

  Trajectory u = Trajectory::closed_form(
      fam,
      [](double t) {
        Vector v(2);
        v << std::sin(t), std::cos(t);
        return v;
      },
      [](double t) {
        Vector v(2);
        v << std::cos(t), -std::sin(t);
        return v;
      });
  Trajectory du = u.material_derivative();
  Vector bump = Vector::Unit(2, 0);
  Trajectory g =
      Trajectory::closed_form(fam, [bump, du](double t) { return (du.value(t) + bump).eval(); });
  double resid = weak_matder_residual(u, g, tests, grid);

  // oracle: for the matching coordinate test, |int zeta_1| / ||eta_1||_{L2 V}
  const double pi = 3.14159265358979323846;
  double integral = grid.integrate([&](double t) { return std::sin(pi * t); });
  double eta_norm = std::sqrt(grid.integrate([&](double t) {
    double z = std::sin(pi * t);
    return z * z;
  }));
  CHECK(resid == doctest::Approx(integral / eta_norm).epsilon(1e-6));
}

TEST_CASE("transport identity holds for exponential paths on the identity family") {
  auto fam = identity_family(1);
  TimeGrid grid = TimeGrid::uniform(1.0, 1000);
  Trajectory u = Trajectory::closed_form(
      fam, [](double t) { return Vector::Constant(1, std::exp(t)); },
      [](double t) { return Vector::Constant(1, std::exp(t)); });
  CHECK(transport_residual(u, u, grid) <= 1e-6);
}

TEST_CASE("transport defect on constant paths refines at second order") {
  auto fam = curved_family(2);
  Trajectory u = Trajectory::constant(fam, Vector::Ones(2));
  Trajectory v = Trajectory::constant(fam, (Vector(2) << 1.0, -1.0).finished());
  double coarse = transport_residual(u, v, TimeGrid::uniform(1.0, 100));
  double fine = transport_residual(u, v, TimeGrid::uniform(1.0, 200));
  double order = std::log2(coarse / fine);
  CHECK(order >= 1.9);
}

TEST_CASE("integrated transport identity balances endpoint terms") {
  auto fam = identity_family(2);
  TimeGrid grid = TimeGrid::uniform(1.0, 128);
  Trajectory c = Trajectory::constant(fam, Vector::Ones(2));
  CHECK(ibp_check(c, c, grid) <= 1e-14);

  // weight (1 + t): endpoint difference T balances the drift integral T
  auto w = affine_weight_family(1);
  Trajectory one = Trajectory::constant(w, Vector::Ones(1));
  CHECK(ibp_check(one, one, grid) <= 1e-12);

  auto curved = curved_family(2);
  Rng rng(31);
  for (int k = 0; k < 3; ++k) {
    Vector a = rng.normal_vector(2), b = rng.normal_vector(2);
    Trajectory u = Trajectory::closed_form(
        curved, [a, b](double t) { return (a + std::sin(1.7 * t) * b).eval(); },
        [b](double t) { return (1.7 * std::cos(1.7 * t) * b).eval(); });
    CHECK(ibp_check(u, u, grid) <= 1e-6);
  }
}

TEST_CASE("pointwise H norm is controlled by the graph norm with a finite constant") {
  auto fam = curved_family(3);
  TimeGrid grid = TimeGrid::uniform(1.0, 128);
  Rng rng(41);
  for (int k = 0; k < 5; ++k) {
    Vector a = rng.normal_vector(3), b = rng.normal_vector(3);
    Trajectory u = Trajectory::closed_form(
        fam, [a, b](double t) { return (a + std::cos(1.3 * t) * b).eval(); },
        [b](double t) { return (-1.3 * std::sin(1.3 * t) * b).eval(); });
    double c = embedding_constant(u, grid);
    CHECK(std::isfinite(c));
    CHECK(c > 0.0);
    CHECK(c < 100.0);
  }
}

TEST_CASE("nodal trajectories round-trip through csv") {
  auto fam = identity_family(2);
  std::vector<double> nodes{0.0, 0.25, 0.5, 0.75, 1.0};
  Matrix vals(2, 5);
  vals << 1.0, 2.0, 3.0, 4.0, 5.0, -1.0, 0.5, 0.0, -0.5, 1.0;
  Trajectory u = Trajectory::nodal(fam, nodes, vals);
  auto path = std::filesystem::temp_directory_path() / "evolve_traj_test.csv";
  u.to_csv(path);
  Trajectory back = Trajectory::from_csv(fam, path);
  for (double t : {0.0, 0.3, 0.6, 1.0}) CHECK((back.value(t) - u.value(t)).norm() <= 1e-14);
  std::filesystem::remove(path);
}

TEST_CASE("nodal trajectories must cover the horizon") {
  auto fam = identity_family(1);
  std::vector<double> nodes{0.0, 0.4};  // stops short of T = 1
  CHECK_THROWS_AS(Trajectory::nodal(fam, nodes, Matrix::Ones(1, 2)), PreconditionError);
}
