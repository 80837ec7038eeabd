#include <doctest.h>

#include <cmath>

#include "evolve/rng.hpp"
#include "evolve/space_family.hpp"

using namespace evolve;

namespace {

std::shared_ptr<SpaceFamily> identity_family(int n, double horizon = 1.0) {
  return std::make_shared<SpaceFamily>(
      n, horizon, [n](double) { return Matrix::Identity(n, n).eval(); },
      [n](double) { return Matrix::Identity(n, n).eval(); });
}

// Scalar weight family w(t) = 1 + t without an analytic derivative, so the
// finite-difference path is exercised.
std::shared_ptr<SpaceFamily> affine_weight_family(int n, double horizon) {
  return std::make_shared<SpaceFamily>(
      n, horizon, [n](double t) { return ((1.0 + t) * Matrix::Identity(n, n)).eval(); },
      [n](double t) { return ((1.0 + t) * Matrix::Identity(n, n)).eval(); });
}

// Independent derivative oracle: central difference with one Richardson step.
double fd_form_derivative(const SpaceFamily& fam, double t, const Vector& u, const Vector& v,
                          double h) {
  auto b = [&](double s) { return fam.inner_h(s, u, v); };
  double coarse = (b(t + h) - b(t - h)) / (2.0 * h);
  double fine = (b(t + 0.5 * h) - b(t - 0.5 * h)) / h;
  return (4.0 * fine - coarse) / 3.0;
}

}  // namespace

TEST_CASE("moving inner product evaluates the Gram quadratic form") {
  auto fam = identity_family(2);
  Vector u(2), v(2);
  u << 1.0, 0.0;
  v << 0.0, 1.0;
  CHECK(fam->inner_h(0.7, u, v) == doctest::Approx(0.0));

  auto w = std::make_shared<SpaceFamily>(
      1, 4.0, [](double t) { return (Matrix(1, 1) << 1.0 + t).finished(); },
      [](double t) { return (Matrix(1, 1) << 1.0 + t).finished(); });
  Vector two(1);
  two << 2.0;
  // oracle: scalar weight w(3) * 2^2
  double expected = (1.0 + 3.0) * 2.0 * 2.0;
  CHECK(w->inner_h(3.0, two, two) == doctest::Approx(expected));

  CHECK(fam->inner_h(0.3, Vector::Zero(2), v) == doctest::Approx(0.0));
  CHECK_THROWS_AS(fam->inner_h(0.5, Vector::Zero(3), v), DimensionError);
  CHECK_THROWS_AS(fam->inner_h(1.5, u, v), TimeDomainError);
}

TEST_CASE("dual norm maximizes the pairing over the unit ball") {
  auto fam = identity_family(2);
  Vector g(2);
  g << 3.0, 4.0;
  CHECK(fam->dual_norm_vstar(0.0, g) == doctest::Approx(5.0));
}

TEST_CASE("dual norm against an anisotropic Gram matches a brute-force search") {
  Vector d(2);
  d << 4.0, 1.0;
  Matrix k = d.asDiagonal();
  auto fam = std::make_shared<SpaceFamily>(
      2, 1.0, [](double) { return Matrix::Identity(2, 2).eval(); },
      [k](double) { return k; });
  Vector g(2);
  g << 2.0, 0.0;

  // oracle: maximize g.v over the ellipse v'Kv = 1 by sweeping the angle
  double best = 0.0;
  for (int i = 0; i < 20000; ++i) {
    double s = 2.0 * M_PI * i / 20000.0;
    Vector v(2);
    v << std::cos(s) / 2.0, std::sin(s);
    best = std::max(best, g.dot(v));
  }
  CHECK(fam->dual_norm_vstar(0.5, g) == doctest::Approx(best).epsilon(1e-6));
  CHECK(fam->dual_norm_vstar(0.5, Vector::Zero(2)) == doctest::Approx(0.0));
}

TEST_CASE("dual norm refuses a numerically singular Gram") {
  auto fam = std::make_shared<SpaceFamily>(
      2, 1.0, [](double) { return Matrix::Identity(2, 2).eval(); },
      [](double) {
        Matrix k(2, 2);
        k << 1.0, 1.0, 1.0, 1.0 + 1e-16;
        return k;
      });
  Vector g(2);
  g << 1.0, -1.0;
  CHECK_THROWS_AS(fam->dual_norm_vstar(0.0, g), SingularGramError);
}

TEST_CASE("squared-norm rate vanishes for a constant family and matches differences") {
  auto fam = identity_family(3);
  Rng rng(7);
  for (int i = 0; i < 5; ++i) CHECK(fam->theta(0.4, rng.normal_vector(3)) == doctest::Approx(0.0));

  auto w = std::make_shared<SpaceFamily>(
      1, 1.0, [](double t) { return (Matrix(1, 1) << 1.0 + t).finished(); },
      [](double t) { return (Matrix(1, 1) << 1.0 + t).finished(); });
  Vector three(1);
  three << 3.0;
  double oracle = fd_form_derivative(*w, 0.5, three, three, 1e-4);
  CHECK(w->theta(0.5, three) == doctest::Approx(oracle).epsilon(1e-9));
  CHECK(w->theta(0.5, three) == doctest::Approx(9.0).epsilon(1e-9));
}

TEST_CASE("squared-norm rate obeys the polarization bound") {
  int n = 4;
  auto fam = std::make_shared<SpaceFamily>(
      n, 1.0,
      [n](double t) {
        Matrix b = Matrix::Identity(n, n);
        for (int i = 0; i < n; ++i) b(i, i) += 0.3 * std::sin((i + 1) * t);
        return b;
      },
      [n](double) { return Matrix::Identity(n, n).eval(); });
  Rng rng(11);
  double t = 0.6;
  Matrix bdot = fam->gram_h_dot(t);
  double c_oracle = 4.0 * bdot.operatorNorm();
  for (int i = 0; i < 20; ++i) {
    Vector u = rng.normal_vector(n);
    Vector v = rng.normal_vector(n);
    double lhs = std::abs(fam->theta(t, u + v) - fam->theta(t, u - v));
    CHECK(lhs <= c_oracle * u.norm() * v.norm() * (1.0 + 1e-12));
  }
}

TEST_CASE("metric-rate form is exactly symmetric and matches finite differences") {
  auto fam = identity_family(2);
  Vector u(2), v(2);
  u << 1.0, 0.0;
  v << 0.0, 1.0;
  CHECK(fam->lambda_form(0.3, u, v) == doctest::Approx(0.0));

  auto w = affine_weight_family(2, 1.0);
  CHECK(w->lambda_form(0.4, u, v) == doctest::Approx(0.0));  // off-diagonal of a diagonal path
  double oracle = fd_form_derivative(*w, 0.4, u, u, 1e-4);
  CHECK(w->lambda_form(0.4, u, u) == doctest::Approx(oracle).epsilon(1e-8));
  CHECK(w->lambda_form(0.4, u, u) == doctest::Approx(1.0).epsilon(1e-8));

  Rng rng(3);
  int n = 5;
  auto curved = std::make_shared<SpaceFamily>(
      n, 1.0,
      [n](double t) {
        Matrix b = Matrix::Identity(n, n);
        for (int i = 0; i < n; ++i)
          for (int j = 0; j < n; ++j) b(i, j) += 0.05 * std::sin((1 + i + j) * t);
        return symmetrize(b);
      },
      [n](double) { return Matrix::Identity(n, n).eval(); });
  for (int i = 0; i < 10; ++i) {
    Vector a = rng.normal_vector(n);
    Vector b = rng.normal_vector(n);
    double ab = curved->lambda_form(0.37, a, b);
    double ba = curved->lambda_form(0.37, b, a);
    CHECK(ab == ba);  // bitwise, by polarization
  }
}

TEST_CASE("metric-rate form refines at second order against plain differences") {
  int n = 3;
  auto curved = std::make_shared<SpaceFamily>(
      n, 1.0,
      [n](double t) {
        Matrix b = Matrix::Identity(n, n);
        for (int i = 0; i < n; ++i) b(i, i) += 0.25 * std::sin((i + 1.0) * t);
        return b;
      },
      [n](double) { return Matrix::Identity(n, n).eval(); });
  Rng rng(5);
  Vector u = rng.normal_vector(n);
  Vector v = rng.normal_vector(n);
  double t = 0.5;
  auto plain_fd = [&](double h) {
    return (curved->inner_h(t + h, u, v) - curved->inner_h(t - h, u, v)) / (2.0 * h);
  };
  double reference = curved->lambda_form(t, u, v);
  double e1 = std::abs(plain_fd(1e-2) - reference);
  double e2 = std::abs(plain_fd(5e-3) - reference);
  double order = std::log2(e1 / e2);
  CHECK(order >= 1.9);

  // uniform bound constant measured from the whitened derivative
  Matrix b = curved->gram_h(t);
  Matrix isq = inverse_sqrt(b);
  double c = (isq * curved->gram_h_dot(t) * isq).operatorNorm();
  for (int i = 0; i < 10; ++i) {
    Vector a1 = rng.normal_vector(n);
    Vector a2 = rng.normal_vector(n);
    CHECK(std::abs(curved->lambda_form(t, a1, a2)) <=
          c * curved->norm_h(t, a1) * curved->norm_h(t, a2) * (1.0 + 1e-10));
  }
}

TEST_CASE("transfer operator reduces to the identity at t=0 and scales with the weight") {
  int n = 3;
  Matrix base(n, n);
  base << 2.0, 0.3, 0.0, 0.3, 1.5, 0.1, 0.0, 0.1, 1.0;
  auto fam = std::make_shared<SpaceFamily>(
      n, 1.0, [base](double t) { return ((1.0 + t) * base).eval(); },
      [n](double) { return Matrix::Identity(n, n).eval(); });

  CHECK((fam->transfer_operator(0.0) - Matrix::Identity(n, n)).norm() <= 1e-12);

  // oracle: explicit product base^{-1} ((1+t) base) = (1+t) I
  double t = 0.7;
  Matrix expected = base.inverse() * ((1.0 + t) * base);
  CHECK((fam->transfer_operator(t) - expected).norm() <= 1e-12);

  Rng rng(9);
  Matrix b0 = fam->gram_h(0.0);
  Matrix tr = fam->transfer_operator(t);
  for (int i = 0; i < 10; ++i) {
    Vector u = rng.normal_vector(n);
    Vector v = rng.normal_vector(n);
    double left = (tr * u).dot(b0 * v);
    double right = u.dot(b0 * (tr * v));
    CHECK(std::abs(left - right) <= 1e-12 * (std::abs(left) + 1.0));
  }
}

TEST_CASE("compatibility report on the identity and weighted families") {
  auto fam = identity_family(3);
  TimeGrid grid = TimeGrid::uniform(1.0, 64);
  auto rep = check_compatibility(*fam, grid);
  CHECK(rep.cx_h == doctest::Approx(1.0));
  CHECK(rep.cx_v == doctest::Approx(1.0));
  CHECK(rep.pass());
  CHECK(rep.semigroup_structural);

  auto w = affine_weight_family(2, 1.0);
  auto wrep = check_compatibility(*w, grid);
  // oracle: max over t of sqrt(1 + t) on [0, 1]
  CHECK(wrep.cx_h == doctest::Approx(std::sqrt(2.0)).epsilon(1e-9));
  CHECK(wrep.pass());
}

TEST_CASE("an eigenvalue crossing zero is a hard failure at the nearest node") {
  auto bad = std::make_shared<SpaceFamily>(
      2, 1.0,
      [](double t) {
        Vector d(2);
        d << 1.0, 0.5 - t;  // crosses zero at t = 0.5
        return Matrix(d.asDiagonal());
      },
      [](double) { return Matrix::Identity(2, 2).eval(); });
  TimeGrid grid = TimeGrid::uniform(1.0, 64);
  bool thrown = false;
  try {
    check_compatibility(*bad, grid);
  } catch (const SpdViolationError& e) {
    thrown = true;
    CHECK(std::abs(e.t - 0.5) <= 0.5 / 64 + 1e-12);
  }
  CHECK(thrown);
}

TEST_CASE("a jump in the Gram path trips the continuity modulus") {
  auto jumpy = std::make_shared<SpaceFamily>(
      2, 1.0,
      [](double t) {
        double s = t < 0.5 ? 1.0 : 2.0;
        return (s * Matrix::Identity(2, 2)).eval();
      },
      [](double) { return Matrix::Identity(2, 2).eval(); });
  auto rep = check_compatibility(*jumpy, TimeGrid::uniform(1.0, 64));
  CHECK(!rep.continuity_pass);
}

TEST_CASE("declared equivalence constant is enforced") {
  SpaceFamily::Options opt;
  opt.declared_cx = 1.2;  // too small for sqrt(2)
  auto fam = std::make_shared<SpaceFamily>(
      2, 1.0, [](double t) { return ((1.0 + t) * Matrix::Identity(2, 2)).eval(); },
      [](double t) { return ((1.0 + t) * Matrix::Identity(2, 2)).eval(); }, nullptr, opt);
  auto rep = check_compatibility(*fam, TimeGrid::uniform(1.0, 32));
  CHECK(!rep.declared_cx_pass);
  CHECK(!rep.pass());
}

TEST_CASE("tabulated family round-trips through the file format") {
  auto w = affine_weight_family(2, 1.0);
  auto path = std::filesystem::temp_directory_path() / "evolve_family_test.txt";
  w->to_file(path, 16);
  auto loaded = SpaceFamily::from_file(path);
  CHECK(loaded->dim() == 2);
  CHECK(loaded->horizon() == doctest::Approx(1.0));
  for (double t : {0.0, 0.25, 0.5, 1.0}) {
    CHECK((loaded->gram_h(t) - w->gram_h(t)).norm() <= 1e-12);  // affine data, exact interp
    CHECK((loaded->gram_v(t) - w->gram_v(t)).norm() <= 1e-12);
  }
  auto rep = check_compatibility(*loaded, TimeGrid::uniform(1.0, 32));
  CHECK(rep.initial_gram_matches);
  std::filesystem::remove(path);
}

TEST_CASE("derivative stencils refuse a horizon that cannot hold them") {
  auto fam = std::make_shared<SpaceFamily>(
      1, 1e-6, [](double) { return Matrix::Identity(1, 1).eval(); },
      [](double) { return Matrix::Identity(1, 1).eval(); });
  Vector one(1);
  one << 1.0;
  CHECK_THROWS_AS(fam->theta(5e-7, one), StencilError);
}
