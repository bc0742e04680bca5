#include <doctest.h>

#include "plaft/splines.hpp"

#include <algorithm>
#include <cmath>
#include <random>

using namespace plaft;

namespace {

SplineBasisSpec spec_of(int degree, std::initializer_list<double> knots) {
  SplineBasisSpec s;
  s.degree = degree;
  s.knots = Eigen::VectorXd(static_cast<Eigen::Index>(knots.size()));
  Eigen::Index k = 0;
  for (double v : knots) s.knots(k++) = v;
  return s;
}

/// Sort-and-interpolate quantile, written independently of the library.
double oracle_quantile(std::vector<double> v, double p) {
  std::sort(v.begin(), v.end());
  const double h = (static_cast<double>(v.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (h - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

}  // namespace

TEST_CASE("place_knots: equally spaced quantiles") {
  Eigen::VectorXd five(5);
  five << 0, 1, 2, 3, 4;
  const Eigen::VectorXd k1 = place_knots(five, 1);
  REQUIRE(k1.size() == 1);
  CHECK(k1(0) == doctest::Approx(2.0));

  const Eigen::VectorXd eleven = Eigen::VectorXd::LinSpaced(11, 0, 10);
  const Eigen::VectorXd k3 = place_knots(eleven, 3);
  REQUIRE(k3.size() == 3);
  CHECK(k3(0) == doctest::Approx(2.5));
  CHECK(k3(1) == doctest::Approx(5.0));
  CHECK(k3(2) == doctest::Approx(7.5));
}

TEST_CASE("place_knots matches an independent quantile oracle") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(-5.0, 5.0);
  std::vector<double> v(100);
  for (auto& x : v) x = u(rng);
  const Eigen::VectorXd values = Eigen::Map<Eigen::VectorXd>(v.data(), 100);
  const Eigen::VectorXd k = place_knots(values, 4);
  REQUIRE(k.size() == 4);
  for (int j = 0; j < 4; ++j) {
    CHECK(k(j) == doctest::Approx(oracle_quantile(v, (j + 1) / 5.0)).epsilon(1e-14));
    if (j > 0) CHECK(k(j) > k(j - 1));
  }
}

TEST_CASE("place_knots tie policy") {
  Eigen::VectorXd coarse(12);
  coarse << 0, 0, 0, 0, 0, 0, 0, 0, 1, 1, 2, 3;
  CHECK_THROWS_AS(place_knots(coarse, 3, KnotTies::strict), KnotDegeneracyError);
  const Eigen::VectorXd k = place_knots(coarse, 3, KnotTies::collapse);
  CHECK(k.size() >= 1);
  CHECK(k.size() < 3);
  for (Eigen::Index j = 1; j < k.size(); ++j) CHECK(k(j) > k(j - 1));

  const Eigen::VectorXd constant = Eigen::VectorXd::Constant(10, 4.0);
  try {
    place_knots(constant, 2, KnotTies::collapse);
    FAIL("expected knot degeneracy");
  } catch (const KnotDegeneracyError& e) {
    CHECK(e.achievable() == 0);
  }
}

TEST_CASE("eval_basis hand values") {
  const Eigen::VectorXd b0 = eval_basis(spec_of(3, {1, 2}), 0.0);
  CHECK(b0.size() == 5);
  CHECK(b0.isZero(0.0));

  const Eigen::VectorXd b1 = eval_basis(spec_of(1, {0}), 2.0);
  REQUIRE(b1.size() == 2);
  CHECK(b1(0) == 2.0);
  CHECK(b1(1) == 2.0);

  const Eigen::VectorXd b3 = eval_basis(spec_of(3, {-1, 0, 1}), 0.5);
  Eigen::VectorXd expected(6);
  expected << 0.5, 0.25, 0.125, 3.375, 0.125, 0.0;
  CHECK((b3 - expected).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("eval_phi hand values and dimension check") {
  const SplineBasisSpec s = spec_of(1, {0});
  Eigen::VectorXd beta(2);
  beta << 1, -2;
  CHECK(eval_phi(s, beta, 3.0) == doctest::Approx(-3.0));
  CHECK(eval_phi(s, Eigen::VectorXd::Zero(2), 1.7) == 0.0);
  CHECK_THROWS_AS(eval_phi(s, Eigen::VectorXd::Zero(3), 1.0), DimensionError);
}

TEST_CASE("eval_phi vanishes at zero when no knot is negative") {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> n;
  const SplineBasisSpec s = spec_of(3, {0.0, 0.5, 1.5});
  for (int rep = 0; rep < 10; ++rep) {
    Eigen::VectorXd beta(6);
    for (auto& b : beta) b = n(rng);
    CHECK(eval_phi(s, beta, 0.0) == 0.0);
  }
}

TEST_CASE("cubic eval_phi matches a polynomial-plus-hinge expansion") {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> n;
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  const SplineBasisSpec s = spec_of(3, {-1.2, 0.3, 1.9});
  Eigen::VectorXd beta(6);
  for (auto& b : beta) b = n(rng);
  for (int rep = 0; rep < 20; ++rep) {
    const double x = u(rng);
    double oracle = beta(0) * x + beta(1) * x * x + beta(2) * x * x * x;
    for (int k = 0; k < 3; ++k) {
      const double h = std::max(0.0, x - s.knots(k));
      oracle += beta(3 + k) * h * h * h;
    }
    CHECK(eval_phi(s, beta, x) == doctest::Approx(oracle).epsilon(1e-12));
  }
}

TEST_CASE("eval_phi is C1 across knots for degree >= 2") {
  std::mt19937_64 rng(6);
  std::normal_distribution<double> n;
  for (int degree : {2, 3}) {
    const SplineBasisSpec s = spec_of(degree, {-0.7, 0.4, 1.1});
    Eigen::VectorXd beta(s.size());
    for (auto& b : beta) b = n(rng);
    for (Eigen::Index k = 0; k < s.knots.size(); ++k) {
      const double kappa = s.knots(k);
      const double h = 1e-5;
      // Value continuity.
      CHECK(std::abs(eval_phi(s, beta, kappa - 1e-12) - eval_phi(s, beta, kappa + 1e-12)) < 1e-9);
      // Left and right one-sided derivatives agree.
      const double left = (eval_phi(s, beta, kappa) - eval_phi(s, beta, kappa - h)) / h;
      const double right = (eval_phi(s, beta, kappa + h) - eval_phi(s, beta, kappa)) / h;
      CHECK(std::abs(left - right) <= 1e-3 * (1.0 + std::abs(left)));
      // Central difference straddling the knot.
      const double central = (eval_phi(s, beta, kappa + h) - eval_phi(s, beta, kappa - h)) / (2 * h);
      CHECK(std::abs(central - 0.5 * (left + right)) <= 1e-6 * (1.0 + std::abs(central)) + 1e-4 * h);
    }
  }
}

TEST_CASE("below the first knot the spline is the pure polynomial") {
  const SplineBasisSpec s = spec_of(3, {0.5, 1.0});
  Eigen::VectorXd beta(5);
  beta << 0.3, -1.1, 0.7, 5.0, -9.0;
  for (double x : {-2.0, -0.3, 0.0, 0.49}) {
    CHECK(eval_phi(s, beta, x) == doctest::Approx(0.3 * x - 1.1 * x * x + 0.7 * x * x * x).epsilon(1e-14));
  }
}

TEST_CASE("basis_matrix stacks eval_basis rows and spec validation") {
  const SplineBasisSpec s = spec_of(2, {0.0, 1.0});
  Eigen::VectorXd x(3);
  x << -1, 0.5, 2;
  const Eigen::MatrixXd B = basis_matrix(s, x);
  REQUIRE(B.rows() == 3);
  REQUIRE(B.cols() == 4);
  for (Eigen::Index i = 0; i < 3; ++i) CHECK(B.row(i).transpose() == eval_basis(s, x(i)));
  CHECK(s.size() == s.degree + s.knot_count());

  CHECK_THROWS_AS(spec_of(3, {1.0, 1.0}).validate(), SpecError);
  CHECK_THROWS_AS(spec_of(0, {}).validate(), SpecError);
  CHECK_NOTHROW(spec_of(3, {}).validate());
}
