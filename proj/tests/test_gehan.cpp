#include <doctest.h>

#include "helpers.hpp"
#include "plaft/gehan.hpp"
#include "plaft/solver.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

using namespace plaft;

namespace {

double naive_gehan(const Eigen::VectorXd& e, const EventVector& delta) {
  const auto n = static_cast<double>(e.size());
  double total = 0.0;
  for (Eigen::Index i = 0; i < e.size(); ++i) {
    if (!delta(i)) continue;
    for (Eigen::Index j = 0; j < e.size(); ++j) total += std::max(0.0, -(e(i) - e(j)));
  }
  return total / (n * n);
}

}  // namespace

TEST_CASE("gehan_loss hand values") {
  EventVector both(2);
  both << true, true;
  Eigen::VectorXd e(2);
  e << 0.0, 1.0;
  CHECK(gehan_loss(e, both) == doctest::Approx(0.25));
  CHECK(gehan_loss(Eigen::VectorXd::Constant(5, 3.0), EventVector::Constant(5, true)) == 0.0);
  CHECK_THROWS_AS(gehan_loss(e, EventVector::Constant(3, true)), DimensionError);
}

TEST_CASE("gehan_loss matches the double-loop reference") {
  std::mt19937_64 rng(21);
  std::normal_distribution<double> n;
  for (int rep = 0; rep < 10; ++rep) {
    const Dataset ds = test::random_dataset(100 + rep, 6, 1, 2);
    SplineBasisSpec b;
    b.degree = 2;
    b.knots = Eigen::VectorXd::Constant(1, 0.1);
    Eigen::VectorXd beta(3), vt(2);
    for (auto& v : beta) v = n(rng);
    for (auto& v : vt) v = n(rng);
    Eigen::VectorXd e(6);
    for (Eigen::Index i = 0; i < 6; ++i) {
      e(i) = ds.log_time()(i) - eval_phi(b, beta, ds.clinical()(i, 0)) - ds.features().row(i).dot(vt);
    }
    CHECK(gehan_loss(ds, {b}, beta, vt) == doctest::Approx(naive_gehan(e, ds.event())).epsilon(1e-12));
  }
}

TEST_CASE("gehan_loss is invariant to shifting all log times") {
  const Dataset ds = test::random_dataset(8, 15, 0, 3);
  const Eigen::VectorXd vt = Eigen::VectorXd::LinSpaced(3, -1, 1);
  const double base = gehan_loss(ds, {}, Eigen::VectorXd(0), vt);
  const Dataset shifted = ds.with_log_time(ds.log_time().array() + 4.25);
  CHECK(gehan_loss(shifted, {}, Eigen::VectorXd(0), vt) == doctest::Approx(base).epsilon(1e-12));
}

TEST_CASE("pseudo-problem row count and layout") {
  EventVector e(3);
  e << true, true, false;
  Eigen::VectorXd t(3);
  t << 0.1, 0.7, 0.3;
  Eigen::MatrixXd z(3, 1);
  z << 1.0, -2.0, 0.5;
  const PseudoProblem pp = build_pseudo_problem(t, e, z);
  CHECK(pp.S == 7);
  CHECK(pp.rows() == 7);
  CHECK(pp.zeta_row() == 6);
  CHECK_FALSE(pp.augmented());
  for (Eigen::Index s = 0; s < 6; ++s) {
    const auto [i, j] = pp.pairs[static_cast<std::size_t>(s)];
    CHECK(e(i));
    CHECK(pp.V(s) == t(i) - t(j));
    CHECK(pp.W(s, 0) == z(i, 0) - z(j, 0));
  }
  double abs_v = 0.0;
  for (Eigen::Index s = 0; s < 6; ++s) abs_v += std::abs(pp.V(s));
  CHECK(pp.zeta == doctest::Approx(1e6 * abs_v));
  CHECK(pp.V(6) == pp.zeta);
}

TEST_CASE("pseudo-problem with two events and scalar Z") {
  EventVector e(2);
  e << true, true;
  Eigen::VectorXd t(2);
  t << 1.0, 2.0;
  Eigen::MatrixXd z(2, 1);
  z << 3.0, 5.0;
  const PseudoProblem pp = build_pseudo_problem(t, e, z);
  REQUIRE(pp.S == 5);
  CHECK(pp.W(0, 0) == 0.0);
  CHECK(pp.W(1, 0) == -2.0);
  CHECK(pp.W(2, 0) == 2.0);
  CHECK(pp.W(3, 0) == 0.0);
  // sum_k delta_k sum_l (Z_l - Z_k) = (0 + 2) + (-2 + 0) = 0
  CHECK(pp.W(4, 0) == 0.0);
}

TEST_CASE("pseudo-problem needs two events and respects the memory cap") {
  EventVector one(3);
  one << true, false, false;
  CHECK_THROWS_AS(build_pseudo_problem(Eigen::VectorXd::Zero(3), one, Eigen::MatrixXd::Zero(3, 1)),
                  DegenerateDataError);
  const Dataset ds = test::random_dataset(2, 20, 0, 3);
  CHECK_THROWS_AS(build_pseudo_problem(ds, {}, ZetaPolicy{}, 1024), CapabilityError);
}

TEST_CASE("censored subjects only appear as the second pair coordinate") {
  const Dataset ds = test::random_dataset(31, 12, 0, 2, 0.5);
  const PseudoProblem pp = build_pseudo_problem(ds, {});
  for (const auto& [i, j] : pp.pairs) CHECK(ds.event()(i));
  CHECK(static_cast<Eigen::Index>(pp.pairs.size()) == ds.n_events() * ds.n());
}

TEST_CASE("pseudo objective equals 2 n^2 L_n plus a constant while the zeta residual is positive") {
  const Dataset ds = test::random_dataset(41, 9, 0, 2);
  const PseudoProblem pp = build_pseudo_problem(ds, {});
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n;
  const double n2 = static_cast<double>(ds.n() * ds.n());
  const double c0 = l1_objective(pp, Eigen::VectorXd::Zero(2)) - 2.0 * n2 * gehan_loss(ds, {}, Eigen::VectorXd(0), Eigen::VectorXd::Zero(2));
  for (int rep = 0; rep < 5; ++rep) {
    Eigen::VectorXd th(2);
    th << n(rng), n(rng);
    const double c = l1_objective(pp, th) - 2.0 * n2 * gehan_loss(ds, {}, Eigen::VectorXd(0), th);
    CHECK(c == doctest::Approx(c0).epsilon(1e-9));
  }
}

TEST_CASE("augment_penalties structure and objective") {
  const Dataset ds = test::random_dataset(51, 10, 1, 3);
  SplineBasisSpec b;
  b.degree = 3;
  b.knots = place_knots(ds.clinical().col(0), 2);
  const PseudoProblem pp = build_pseudo_problem(ds, {b});
  const DesignLayout layout = DesignLayout::make({b}, 3);
  REQUIRE(layout.cols() == pp.cols());

  PenaltySpec pen;
  pen.gamma = 1.0;
  pen.lambda = Eigen::VectorXd::Constant(3, 2.0);
  const PseudoProblem aug = augment_penalties(pp, pen, layout);
  CHECK(aug.penalty_rows == 5);
  CHECK(aug.rows() == pp.rows() + 5);
  for (Eigen::Index s = pp.rows(); s < aug.rows(); ++s) {
    CHECK(aug.V(s) == 0.0);
    CHECK((aug.W.row(s).array() != 0.0).count() == 1);
  }
  CHECK_THROWS_AS(augment_penalties(aug, pen, layout), StateError);

  std::mt19937_64 rng(9);
  std::normal_distribution<double> n;
  Eigen::VectorXd th(pp.cols());
  for (auto& v : th) v = n(rng);
  double penalty = 0.0;
  for (auto c : layout.knot_columns()) penalty += pen.gamma * std::abs(th(c));
  for (Eigen::Index j = 0; j < 3; ++j) penalty += pen.lambda(j) * std::abs(th(layout.spline_cols + j));
  CHECK(l1_objective(aug, th) == doctest::Approx(l1_objective(pp, th) + penalty).epsilon(1e-12));

  PenaltySpec zero;
  zero.lambda = Eigen::VectorXd::Zero(3);
  const PseudoProblem aug0 = augment_penalties(pp, zero, layout);
  CHECK(aug0.W.bottomRows(aug0.penalty_rows).isZero(0.0));
  CHECK(l1_objective(aug0, th) == doctest::Approx(l1_objective(pp, th)).epsilon(1e-14));

  PenaltySpec bad;
  bad.lambda = Eigen::VectorXd::Constant(2, 1.0);
  CHECK_THROWS_AS(augment_penalties(pp, bad, layout), DimensionError);
  bad.lambda = Eigen::VectorXd::Constant(3, -1.0);
  CHECK_THROWS_AS(augment_penalties(pp, bad, layout), SpecError);
}

TEST_CASE("penalize_all_beta covers every spline column") {
  SplineBasisSpec b;
  b.degree = 2;
  b.knots = Eigen::VectorXd::LinSpaced(3, -1, 1);
  const DesignLayout layout = DesignLayout::make({b, b}, 1);
  PenaltySpec pen;
  pen.gamma = 1.0;
  pen.lambda = Eigen::VectorXd::Zero(1);
  CHECK(penalty_entries(pen, layout).size() == 6 + 1);
  pen.penalize_all_beta = true;
  CHECK(penalty_entries(pen, layout).size() == 10 + 1);
}

TEST_CASE("permuting subjects leaves the exact minimizer unchanged") {
  const Dataset ds = test::random_dataset(61, 10, 0, 2);
  std::vector<Eigen::Index> perm(10);
  std::iota(perm.begin(), perm.end(), 0);
  std::mt19937_64 rng(1);
  std::shuffle(perm.begin(), perm.end(), rng);
  const SolveOutcome a = solve_exact_l1(build_pseudo_problem(ds, {}));
  const SolveOutcome b = solve_exact_l1(build_pseudo_problem(ds.subset(perm), {}));
  const double la = gehan_loss(ds, {}, Eigen::VectorXd(0), a.theta_hat);
  const double lb = gehan_loss(ds, {}, Eigen::VectorXd(0), b.theta_hat);
  CHECK(la == doctest::Approx(lb).epsilon(1e-9));
}
