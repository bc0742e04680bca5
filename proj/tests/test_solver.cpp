#include <doctest.h>

#include "helpers.hpp"
#include "plaft/gehan.hpp"
#include "plaft/solver.hpp"

#include <cmath>
#include <limits>
#include <random>

using namespace plaft;

namespace {

L1Problem median_problem(std::initializer_list<double> values) {
  L1Problem p;
  p.V = Eigen::VectorXd(static_cast<Eigen::Index>(values.size()));
  Eigen::Index k = 0;
  for (double v : values) p.V(k++) = v;
  p.W = Eigen::MatrixXd::Ones(p.V.size(), 1);
  return p;
}

/// Brute-force minimum of a 2-column L1 problem: the optimum is attained at
/// a vertex where two residuals vanish.
double vertex_minimum(const L1Problem& p) {
  double best = std::numeric_limits<double>::infinity();
  for (Eigen::Index a = 0; a < p.rows(); ++a) {
    for (Eigen::Index b = a + 1; b < p.rows(); ++b) {
      Eigen::Matrix2d m;
      m << p.W.row(a), p.W.row(b);
      if (std::abs(m.determinant()) < 1e-12) continue;
      Eigen::Vector2d rhs(p.V(a), p.V(b));
      best = std::min(best, p.objective(m.partialPivLu().solve(rhs)));
    }
  }
  return best;
}

L1Problem random_problem(std::mt19937_64& rng, Eigen::Index m, Eigen::Index p) {
  std::normal_distribution<double> n;
  L1Problem pr;
  pr.W.resize(m, p);
  pr.V.resize(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = 0; j < p; ++j) pr.W(i, j) = n(rng);
    pr.V(i) = pr.W.row(i).sum() + n(rng);
  }
  return pr;
}

}  // namespace

TEST_CASE("exact solver: median of three") {
  const SolveOutcome out = solve_exact_l1(median_problem({1, 2, 3}));
  CHECK(out.theta_hat(0) == doctest::Approx(2.0).epsilon(1e-9));
  CHECK(out.objective == doctest::Approx(2.0).epsilon(1e-9));
  CHECK(out.converged);
}

TEST_CASE("exact solver interpolates a consistent system") {
  L1Problem p;
  p.W.resize(4, 2);
  p.W << 1, 0, 0, 1, 1, 1, 1, -1;
  const Eigen::Vector2d truth(0.7, -1.3);
  p.V = p.W * truth;
  const SolveOutcome out = solve_exact_l1(p);
  CHECK((out.theta_hat - truth).norm() < 1e-8);
  CHECK(out.objective < 1e-8);
}

TEST_CASE("exact solver matches vertex enumeration on random problems") {
  std::mt19937_64 rng(77);
  for (int rep = 0; rep < 10; ++rep) {
    const L1Problem p = random_problem(rng, 30, 2);
    const double oracle = vertex_minimum(p);
    const SolveOutcome out = solve_exact_l1(p);
    CHECK(out.objective == doctest::Approx(oracle).epsilon(1e-9));
    CHECK(p.objective(out.theta_hat) == doctest::Approx(out.objective).epsilon(1e-12));
  }
}

TEST_CASE("exact solver on wider problems is no worse than perturbations") {
  std::mt19937_64 rng(78);
  std::normal_distribution<double> n;
  const L1Problem p = random_problem(rng, 30, 4);
  const SolveOutcome out = solve_exact_l1(p);
  for (int rep = 0; rep < 200; ++rep) {
    Eigen::VectorXd th = out.theta_hat;
    for (auto& v : th) v += 0.05 * n(rng);
    CHECK(p.objective(th) >= out.objective - 1e-9);
  }
}

TEST_CASE("exact solver refuses more columns than rows minus one") {
  EventVector e(2);
  e << true, true;
  const PseudoProblem pp = build_pseudo_problem(Eigen::Vector2d(0.0, 1.0), e, Eigen::MatrixXd::Random(2, 5));
  CHECK_THROWS_AS(solve_exact_l1(pp), CapabilityError);
}

TEST_CASE("compact form has the same objective as the pseudo-problem") {
  const Dataset ds = test::random_dataset(12, 11, 0, 3);
  const PseudoProblem pp = build_pseudo_problem(ds, {});
  const L1Problem cp = compact(pp);
  std::mt19937_64 rng(2);
  std::normal_distribution<double> n;
  for (int rep = 0; rep < 5; ++rep) {
    Eigen::VectorXd th(3);
    for (auto& v : th) v = n(rng);
    CHECK(cp.objective(th) == doctest::Approx(l1_objective(pp, th)).epsilon(1e-12));
  }
}

TEST_CASE("smooth_abs sandwich") {
  for (double eps : {1e-4, 0.1, 2.0}) {
    for (double u : {-3.0, -0.01, 0.0, 0.5, 10.0}) {
      const double r = smooth_abs(u, eps);
      CHECK(r <= std::abs(u) + 1e-15);
      CHECK(std::abs(u) <= r + eps + 1e-15);
    }
  }
}

TEST_CASE("smoothed solver: median of three") {
  SolverConfig cfg;
  cfg.method = SolverMethod::smoothed;
  const RowObjective obj(median_problem({1, 2, 3}));
  const SolveOutcome out = solve_smoothed(obj, cfg, Eigen::VectorXd::Zero(1));
  CHECK(std::abs(out.theta_hat(0) - 2.0) < 1e-4);
  CHECK(out.objective == doctest::Approx(2.0).epsilon(1e-6));
}

TEST_CASE("smoothed gradients match central differences") {
  std::mt19937_64 rng(15);
  std::normal_distribution<double> n;
  const Dataset ds = test::random_dataset(13, 12, 0, 3);
  const PseudoProblem pp = build_pseudo_problem(ds, {});
  const RowObjective rows(compact(pp));
  const PairwiseGehanObjective pairs(ds.log_time(), ds.event(), ds.features(), {});
  for (const SmoothObjective* obj : {static_cast<const SmoothObjective*>(&rows),
                                     static_cast<const SmoothObjective*>(&pairs)}) {
    for (double eps : {1e-4, 1e-2, 1.0}) {
      Eigen::VectorXd th(3);
      for (auto& v : th) v = n(rng);
      Eigen::VectorXd g;
      obj->smoothed(th, eps, &g);
      for (Eigen::Index k = 0; k < 3; ++k) {
        const double h = 1e-6 * std::max(1.0, std::abs(th(k)));
        Eigen::VectorXd up = th, dn = th;
        up(k) += h;
        dn(k) -= h;
        const double fd = (obj->smoothed(up, eps, nullptr) - obj->smoothed(dn, eps, nullptr)) / (2 * h);
        CHECK(std::abs(fd - g(k)) <= 1e-6 * std::max(1.0, std::abs(g(k))));
      }
    }
  }
}

TEST_CASE("row and pairwise objectives agree") {
  const Dataset ds = test::random_dataset(14, 10, 0, 2);
  const PseudoProblem pp = build_pseudo_problem(ds, {});
  const RowObjective rows(compact(pp));
  const PairwiseGehanObjective pairs(ds.log_time(), ds.event(), ds.features(), {});
  const Eigen::Vector2d th(0.3, -0.4);
  CHECK(rows.exact(th) + rows.offset() == doctest::Approx(pairs.exact(th) + pairs.offset()).epsilon(1e-12));
  CHECK(rows.exact(th) + rows.offset() == doctest::Approx(l1_objective(pp, th)).epsilon(1e-12));
}

TEST_CASE("smoothed objective is convex along random segments") {
  std::mt19937_64 rng(16);
  std::normal_distribution<double> n;
  const Dataset ds = test::random_dataset(17, 10, 0, 3);
  const PairwiseGehanObjective obj(ds.log_time(), ds.event(), ds.features(), {});
  for (int rep = 0; rep < 20; ++rep) {
    Eigen::VectorXd a(3), b(3);
    for (auto& v : a) v = n(rng);
    for (auto& v : b) v = n(rng);
    const double t = std::uniform_real_distribution<double>(0, 1)(rng);
    const double mid = obj.smoothed(t * a + (1 - t) * b, 0.05, nullptr);
    const double chord = t * obj.smoothed(a, 0.05, nullptr) + (1 - t) * obj.smoothed(b, 0.05, nullptr);
    CHECK(mid <= chord + 1e-9 * (1 + std::abs(chord)));
  }
}

TEST_CASE("continuation stages do not increase the exact objective much and agree with the exact solver") {
  for (int rep = 0; rep < 5; ++rep) {
    const Dataset ds = test::random_dataset(200 + static_cast<std::uint64_t>(rep), 15, 0, 3);
    const PseudoProblem pp = build_pseudo_problem(ds, {});
    const SolveOutcome ex = solve_exact_l1(pp);
    SolverConfig cfg;
    cfg.method = SolverMethod::smoothed;
    const SolveOutcome sm = solve_smoothed(pp, cfg, Eigen::VectorXd::Zero(3));
    const double le = gehan_loss(ds, {}, Eigen::VectorXd(0), ex.theta_hat);
    const double ls = gehan_loss(ds, {}, Eigen::VectorXd(0), sm.theta_hat);
    CHECK(ls == doctest::Approx(le).epsilon(1e-4));
    REQUIRE(!sm.stage_objectives.empty());
    const double first = sm.stage_objectives.front() - pp.zeta;
    const double last = sm.stage_objectives.back() - pp.zeta;
    CHECK(last <= first + 1e-6 * std::abs(first));
  }
}

TEST_CASE("smoothed solver produces exact zeros for large l1 weights") {
  const Dataset ds = test::random_dataset(21, 20, 0, 4);
  const double big = 1e6;
  std::vector<std::pair<Eigen::Index, double>> pen;
  for (Eigen::Index k = 0; k < 4; ++k) pen.emplace_back(k, big);
  const PairwiseGehanObjective obj(ds.log_time(), ds.event(), ds.features(), pen);
  SolverConfig cfg;
  cfg.method = SolverMethod::smoothed;
  const SolveOutcome out = solve_smoothed(obj, cfg, Eigen::VectorXd::Constant(4, 0.5));
  CHECK(out.theta_hat.isZero(0.0));
}

TEST_CASE("solver config validation and names") {
  SolverConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  cfg.continuation_factor = 1.5;
  CHECK_THROWS_AS(cfg.validate(), SpecError);
  CHECK(solver_method_from_string("smoothed") == SolverMethod::smoothed);
  CHECK(solver_method_from_string("exact") == SolverMethod::exact_l1);
  CHECK(to_string(SolverMethod::exact_l1) == "exact_l1");
  CHECK_THROWS_AS(solver_method_from_string("simplex"), SpecError);
}
