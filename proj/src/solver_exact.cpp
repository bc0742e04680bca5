#include "plaft/solver.hpp"

#include "plaft/error.hpp"

#include <algorithm>
#include <limits>
#include <numeric>

namespace plaft {

std::string_view to_string(SolverMethod m) {
  return m == SolverMethod::exact_l1 ? "exact_l1" : "smoothed";
}

SolverMethod solver_method_from_string(std::string_view s) {
  if (s == "exact_l1" || s == "exact") return SolverMethod::exact_l1;
  if (s == "smoothed") return SolverMethod::smoothed;
  throw SpecError("unknown solver method '" + std::string(s) + "'");
}

void SolverConfig::validate() const {
  if (!std::isfinite(smoothing_eps)) throw SpecError("smoothing_eps must be finite");
  if (!(continuation_factor > 0.0 && continuation_factor < 1.0)) {
    throw SpecError("continuation_factor must lie in (0, 1)");
  }
  if (!(eps_floor > 0.0)) throw SpecError("eps_floor must be > 0");
  if (smoothing_eps > 0.0 && eps_floor > smoothing_eps) {
    throw SpecError("eps_floor must not exceed smoothing_eps");
  }
  if (max_iterations < 1) throw SpecError("max_iterations must be >= 1");
  if (!(grad_tol > 0.0)) throw SpecError("grad_tol must be > 0");
  if (memory_pairs < 1) throw SpecError("memory_pairs must be >= 1");
}

double L1Problem::objective(const Eigen::Ref<const Eigen::VectorXd>& theta) const {
  if (theta.size() != cols()) throw DimensionError("theta length differs from problem width");
  long double total = offset;
  for (Eigen::Index s = 0; s < rows(); ++s) {
    const long double r = static_cast<long double>(V(s)) - W.row(s).dot(theta);
    total += (weights.size() ? weights(s) : 1.0) * std::fabs(r);
  }
  if (linear.size()) total += linear.dot(theta);
  return static_cast<double>(total);
}

L1Problem compact(const PseudoProblem& pp) {
  const Eigen::Index p = pp.cols();
  std::vector<Eigen::Index> keep;
  std::vector<double> weight;
  keep.reserve(static_cast<std::size_t>(pp.rows()));
  double offset = 0.0;
  for (Eigen::Index s = 0; s < pp.rows(); ++s) {
    if (s == pp.zeta_row()) continue;
    double w = 1.0;
    if (s < pp.zeta_row()) {
      const auto [i, j] = pp.pairs[static_cast<std::size_t>(s)];
      if (i == j) continue;
      if (pp.partner_event[static_cast<std::size_t>(s)]) {
        if (i > j) continue;
        w = 2.0;
      }
    }
    if (pp.W.row(s).isZero(0.0)) {
      offset += w * std::abs(pp.V(s));
      continue;
    }
    keep.push_back(s);
    // Penalty rows (zero response) are rescaled to unit design entries so a
    // huge penalty shows up as a row weight, not as a badly scaled column.
    if (s > pp.zeta_row() && pp.V(s) == 0.0) w *= pp.W.row(s).cwiseAbs().maxCoeff();
    weight.push_back(w);
  }
  L1Problem out;
  const auto m = static_cast<Eigen::Index>(keep.size());
  out.W.resize(m, p);
  out.V.resize(m);
  out.weights.resize(m);
  for (Eigen::Index k = 0; k < m; ++k) {
    const auto s = keep[static_cast<std::size_t>(k)];
    out.W.row(k) = pp.W.row(s);
    if (s > pp.zeta_row() && pp.V(s) == 0.0) out.W.row(k) /= pp.W.row(s).cwiseAbs().maxCoeff();
    out.V(k) = pp.V(keep[static_cast<std::size_t>(k)]);
    out.weights(k) = weight[static_cast<std::size_t>(k)];
  }
  out.linear = -pp.W.row(pp.zeta_row()).transpose();
  out.offset = offset + pp.zeta;
  return out;
}

namespace {

double max_step(const Eigen::VectorXd& v, const Eigen::VectorXd& dv) {
  double alpha = 1.0;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (dv(i) < 0.0) alpha = std::min(alpha, -v(i) / dv(i));
  }
  return alpha;
}

/// Move to a basic solution: p rows with zero residual among the nearly
/// tight ones. Keeps the interior-point answer unless the vertex is at
/// least as good.
Eigen::VectorXd polish_vertex(const L1Problem& prob, const Eigen::VectorXd& theta) {
  const Eigen::Index p = prob.cols();
  const Eigen::VectorXd r = prob.V - prob.W * theta;
  const double scale = 1.0 + prob.V.cwiseAbs().maxCoeff();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(prob.rows()));
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](Eigen::Index a, Eigen::Index b) { return std::abs(r(a)) < std::abs(r(b)); });
  std::vector<Eigen::Index> tight;
  for (auto s : order) {
    if (std::abs(r(s)) > 1e-6 * scale) break;
    tight.push_back(s);
  }
  if (static_cast<Eigen::Index>(tight.size()) < p) return theta;

  Eigen::MatrixXd candidates(p, static_cast<Eigen::Index>(tight.size()));
  for (Eigen::Index k = 0; k < candidates.cols(); ++k) {
    const auto s = tight[static_cast<std::size_t>(k)];
    candidates.col(k) = prob.W.row(s).transpose() / std::max(prob.W.row(s).norm(), 1e-300);
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(candidates);
  qr.setThreshold(1e-10);
  if (qr.rank() < p) return theta;

  Eigen::MatrixXd basis(p, p);
  Eigen::VectorXd rhs(p);
  for (Eigen::Index k = 0; k < p; ++k) {
    const auto s = tight[static_cast<std::size_t>(qr.colsPermutation().indices()(k))];
    basis.row(k) = prob.W.row(s);
    rhs(k) = prob.V(s);
  }
  Eigen::FullPivLU<Eigen::MatrixXd> lu(basis);
  if (!lu.isInvertible()) return theta;
  const Eigen::VectorXd vertex = lu.solve(rhs);
  if (!vertex.allFinite()) return theta;
  const double f_ipm = prob.objective(theta);
  const double f_vertex = prob.objective(vertex);
  return f_vertex <= f_ipm + 1e-10 * (1.0 + std::abs(f_ipm)) ? vertex : theta;
}

/// Columns whose own absolute-value rows (V_s = 0, single nonzero entry)
/// outweigh everything else the column touches: the rest of the objective
/// is G_k-Lipschitz in theta_k, so theta_k = 0 is optimal when the weight
/// reaches G_k.
std::vector<bool> dominated_columns(const L1Problem& prob, const Eigen::VectorXd& u) {
  const Eigen::Index p = prob.cols();
  Eigen::VectorXd own = Eigen::VectorXd::Zero(p);
  Eigen::VectorXd rest = prob.linear.size() ? prob.linear.cwiseAbs().eval() : Eigen::VectorXd::Zero(p);
  for (Eigen::Index s = 0; s < prob.rows(); ++s) {
    Eigen::Index nonzero = 0, col = 0;
    for (Eigen::Index k = 0; k < p; ++k) {
      if (prob.W(s, k) != 0.0) {
        ++nonzero;
        col = k;
      }
    }
    if (prob.V(s) == 0.0 && nonzero == 1) {
      own(col) += u(s) * std::abs(prob.W(s, col));
    } else {
      rest += u(s) * prob.W.row(s).cwiseAbs().transpose();
    }
  }
  std::vector<bool> out(static_cast<std::size_t>(p));
  for (Eigen::Index k = 0; k < p; ++k) out[static_cast<std::size_t>(k)] = own(k) > 0.0 && own(k) >= rest(k);
  return out;
}

}  // namespace

SolveOutcome solve_exact_l1(const L1Problem& prob) {
  const Eigen::Index S = prob.rows();
  const Eigen::Index p = prob.cols();
  SolveOutcome out;
  out.method_used = SolverMethod::exact_l1;
  if (p == 0) {
    out.theta_hat = Eigen::VectorXd(0);
    out.objective = prob.objective(out.theta_hat);
    out.converged = true;
    return out;
  }
  if (S == 0) throw CapabilityError("L1 problem has no informative rows");

  const Eigen::VectorXd u = prob.weights.size() ? prob.weights : Eigen::VectorXd::Ones(S);
  const Eigen::VectorXd g = prob.linear.size() ? prob.linear : Eigen::VectorXd::Zero(p);

  // Huge penalty weights wreck the interior-point scaling; columns they pin
  // at zero are removed before solving.
  const std::vector<bool> pinned = dominated_columns(prob, u);
  if (std::find(pinned.begin(), pinned.end(), true) != pinned.end()) {
    std::vector<Eigen::Index> free_cols, rows;
    for (Eigen::Index k = 0; k < p; ++k) {
      if (!pinned[static_cast<std::size_t>(k)]) free_cols.push_back(k);
    }
    L1Problem reduced;
    reduced.offset = prob.offset;
    for (Eigen::Index r = 0; r < S; ++r) {
      bool touches_free = false;
      for (auto k : free_cols) touches_free = touches_free || prob.W(r, k) != 0.0;
      if (touches_free) {
        rows.push_back(r);
      } else {
        reduced.offset += u(r) * std::abs(prob.V(r));
      }
    }
    const auto m = static_cast<Eigen::Index>(rows.size());
    const auto q = static_cast<Eigen::Index>(free_cols.size());
    reduced.W.resize(m, q);
    reduced.V.resize(m);
    reduced.weights.resize(m);
    reduced.linear.resize(q);
    for (Eigen::Index j = 0; j < q; ++j) reduced.linear(j) = g(free_cols[static_cast<std::size_t>(j)]);
    for (Eigen::Index r = 0; r < m; ++r) {
      const auto src = rows[static_cast<std::size_t>(r)];
      for (Eigen::Index j = 0; j < q; ++j) reduced.W(r, j) = prob.W(src, free_cols[static_cast<std::size_t>(j)]);
      reduced.V(r) = prob.V(src);
      reduced.weights(r) = u(src);
    }
    SolveOutcome sub = q > 0 && m == 0 ? SolveOutcome{} : solve_exact_l1(reduced);
    if (q > 0 && m == 0) {
      // Only the linear term is left; it is bounded below only at zero.
      if (!reduced.linear.isZero(0.0)) throw CapabilityError("L1 problem is unbounded below");
      sub.theta_hat = Eigen::VectorXd::Zero(q);
      sub.converged = true;
    }
    out = sub;
    out.theta_hat = Eigen::VectorXd::Zero(p);
    for (Eigen::Index j = 0; j < q; ++j) out.theta_hat(free_cols[static_cast<std::size_t>(j)]) = sub.theta_hat(j);
    out.objective = prob.objective(out.theta_hat);
    return out;
  }

  // Column scaling theta_tilde = scale .* theta.
  Eigen::VectorXd scale = prob.W.cwiseAbs().colwise().maxCoeff().transpose();
  for (Eigen::Index k = 0; k < p; ++k) {
    if (!(scale(k) > 0.0)) scale(k) = 1.0;
  }
  const Eigen::MatrixXd Wt = prob.W * scale.cwiseInverse().asDiagonal();
  const Eigen::VectorXd gt = g.cwiseQuotient(scale);

  // Dual LP in bounded form: min c^T x, Wt^T x = b, 0 <= x <= u, whose
  // multipliers y give theta_tilde = -y.
  const Eigen::VectorXd c = -prob.V;
  const Eigen::VectorXd b = 0.5 * (gt + Wt.transpose() * u);

  Eigen::VectorXd x = 0.5 * u;
  Eigen::VectorXd s = 0.5 * u;
  Eigen::MatrixXd H = Wt.transpose() * u.asDiagonal() * Wt;
  H.diagonal().array() += 1e-12 * std::max(1.0, H.diagonal().maxCoeff());
  Eigen::VectorXd y = -H.ldlt().solve(Wt.transpose() * u.asDiagonal() * prob.V);
  const Eigen::VectorXd r0 = c - Wt * y;  // = z - v
  const double xi = std::max(1e-6, r0.cwiseAbs().mean());
  Eigen::VectorXd z = r0.cwiseMax(0.0).array() + xi;
  Eigen::VectorXd v = (-r0).cwiseMax(0.0).array() + xi;

  const double b_norm = 1.0 + b.cwiseAbs().maxCoeff();
  const double c_norm = 1.0 + c.cwiseAbs().maxCoeff();
  const double two_s = 2.0 * static_cast<double>(S);
  constexpr int kMaxIter = 200;
  Eigen::LDLT<Eigen::MatrixXd> ldlt;
  Eigen::VectorXd theta_w(S);

  // Near the optimum the normal equations lose accuracy, so the iterate
  // with the best combined residual is kept rather than the last one.
  Eigen::VectorXd best_y = y;
  double best_merit = std::numeric_limits<double>::infinity();
  int iter = 0;
  for (; iter < kMaxIter; ++iter) {
    const Eigen::VectorXd rb = b - Wt.transpose() * x;
    const Eigen::VectorXd rc = c - Wt * y - z + v;
    const double mu = (x.dot(z) + s.dot(v)) / two_s;
    const double pobj = c.dot(x);
    const double merit = std::max({rb.cwiseAbs().maxCoeff() / b_norm, rc.cwiseAbs().maxCoeff() / c_norm,
                                   mu * two_s / (1.0 + std::abs(pobj))});
    if (!std::isfinite(merit)) break;
    if (merit < best_merit) {
      best_merit = merit;
      best_y = y;
    }
    if (merit <= 1e-10) break;
    // Complementarity exhausted: further steps only amplify rounding.
    if (mu * two_s <= 1e-15 * (1.0 + std::abs(pobj))) break;

    theta_w = ((z.array() / x.array()) + (v.array() / s.array())).inverse().matrix();
    H.noalias() = Wt.transpose() * theta_w.asDiagonal() * Wt;
    H.diagonal().array() += 1e-14 * std::max(1.0, H.diagonal().cwiseAbs().maxCoeff());
    ldlt.compute(H);

    auto direction = [&](const Eigen::VectorXd& rxz, const Eigen::VectorXd& rsv, Eigen::VectorXd& dx,
                         Eigen::VectorXd& dy, Eigen::VectorXd& dz, Eigen::VectorXd& ds,
                         Eigen::VectorXd& dv) {
      const Eigen::VectorXd qv =
          rc - (rxz.array() / x.array()).matrix() + (rsv.array() / s.array()).matrix();
      dy = ldlt.solve(rb + Wt.transpose() * theta_w.cwiseProduct(qv));
      dx = theta_w.cwiseProduct(Wt * dy - qv);
      dz = ((rxz - z.cwiseProduct(dx)).array() / x.array()).matrix();
      ds = -dx;
      dv = ((rsv - v.cwiseProduct(ds)).array() / s.array()).matrix();
    };

    Eigen::VectorXd dx, dy, dz, ds, dv;
    direction(-x.cwiseProduct(z), -s.cwiseProduct(v), dx, dy, dz, ds, dv);
    double ap = std::min(max_step(x, dx), max_step(s, ds));
    double ad = std::min(max_step(z, dz), max_step(v, dv));
    const double mu_aff = ((x + ap * dx).dot(z + ad * dz) + (s + ap * ds).dot(v + ad * dv)) / two_s;
    const double sigma = std::pow(std::clamp(mu_aff / mu, 0.0, 1.0), 3);

    const Eigen::VectorXd rxz =
        (sigma * mu - x.array() * z.array() - dx.array() * dz.array()).matrix();
    const Eigen::VectorXd rsv =
        (sigma * mu - s.array() * v.array() - ds.array() * dv.array()).matrix();
    direction(rxz, rsv, dx, dy, dz, ds, dv);
    ap = std::min(1.0, 0.99995 * std::min(max_step(x, dx), max_step(s, ds)));
    ad = std::min(1.0, 0.99995 * std::min(max_step(z, dz), max_step(v, dv)));
    x += ap * dx;
    s += ap * ds;
    y += ad * dy;
    z += ad * dz;
    v += ad * dv;
    if (ap < 1e-10 && ad < 1e-10) break;
  }

  out.converged = best_merit <= 1e-8;
  Eigen::VectorXd theta = (-best_y).cwiseQuotient(scale);
  theta = polish_vertex(prob, theta);
  out.theta_hat = theta;
  out.objective = prob.objective(theta);
  out.iterations = iter;
  return out;
}

SolveOutcome solve_exact_l1(const PseudoProblem& pp) {
  if (pp.cols() > pp.rows() - 1) {
    throw CapabilityError("exact L1 solver needs fewer columns (" + std::to_string(pp.cols()) +
                          ") than rows - 1 (" + std::to_string(pp.rows() - 1) +
                          "); use the smoothed solver");
  }
  const L1Problem problem = compact(pp);
  SolveOutcome out = solve_exact_l1(problem);
  const double zeta_residual = pp.zeta - pp.W.row(pp.zeta_row()).dot(out.theta_hat);
  if (!(zeta_residual > 0.0)) {
    throw Error("zeta row residual is not positive at the solution; increase the zeta multiplier");
  }
  out.objective = l1_objective(pp, out.theta_hat);
  return out;
}

}  // namespace plaft
