#include "plaft/solver.hpp"

#include "plaft/error.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <functional>
#include <limits>
#include <optional>

namespace plaft {

// ---------------------------------------------------------------------------
// Objectives

RowObjective::RowObjective(L1Problem problem) : problem_(std::move(problem)) {
  const Eigen::Index p = problem_.cols();
  const Eigen::VectorXd w =
      problem_.weights.size() ? problem_.weights : Eigen::VectorXd::Ones(problem_.rows());
  if (problem_.linear.size() == 0) problem_.linear = Eigen::VectorXd::Zero(p);
  l1_ = Eigen::VectorXd::Zero(p);
  std::vector<Eigen::Index> keep;
  for (Eigen::Index s = 0; s < problem_.rows(); ++s) {
    Eigen::Index nonzero = 0, col = 0;
    for (Eigen::Index k = 0; k < p; ++k) {
      if (problem_.W(s, k) != 0.0) {
        ++nonzero;
        col = k;
      }
    }
    if (problem_.V(s) == 0.0 && nonzero == 1) {
      l1_(col) += w(s) * std::abs(problem_.W(s, col));
    } else {
      keep.push_back(s);
    }
  }
  const auto m = static_cast<Eigen::Index>(keep.size());
  data_.W.resize(m, p);
  data_.V.resize(m);
  weights_.resize(m);
  for (Eigen::Index r = 0; r < m; ++r) {
    const auto s = keep[static_cast<std::size_t>(r)];
    data_.W.row(r) = problem_.W.row(s);
    data_.V(r) = problem_.V(s);
    weights_(r) = w(s);
  }
  data_.linear = problem_.linear;
}

double RowObjective::smoothed(const Eigen::VectorXd& theta, double eps, Eigen::VectorXd* grad) const {
  const Eigen::VectorXd r = data_.V - data_.W * theta;
  double value = data_.linear.dot(theta);
  Eigen::VectorXd psi(r.size());
  for (Eigen::Index s = 0; s < r.size(); ++s) {
    value += weights_(s) * smooth_abs(r(s), eps);
    psi(s) = weights_(s) * smooth_abs_derivative(r(s), eps);
  }
  if (grad) *grad = data_.linear - data_.W.transpose() * psi;
  return value;
}

double RowObjective::exact(const Eigen::VectorXd& theta) const {
  return problem_.objective(theta) - problem_.offset;
}

Eigen::VectorXd SmoothObjective::column_scales() const {
  Eigen::VectorXd out = second_moments().diagonal().cwiseMax(0.0).cwiseSqrt();
  for (Eigen::Index k = 0; k < out.size(); ++k) {
    if (!(out(k) > 0.0)) out(k) = 1.0;
  }
  return out;
}

Eigen::MatrixXd RowObjective::second_moments() const {
  const double m = std::max<double>(1.0, static_cast<double>(data_.rows()));
  return (data_.W.transpose() * data_.W) / m;
}

namespace {
double median_of(std::vector<double>& v) {
  if (v.empty()) return 0.0;
  const auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
  std::nth_element(v.begin(), mid, v.end());
  return *mid;
}
}  // namespace

double RowObjective::median_abs_response() const {
  std::vector<double> a(data_.V.data(), data_.V.data() + data_.V.size());
  for (auto& x : a) x = std::abs(x);
  return median_of(a);
}

PairwiseGehanObjective::PairwiseGehanObjective(
    Eigen::VectorXd log_time, EventVector event, Eigen::MatrixXd design,
    std::vector<std::pair<Eigen::Index, double>> penalties, ZetaPolicy zeta)
    : log_time_(std::move(log_time)),
      event_(std::move(event)),
      design_(std::move(design)),
      penalties_(std::move(penalties)) {
  const Eigen::Index n = log_time_.size();
  if (event_.size() != n || design_.rows() != n) throw DimensionError("inputs disagree on n");
  for (Eigen::Index i = 0; i < n; ++i) {
    if (event_(i)) event_index_.push_back(i);
  }
  const auto events = static_cast<Eigen::Index>(event_index_.size());
  if (events < 2) {
    throw DegenerateDataError("need at least 2 observed events, found " + std::to_string(events));
  }
  for (const auto& [col, w] : penalties_) {
    if (col < 0 || col >= design_.cols()) throw DimensionError("penalty column out of range");
    if (!(w >= 0.0)) throw SpecError("penalty weights must be >= 0");
  }
  Eigen::VectorXd event_sum = Eigen::VectorXd::Zero(design_.cols());
  for (auto i : event_index_) event_sum += design_.row(i).transpose();
  zeta_coef_ = static_cast<double>(events) * design_.colwise().sum().transpose() -
               static_cast<double>(n) * event_sum;
  long double abs_v = 0.0L;
  for (auto i : event_index_) {
    for (Eigen::Index j = 0; j < n; ++j) abs_v += std::abs(log_time_(i) - log_time_(j));
  }
  zeta_ = zeta.multiplier * (abs_v > 0.0L ? static_cast<double>(abs_v) : 1.0);
}

double PairwiseGehanObjective::smoothed(const Eigen::VectorXd& theta, double eps,
                                        Eigen::VectorXd* grad) const {
  const Eigen::Index n = log_time_.size();
  const Eigen::VectorXd r = log_time_ - design_ * theta;
  Eigen::VectorXd a = Eigen::VectorXd::Zero(n);
  const double eps2 = eps * eps;
  double value = 0.0;
  for (auto i : event_index_) {
    const double ri = r(i);
    double acc = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) {
      const double u = ri - r(j);
      const double root = std::sqrt(u * u + eps2);
      value += root - eps;
      const double psi = u / root;
      acc += psi;
      a(j) -= psi;
    }
    a(i) += acc;
  }
  value -= zeta_coef_.dot(theta);
  if (grad) *grad = -design_.transpose() * a - zeta_coef_;
  return value;
}

Eigen::VectorXd PairwiseGehanObjective::l1_weights() const {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(design_.cols());
  for (const auto& [col, w] : penalties_) out(col) += w;
  return out;
}

double PairwiseGehanObjective::exact(const Eigen::VectorXd& theta) const {
  const Eigen::Index n = log_time_.size();
  const Eigen::VectorXd r = log_time_ - design_ * theta;
  long double value = 0.0L;
  for (auto i : event_index_) {
    for (Eigen::Index j = 0; j < n; ++j) value += std::abs(r(i) - r(j));
  }
  value -= zeta_coef_.dot(theta);
  for (const auto& [col, w] : penalties_) value += std::abs(w * theta(col));
  return static_cast<double>(value);
}

Eigen::MatrixXd PairwiseGehanObjective::second_moments() const {
  const Eigen::Index n = log_time_.size();
  const Eigen::Index p = design_.cols();
  const auto events = static_cast<double>(event_index_.size());
  Eigen::VectorXd se = Eigen::VectorXd::Zero(p);
  Eigen::MatrixXd me = Eigen::MatrixXd::Zero(p, p);
  for (auto i : event_index_) {
    se += design_.row(i).transpose();
    me.selfadjointView<Eigen::Lower>().rankUpdate(design_.row(i).transpose());
  }
  me = me.selfadjointView<Eigen::Lower>();
  const Eigen::VectorXd sa = design_.colwise().sum().transpose();
  const Eigen::MatrixXd ma = design_.transpose() * design_;
  // sum_{i in E} sum_j (d_i - d_j)(d_i - d_j)^T
  const Eigen::MatrixXd ss = static_cast<double>(n) * me - se * sa.transpose() - sa * se.transpose() + events * ma;
  return ss / (events * static_cast<double>(n));
}

double PairwiseGehanObjective::median_abs_response() const {
  std::vector<double> a;
  a.reserve(event_index_.size() * static_cast<std::size_t>(log_time_.size()));
  for (auto i : event_index_) {
    for (Eigen::Index j = 0; j < log_time_.size(); ++j) {
      a.push_back(std::abs(log_time_(i) - log_time_(j)));
    }
  }
  return median_of(a);
}

// ---------------------------------------------------------------------------
// L-BFGS with a strong-Wolfe line search

namespace {

using Gradient = std::function<double(const Eigen::VectorXd&, Eigen::VectorXd&)>;
/// Max-norm of a gradient given in optimizer coordinates, measured in theta.
using GradNorm = std::function<double(const Eigen::VectorXd&)>;

/// Change of variables theta -> xi used by the optimizer. With u = theta
/// scaled to unit second moments, split into unpenalized u_f and penalized
/// u_p:
///   xi_p = s * u_p,   xi_f = L^T (u_f + C u_p),
/// where L L^T is the correlation of the unpenalized block, C regresses the
/// penalized columns on it and s is the RMS of the regression residuals.
/// The optimizer then sees the unpenalized block whitened and the penalized
/// columns orthogonal to it, which undoes collinearity such as that of a
/// truncated power basis. Penalized coordinates are only rescaled, so the
/// l1 terms stay separable.
class Coordinates {
 public:
  Coordinates(const Eigen::MatrixXd& moments, const Eigen::VectorXd& l1) {
    const Eigen::Index p = moments.rows();
    scale_ = moments.diagonal().cwiseMax(0.0).cwiseSqrt();
    for (Eigen::Index k = 0; k < p; ++k) {
      if (!(scale_(k) > 0.0)) scale_(k) = 1.0;
      (l1(k) > 0.0 ? penalized_ : free_).push_back(k);
    }
    const auto f = static_cast<Eigen::Index>(free_.size());
    const auto q = static_cast<Eigen::Index>(penalized_.size());
    resid_scale_ = Eigen::VectorXd::Ones(q);
    if (f == 0) return;
    Eigen::MatrixXd corr(p, p);
    for (Eigen::Index i = 0; i < p; ++i) {
      for (Eigen::Index j = 0; j < p; ++j) corr(i, j) = moments(i, j) / (scale_(i) * scale_(j));
    }
    const Eigen::MatrixXd rff = take(corr, free_, free_) + 1e-10 * Eigen::MatrixXd::Identity(f, f);
    Eigen::LLT<Eigen::MatrixXd> llt(rff);
    if (llt.info() != Eigen::Success) return;
    factor_ = llt.matrixL();
    if (q == 0) return;
    const Eigen::MatrixXd rfp = take(corr, free_, penalized_);
    coupling_ = llt.solve(rfp);
    const Eigen::VectorXd schur =
        take(corr, penalized_, penalized_).diagonal() - (rfp.transpose() * coupling_).diagonal();
    for (Eigen::Index k = 0; k < q; ++k) {
      // Fall back to plain scaling when a penalized column is (nearly) in
      // the span of the unpenalized block.
      resid_scale_(k) = schur(k) > 1e-8 ? std::sqrt(schur(k)) : 1.0;
    }
  }

  Eigen::VectorXd to_xi(const Eigen::VectorXd& theta) const {
    const Eigen::VectorXd u = theta.cwiseProduct(scale_);
    Eigen::VectorXd xi = u;
    const Eigen::VectorXd up = get(u, penalized_);
    set(xi, penalized_, up.cwiseProduct(resid_scale_));
    if (factor_.size()) {
      Eigen::VectorXd uf = get(u, free_);
      if (coupling_.size()) uf += coupling_ * up;
      set(xi, free_, factor_.transpose() * uf);
    }
    return xi;
  }

  Eigen::VectorXd to_theta(const Eigen::VectorXd& xi) const {
    Eigen::VectorXd u = xi;
    const Eigen::VectorXd up = get(xi, penalized_).cwiseQuotient(resid_scale_);
    set(u, penalized_, up);
    if (factor_.size()) {
      Eigen::VectorXd uf = factor_.transpose().triangularView<Eigen::Upper>().solve(get(xi, free_));
      if (coupling_.size()) uf -= coupling_ * up;
      set(u, free_, uf);
    }
    return u.cwiseQuotient(scale_);
  }

  /// Gradient in xi from gradient in theta.
  Eigen::VectorXd grad_to_xi(const Eigen::VectorXd& g) const {
    const Eigen::VectorXd h = g.cwiseQuotient(scale_);
    Eigen::VectorXd v = h;
    if (factor_.size()) {
      const Eigen::VectorXd hf = get(h, free_);
      set(v, free_, factor_.triangularView<Eigen::Lower>().solve(hf));
      Eigen::VectorXd hp = get(h, penalized_);
      if (coupling_.size()) hp -= coupling_.transpose() * hf;
      set(v, penalized_, hp.cwiseQuotient(resid_scale_));
    } else {
      set(v, penalized_, get(h, penalized_).cwiseQuotient(resid_scale_));
    }
    return v;
  }

  Eigen::VectorXd grad_to_theta(const Eigen::VectorXd& g) const {
    Eigen::VectorXd h = g;
    Eigen::VectorXd hp = get(g, penalized_).cwiseProduct(resid_scale_);
    if (factor_.size()) {
      const Eigen::VectorXd hf = factor_ * get(g, free_);
      set(h, free_, hf);
      if (coupling_.size()) hp += coupling_.transpose() * hf;
    }
    set(h, penalized_, hp);
    return h.cwiseProduct(scale_);
  }

  /// l1 weights on theta expressed on xi (penalized coordinates are only
  /// rescaled).
  Eigen::VectorXd l1_to_xi(const Eigen::VectorXd& l1) const {
    Eigen::VectorXd w = l1.cwiseQuotient(scale_);
    set(w, penalized_, get(w, penalized_).cwiseQuotient(resid_scale_));
    return w;
  }

 private:
  using Index = std::vector<Eigen::Index>;

  static Eigen::MatrixXd take(const Eigen::MatrixXd& m, const Index& rows, const Index& cols) {
    Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols.size()));
    for (std::size_t a = 0; a < rows.size(); ++a) {
      for (std::size_t b = 0; b < cols.size(); ++b) {
        out(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) = m(rows[a], cols[b]);
      }
    }
    return out;
  }
  static Eigen::VectorXd get(const Eigen::VectorXd& v, const Index& idx) {
    Eigen::VectorXd out(static_cast<Eigen::Index>(idx.size()));
    for (std::size_t a = 0; a < idx.size(); ++a) out(static_cast<Eigen::Index>(a)) = v(idx[a]);
    return out;
  }
  static void set(Eigen::VectorXd& v, const Index& idx, const Eigen::VectorXd& part) {
    for (std::size_t a = 0; a < idx.size(); ++a) v(idx[a]) = part(static_cast<Eigen::Index>(a));
  }

  Eigen::VectorXd scale_;
  Index free_, penalized_;
  Eigen::MatrixXd factor_;
  Eigen::MatrixXd coupling_;
  Eigen::VectorXd resid_scale_;
};

struct Point {
  Eigen::VectorXd x;
  double f = 0.0;
  Eigen::VectorXd g;
};

class LineSearch {
 public:
  LineSearch(const Gradient& fg, const Point& start, const Eigen::VectorXd& dir)
      : fg_(fg), start_(start), dir_(dir), dphi0_(start.g.dot(dir)) {}

  /// Returns true with `out` set when a point satisfying sufficient
  /// decrease is found (strong Wolfe when possible).
  bool run(double alpha, Point& out, int& evals) {
    double a_prev = 0.0, f_prev = start_.f, d_prev = dphi0_;
    for (int i = 0; i < 25; ++i) {
      Point p = eval(alpha, evals);
      const double dphi = p.g.dot(dir_);
      if (p.f > start_.f + kC1 * alpha * dphi0_ || (i > 0 && p.f >= f_prev)) {
        return zoom(a_prev, f_prev, d_prev, alpha, p.f, dphi, out, evals);
      }
      if (std::abs(dphi) <= -kC2 * dphi0_) {
        out = std::move(p);
        return true;
      }
      if (dphi >= 0.0) return zoom(alpha, p.f, dphi, a_prev, f_prev, d_prev, out, evals, &p);
      remember(p);
      a_prev = alpha;
      f_prev = p.f;
      d_prev = dphi;
      alpha *= 2.0;
    }
    return take_best(out);
  }

 private:
  static constexpr double kC1 = 1e-4;
  static constexpr double kC2 = 0.9;

  Point eval(double alpha, int& evals) {
    Point p;
    p.x = start_.x + alpha * dir_;
    p.f = fg_(p.x, p.g);
    ++evals;
    return p;
  }

  void remember(const Point& p) {
    if (p.f < start_.f && (!best_ || p.f < best_->f)) best_ = p;
  }

  bool take_best(Point& out) {
    if (best_ && best_->f < start_.f) {
      out = *best_;
      return true;
    }
    return false;
  }

  bool zoom(double lo, double f_lo, double d_lo, double hi, double f_hi, double d_hi, Point& out,
            int& evals, const Point* lo_point = nullptr) {
    if (lo_point) remember(*lo_point);
    for (int i = 0; i < 30; ++i) {
      const double width = hi - lo;
      if (std::abs(width) < 1e-14 * std::max(1.0, std::abs(lo))) break;
      // Cubic interpolation, safeguarded into the middle 80% of the bracket.
      double a;
      const double d1 = d_lo + d_hi - 3.0 * (f_lo - f_hi) / (lo - hi);
      const double disc = d1 * d1 - d_lo * d_hi;
      if (disc >= 0.0) {
        const double d2 = std::copysign(std::sqrt(disc), hi - lo);
        a = hi - (hi - lo) * (d_hi + d2 - d1) / (d_hi - d_lo + 2.0 * d2);
      } else {
        a = 0.5 * (lo + hi);
      }
      const double left = std::min(lo, hi) + 0.1 * std::abs(width);
      const double right = std::max(lo, hi) - 0.1 * std::abs(width);
      if (!std::isfinite(a) || a < left || a > right) a = 0.5 * (lo + hi);

      Point p = eval(a, evals);
      const double dphi = p.g.dot(dir_);
      if (p.f > start_.f + kC1 * a * dphi0_ || p.f >= f_lo) {
        hi = a;
        f_hi = p.f;
        d_hi = dphi;
      } else {
        if (std::abs(dphi) <= -kC2 * dphi0_) {
          out = std::move(p);
          return true;
        }
        remember(p);
        if (dphi * (hi - lo) >= 0.0) {
          hi = lo;
          f_hi = f_lo;
          d_hi = d_lo;
        }
        lo = a;
        f_lo = p.f;
        d_lo = dphi;
      }
    }
    return take_best(out);
  }

  const Gradient& fg_;
  const Point& start_;
  const Eigen::VectorXd& dir_;
  double dphi0_;
  std::optional<Point> best_;
};

struct StageResult {
  int iterations = 0;
  double grad_norm = 0.0;
};

/// Minimizes fg from `current` (updated in place) until the gradient
/// max-norm, measured through `to_theta_grad`, drops below tol or progress
/// stalls.
StageResult lbfgs(const Gradient& fg, Point& current, const GradNorm& grad_norm, double tol,
                  int max_iter, int memory) {
  struct Pair {
    Eigen::VectorXd s, y;
    double rho;
  };
  std::deque<Pair> history;
  StageResult res;
  int stalls = 0;
  while (res.iterations < max_iter) {
    res.grad_norm = grad_norm(current.g);
    if (res.grad_norm <= tol) break;

    // Two-loop recursion.
    Eigen::VectorXd d = -current.g;
    std::vector<double> alpha(history.size());
    for (std::size_t k = history.size(); k-- > 0;) {
      alpha[k] = history[k].rho * history[k].s.dot(d);
      d -= alpha[k] * history[k].y;
    }
    if (!history.empty()) {
      const auto& last = history.back();
      d *= last.s.dot(last.y) / last.y.squaredNorm();
    } else {
      d /= std::max(1.0, current.g.cwiseAbs().maxCoeff());
    }
    for (std::size_t k = 0; k < history.size(); ++k) {
      const double beta = history[k].rho * history[k].y.dot(d);
      d += (alpha[k] - beta) * history[k].s;
    }
    if (!(current.g.dot(d) < 0.0)) {
      history.clear();
      d = -current.g / std::max(1.0, current.g.cwiseAbs().maxCoeff());
    }

    Point next;
    int evals = 0;
    LineSearch search(fg, current, d);
    if (!search.run(1.0, next, evals)) {
      if (history.empty()) break;
      history.clear();
      ++res.iterations;
      continue;
    }
    ++res.iterations;
    const double decrease = current.f - next.f;
    Pair pr{next.x - current.x, next.g - current.g, 0.0};
    const double sy = pr.s.dot(pr.y);
    if (sy > 1e-14 * pr.s.norm() * pr.y.norm()) {
      pr.rho = 1.0 / sy;
      history.push_back(std::move(pr));
      if (static_cast<int>(history.size()) > memory) history.pop_front();
    }
    current = std::move(next);
    if (decrease <= 1e-15 * std::max(1.0, std::abs(current.f))) {
      if (++stalls >= 3) break;
    } else {
      stalls = 0;
    }
  }
  res.grad_norm = grad_norm(current.g);
  return res;
}

/// Pseudo-gradient of f + sum_k w_k |x_k|: the minimum-norm element of the
/// subdifferential.
Eigen::VectorXd pseudo_gradient(const Eigen::VectorXd& x, const Eigen::VectorXd& g,
                                const Eigen::VectorXd& w) {
  Eigen::VectorXd pg = g;
  for (Eigen::Index k = 0; k < x.size(); ++k) {
    if (w(k) == 0.0) continue;
    if (x(k) > 0.0) {
      pg(k) += w(k);
    } else if (x(k) < 0.0) {
      pg(k) -= w(k);
    } else if (g(k) + w(k) < 0.0) {
      pg(k) += w(k);
    } else if (g(k) - w(k) > 0.0) {
      pg(k) -= w(k);
    } else {
      pg(k) = 0.0;
    }
  }
  return pg;
}

/// Orthant-wise L-BFGS (OWL-QN) for f + sum_k w_k |x_k| with smooth f given
/// by fg. Steps never cross an orthant boundary of the penalized
/// coordinates; crossing coordinates are set to zero, which is where exact
/// zeros come from.
StageResult owlqn(const Gradient& fg, const Eigen::VectorXd& w, Point& current,
                  const GradNorm& grad_norm, double tol, int max_iter, int memory) {
  struct Pair {
    Eigen::VectorXd s, y;
    double rho;
  };
  std::deque<Pair> history;
  StageResult res;
  auto total = [&](const Point& p) { return p.f + w.dot(p.x.cwiseAbs()); };
  int stalls = 0;
  while (res.iterations < max_iter) {
    const Eigen::VectorXd pg = pseudo_gradient(current.x, current.g, w);
    res.grad_norm = grad_norm(pg);
    if (res.grad_norm <= tol) break;

    Eigen::VectorXd d = -pg;
    std::vector<double> alpha(history.size());
    for (std::size_t k = history.size(); k-- > 0;) {
      alpha[k] = history[k].rho * history[k].s.dot(d);
      d -= alpha[k] * history[k].y;
    }
    if (!history.empty()) {
      const auto& last = history.back();
      d *= last.s.dot(last.y) / last.y.squaredNorm();
    } else {
      d /= std::max(1.0, pg.cwiseAbs().maxCoeff());
    }
    for (std::size_t k = 0; k < history.size(); ++k) {
      const double beta = history[k].rho * history[k].y.dot(d);
      d += (alpha[k] - beta) * history[k].s;
    }
    // Keep only components that agree in sign with the steepest descent.
    for (Eigen::Index k = 0; k < d.size(); ++k) {
      if (d(k) * pg(k) >= 0.0) d(k) = 0.0;
    }
    if (!(pg.dot(d) < 0.0)) {
      history.clear();
      d = -pg / std::max(1.0, pg.cwiseAbs().maxCoeff());
    }

    Eigen::VectorXd orthant(current.x.size());
    for (Eigen::Index k = 0; k < orthant.size(); ++k) {
      const double v = current.x(k) != 0.0 ? current.x(k) : -pg(k);
      orthant(k) = v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0);
    }

    const double f0 = total(current);
    Point next;
    bool accepted = false;
    double step = 1.0;
    for (int i = 0; i < 50; ++i, step *= 0.5) {
      next.x = current.x + step * d;
      for (Eigen::Index k = 0; k < next.x.size(); ++k) {
        if (w(k) > 0.0 && next.x(k) * orthant(k) <= 0.0) next.x(k) = 0.0;
      }
      next.f = fg(next.x, next.g);
      if (total(next) <= f0 + 1e-4 * pg.dot(next.x - current.x)) {
        accepted = true;
        break;
      }
    }
    ++res.iterations;
    if (!accepted) {
      if (history.empty()) break;
      history.clear();
      continue;
    }
    const double decrease = f0 - total(next);
    Pair pr{next.x - current.x, next.g - current.g, 0.0};
    const double sy = pr.s.dot(pr.y);
    if (sy > 1e-14 * pr.s.norm() * pr.y.norm()) {
      pr.rho = 1.0 / sy;
      history.push_back(std::move(pr));
      if (static_cast<int>(history.size()) > memory) history.pop_front();
    }
    current = std::move(next);
    if (decrease <= 1e-15 * std::max(1.0, std::abs(f0))) {
      if (++stalls >= 3) break;
    } else {
      stalls = 0;
    }
  }
  res.grad_norm = grad_norm(pseudo_gradient(current.x, current.g, w));
  return res;
}

}  // namespace

SolveOutcome solve_smoothed(const SmoothObjective& objective, const SolverConfig& config,
                            const Eigen::VectorXd& theta0) {
  config.validate();
  const Eigen::Index p = objective.dim();
  if (theta0.size() != p) throw DimensionError("theta0 length differs from problem width");

  SolveOutcome out;
  out.method_used = SolverMethod::smoothed;
  if (p == 0) {
    out.theta_hat = theta0;
    out.objective = objective.exact(theta0) + objective.offset();
    out.converged = true;
    return out;
  }

  const Eigen::VectorXd l1_theta = objective.l1_weights();
  const Coordinates coords(objective.second_moments(), l1_theta);
  const Eigen::VectorXd l1 = coords.l1_to_xi(l1_theta);
  const bool orthant_wise = (l1.array() > 0.0).any();
  double eps = config.smoothing_eps > 0.0 ? config.smoothing_eps
                                          : 0.1 * objective.median_abs_response();
  if (!(eps > config.eps_floor)) eps = config.eps_floor;

  double stage_eps = eps;
  Gradient fg = [&](const Eigen::VectorXd& xi, Eigen::VectorXd& g) {
    const double f = objective.smoothed(coords.to_theta(xi), stage_eps, &g);
    g = coords.grad_to_xi(g);
    return f;
  };
  const GradNorm grad_norm = [&](const Eigen::VectorXd& g) {
    return coords.grad_to_theta(g).cwiseAbs().maxCoeff();
  };

  Point current;
  current.x = coords.to_xi(theta0);
  current.f = fg(current.x, current.g);
  const double g_ref = grad_norm(pseudo_gradient(current.x, current.g, l1));

  Eigen::VectorXd best_theta = theta0;
  double best_exact = objective.exact(theta0);
  int budget = config.max_iterations;
  for (;;) {
    const bool final_stage = stage_eps <= config.eps_floor * (1.0 + 1e-12);
    const int stages_left =
        final_stage ? 1
                    : 1 + static_cast<int>(std::ceil(std::log(config.eps_floor / stage_eps) /
                                                     std::log(config.continuation_factor)));
    const double tol = final_stage ? config.grad_tol
                                   : std::max(config.grad_tol, 1e-3 * g_ref * stage_eps / eps);
    const int stage_budget = final_stage ? budget : std::max(20, budget / std::max(1, stages_left));
    current.f = fg(current.x, current.g);
    const int stage_iter = std::min(stage_budget, budget);
    const StageResult sr =
        orthant_wise ? owlqn(fg, l1, current, grad_norm, tol, stage_iter, config.memory_pairs)
                     : lbfgs(fg, current, grad_norm, tol, stage_iter, config.memory_pairs);
    budget -= sr.iterations;
    out.iterations += sr.iterations;

    const Eigen::VectorXd theta = coords.to_theta(current.x);
    const double exact = objective.exact(theta);
    out.stage_objectives.push_back(exact + objective.offset());
    if (exact <= best_exact) {
      best_exact = exact;
      best_theta = theta;
    }
    if (final_stage) {
      out.converged = sr.grad_norm < config.grad_tol;
      break;
    }
    if (budget <= 0) break;
    stage_eps = std::max(stage_eps * config.continuation_factor, config.eps_floor);
  }
  out.theta_hat = best_theta;
  out.objective = best_exact + objective.offset();
  return out;
}

SolveOutcome solve_smoothed(const PseudoProblem& pp, const SolverConfig& config,
                            const Eigen::VectorXd& theta0) {
  const RowObjective objective(compact(pp));
  SolveOutcome out = solve_smoothed(objective, config, theta0);
  out.objective = l1_objective(pp, out.theta_hat);
  return out;
}

}  // namespace plaft
