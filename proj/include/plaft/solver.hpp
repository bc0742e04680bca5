#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <string_view>
#include <vector>

#include "plaft/data.hpp"
#include "plaft/gehan.hpp"

namespace plaft {

enum class SolverMethod { exact_l1, smoothed };

std::string_view to_string(SolverMethod m);
SolverMethod solver_method_from_string(std::string_view s);

struct SolverConfig {
  SolverMethod method = SolverMethod::exact_l1;
  /// Initial smoothing width; <= 0 selects 0.1 * median |V_s|.
  double smoothing_eps = 0.0;
  double continuation_factor = 0.1;
  double eps_floor = 1e-8;
  int max_iterations = 5000;
  double grad_tol = 1e-6;
  int memory_pairs = 10;

  void validate() const;
};

struct SolveOutcome {
  Eigen::VectorXd theta_hat;
  /// sum_s |V_s - theta^T W_s| at theta_hat, never the smoothed value.
  double objective = 0.0;
  int iterations = 0;
  bool converged = false;
  SolverMethod method_used = SolverMethod::exact_l1;
  /// Exact objective at the end of each continuation stage (smoothed only).
  std::vector<double> stage_objectives;
};

/// Weighted L1 regression with an optional linear term,
///   sum_s w_s |V_s - W_s theta| + g^T theta + offset.
/// Empty `weights` means all ones; empty `linear` means zero.
struct L1Problem {
  Eigen::MatrixXd W;
  Eigen::VectorXd V;
  Eigen::VectorXd weights;
  Eigen::VectorXd linear;
  double offset = 0.0;

  Eigen::Index rows() const { return V.size(); }
  Eigen::Index cols() const { return W.cols(); }
  double objective(const Eigen::Ref<const Eigen::VectorXd>& theta) const;
};

/// Equivalent compact form of a pseudo-problem: self pairs dropped, the two
/// rows of an event-event pair merged with weight 2, all-zero rows folded
/// into the offset and the zeta row replaced by its linear term (exact while
/// its residual stays positive).
L1Problem compact(const PseudoProblem& pp);

/// Interior-point (primal-dual, predictor-corrector) solve of an L1Problem
/// followed by a vertex polish.
SolveOutcome solve_exact_l1(const L1Problem& problem);

/// Global minimizer of sum_s |V_s - theta^T W_s|. Throws CapabilityError
/// when W has more columns than rows - 1.
SolveOutcome solve_exact_l1(const PseudoProblem& pp);

/// rho_eps(u) = sqrt(u^2 + eps^2) - eps; satisfies rho <= |u| <= rho + eps.
template <class Scalar>
Scalar smooth_abs(Scalar u, Scalar eps) {
  using std::sqrt;
  return sqrt(u * u + eps * eps) - eps;
}

/// d rho_eps / du = u / sqrt(u^2 + eps^2).
template <class Scalar>
Scalar smooth_abs_derivative(Scalar u, Scalar eps) {
  using std::sqrt;
  return u / sqrt(u * u + eps * eps);
}

/// Objective interface for the smoothed solver. Values exclude the constant
/// offset() so that a large zeta never enters line-search arithmetic.
class SmoothObjective {
 public:
  virtual ~SmoothObjective() = default;
  virtual Eigen::Index dim() const = 0;
  /// Smoothed objective minus offset() and minus the l1_weights() terms;
  /// fills grad when non-null.
  virtual double smoothed(const Eigen::VectorXd& theta, double eps, Eigen::VectorXd* grad) const = 0;
  /// Per-coordinate weights w_k of terms w_k |theta_k| that the solver
  /// handles exactly (orthant-wise) instead of smoothing. Zero by default.
  virtual Eigen::VectorXd l1_weights() const { return Eigen::VectorXd::Zero(dim()); }
  /// Exact objective minus offset().
  virtual double exact(const Eigen::VectorXd& theta) const = 0;
  virtual double offset() const { return 0.0; }
  /// Mean of W_s W_s^T over the data rows, used for preconditioning.
  virtual Eigen::MatrixXd second_moments() const = 0;
  /// Root mean square of each column over the data rows (1 for empty
  /// columns).
  Eigen::VectorXd column_scales() const;
  /// median |V_s| over data rows.
  virtual double median_abs_response() const = 0;
};

/// Materialized rows. Rows with V_s = 0 and a single nonzero entry are
/// weighted absolute values of one coordinate and become l1_weights().
class RowObjective final : public SmoothObjective {
 public:
  explicit RowObjective(L1Problem problem);
  Eigen::VectorXd l1_weights() const override { return l1_; }
  Eigen::Index dim() const override { return problem_.cols(); }
  double smoothed(const Eigen::VectorXd& theta, double eps, Eigen::VectorXd* grad) const override;
  double exact(const Eigen::VectorXd& theta) const override;
  double offset() const override { return problem_.offset; }
  Eigen::MatrixXd second_moments() const override;
  double median_abs_response() const override;

 private:
  L1Problem problem_;
  /// Rows left after removing the single-coordinate ones.
  L1Problem data_;
  Eigen::VectorXd weights_;
  Eigen::VectorXd l1_;
};

/// Gehan pseudo-problem evaluated pair by pair without materializing W:
/// rows (i, j) for events i, the zeta row as a linear term, and one penalty
/// row per (column, weight) entry. O(n^2 + n p) per evaluation.
class PairwiseGehanObjective final : public SmoothObjective {
 public:
  PairwiseGehanObjective(Eigen::VectorXd log_time, EventVector event, Eigen::MatrixXd design,
                         std::vector<std::pair<Eigen::Index, double>> penalties,
                         ZetaPolicy zeta = {});
  Eigen::Index dim() const override { return design_.cols(); }
  double smoothed(const Eigen::VectorXd& theta, double eps, Eigen::VectorXd* grad) const override;
  double exact(const Eigen::VectorXd& theta) const override;
  double offset() const override { return zeta_; }
  Eigen::MatrixXd second_moments() const override;
  double median_abs_response() const override;
  Eigen::VectorXd l1_weights() const override;
  double zeta() const { return zeta_; }

 private:
  Eigen::VectorXd log_time_;
  EventVector event_;
  Eigen::MatrixXd design_;
  std::vector<std::pair<Eigen::Index, double>> penalties_;
  std::vector<Eigen::Index> event_index_;
  Eigen::VectorXd zeta_coef_;
  double zeta_ = 0.0;
};

/// Minimizes sum_s rho_eps(V_s - theta^T W_s) by L-BFGS while eps shrinks
/// from the initial width to eps_floor, warm-starting each stage. Terms
/// reported by l1_weights() stay exact and are handled orthant-wise
/// (OWL-QN), so penalized coefficients can reach exact zeros.
SolveOutcome solve_smoothed(const SmoothObjective& objective, const SolverConfig& config,
                            const Eigen::VectorXd& theta0);

SolveOutcome solve_smoothed(const PseudoProblem& pp, const SolverConfig& config,
                            const Eigen::VectorXd& theta0);

}  // namespace plaft
