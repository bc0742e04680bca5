#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <utility>
#include <vector>

#include "plaft/data.hpp"
#include "plaft/splines.hpp"

namespace plaft {

/// Column layout of the stacked design [B_1(x_1) | ... | B_q(x_q) | linear].
struct DesignLayout {
  std::vector<Eigen::Index> block_offsets;
  std::vector<Eigen::Index> block_sizes;
  std::vector<int> block_degrees;
  Eigen::Index spline_cols = 0;
  Eigen::Index linear_cols = 0;

  static DesignLayout make(const AdditiveBasisSpec& basis, Eigen::Index linear_cols);

  Eigen::Index cols() const { return spline_cols + linear_cols; }
  /// Columns of the truncated (x - k)_+^p terms, all blocks.
  std::vector<Eigen::Index> knot_columns() const;
  std::vector<Eigen::Index> polynomial_columns() const;
};

/// Rows D_i = (B_1(X_i1), ..., B_q(X_iq), L_i) for every subject.
Eigen::MatrixXd design_matrix(const AdditiveBasisSpec& basis,
                              const Eigen::Ref<const Eigen::MatrixXd>& nonlinear_x,
                              const Eigen::Ref<const Eigen::MatrixXd>& linear);

/// Gehan loss n^-2 sum_i sum_j delta_i (e_i - e_j)_-, evaluated from
/// residuals e by the O(n^2) double loop.
double gehan_loss(const Eigen::Ref<const Eigen::VectorXd>& residuals, const EventVector& event);

/// Gehan loss of e = T - D theta.
double gehan_loss(const Eigen::Ref<const Eigen::VectorXd>& log_time, const EventVector& event,
                  const Eigen::Ref<const Eigen::MatrixXd>& design,
                  const Eigen::Ref<const Eigen::VectorXd>& theta);

/// Dataset form: basis[j] applies to clinical column j; vartheta applies to
/// the remaining clinical columns followed by the features.
double gehan_loss(const Dataset& ds, const AdditiveBasisSpec& basis,
                  const Eigen::Ref<const Eigen::VectorXd>& beta,
                  const Eigen::Ref<const Eigen::VectorXd>& vartheta);

/// The large-constant row uses zeta = multiplier * sum_s |V_s| over the pair
/// rows (multiplier alone when that sum is zero).
struct ZetaPolicy {
  double multiplier = 1e6;
};

inline constexpr std::size_t kDefaultMemoryCap = std::size_t{2} << 30;

/// L1 regression  min_theta sum_s |V_s - W_s theta|  equivalent to
/// minimizing the Gehan loss.
///
/// Rows 0..S-2 are the pairs (i, j) with delta_i = 1 and every j, in
/// lexicographic order; row S-1 is the zeta row; any rows after that are
/// penalty augmentation rows.
struct PseudoProblem {
  Eigen::VectorXd V;
  Eigen::MatrixXd W;
  Eigen::Index S = 0;
  double zeta = 0.0;
  Eigen::Index penalty_rows = 0;
  bool penalized = false;
  std::vector<std::pair<Eigen::Index, Eigen::Index>> pairs;
  /// Event flag of the second subject of each pair row.
  std::vector<bool> partner_event;

  Eigen::Index zeta_row() const { return S - 1; }
  Eigen::Index rows() const { return V.size(); }
  Eigen::Index cols() const { return W.cols(); }
  bool augmented() const { return penalized; }
};

PseudoProblem build_pseudo_problem(const Eigen::Ref<const Eigen::VectorXd>& log_time,
                                   const EventVector& event,
                                   const Eigen::Ref<const Eigen::MatrixXd>& design,
                                   ZetaPolicy zeta = {},
                                   std::size_t memory_cap = kDefaultMemoryCap);

PseudoProblem build_pseudo_problem(const Dataset& ds, const AdditiveBasisSpec& basis,
                                   ZetaPolicy zeta = {},
                                   std::size_t memory_cap = kDefaultMemoryCap);

/// Row-level penalty weights: each penalized coefficient gets one row
/// (0, weight * e_k). gamma applies to knot coefficients (all spline
/// coefficients when penalize_all_beta), lambda[j] to linear column j.
struct PenaltySpec {
  double gamma = 0.0;
  Eigen::VectorXd lambda;
  bool penalize_all_beta = false;

  void validate(const DesignLayout& layout) const;
};

/// Penalized columns paired with their row weights, in augmentation order.
std::vector<std::pair<Eigen::Index, double>> penalty_entries(const PenaltySpec& pen,
                                                             const DesignLayout& layout);

PseudoProblem augment_penalties(const PseudoProblem& pp, const PenaltySpec& pen,
                                const DesignLayout& layout);

/// Appends one row (0, weight * e_column) per entry.
PseudoProblem augment_penalties(const PseudoProblem& pp,
                                const std::vector<std::pair<Eigen::Index, double>>& entries);

/// sum_s |V_s - W_s theta| accumulated in extended precision.
double l1_objective(const PseudoProblem& pp, const Eigen::Ref<const Eigen::VectorXd>& theta);

}  // namespace plaft
