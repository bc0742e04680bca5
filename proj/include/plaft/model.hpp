#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "plaft/data.hpp"
#include "plaft/gehan.hpp"
#include "plaft/solver.hpp"
#include "plaft/splines.hpp"

namespace plaft {

/// Coefficients below this magnitude are reported as exact zeros.
inline constexpr double kZeroThreshold = 1e-8;

/// Model structure and penalties.
///
/// gamma and lambda are on the loss scale, i.e. the fit minimizes
///   L_n + gamma * sum |beta_knot| + sum_j lambda_j |vartheta_j|
/// with L_n the Gehan loss (n^-2 normalization). lambda_j = lambda *
/// lambda_weights[j]; an infinite weight fixes the coefficient at zero.
struct ModelSpec {
  /// Clinical columns entering through splines, in block order.
  std::vector<Eigen::Index> nonlinear_covariates;
  /// Clinical columns entering linearly (placed ahead of the features).
  std::vector<Eigen::Index> linear_clinical;
  /// Explicit bases, one per nonlinear covariate. When empty, bases are
  /// built from `degree` and `knots` at fit time.
  AdditiveBasisSpec basis;
  int degree = 3;
  int knots = 6;
  KnotTies knot_ties = KnotTies::collapse;

  double gamma = 0.0;
  double lambda = 0.0;
  /// Per linear-column multipliers (linear clinical then features). Empty
  /// means 1 for features and 0 for linear clinical columns (1 when
  /// penalize_clinical is set).
  Eigen::VectorXd lambda_weights;
  bool penalize_clinical = false;
  bool penalize_all_beta = false;

  bool use_features = true;
  bool standardize = true;

  SolverConfig solver;
  ZetaPolicy zeta;
  std::size_t memory_cap = kDefaultMemoryCap;

  /// Throws SpecError/DimensionError when indices are out of range,
  /// overlap, or lambda weights have the wrong length.
  void validate(Eigen::Index q, Eigen::Index d) const;
  Eigen::Index linear_count(Eigen::Index d) const;
  /// Effective multipliers, defaults filled in.
  Eigen::VectorXd resolved_lambda_weights(Eigen::Index d) const;
};

struct FitResult {
  /// Spec with the bases actually used.
  ModelSpec spec;
  Eigen::VectorXd beta_hat;
  /// Linear clinical coefficients followed by feature coefficients on the
  /// standardized scale.
  Eigen::VectorXd vartheta_hat;
  double gamma = 0.0;
  double lambda = 0.0;
  /// Penalized loss at the reported coefficients.
  double objective = 0.0;
  double loss = 0.0;
  /// Indices into vartheta_hat with nonzero coefficients.
  std::vector<Eigen::Index> selected;
  StandardizationRecord standardization;
  Eigen::Index q = 0;
  Eigen::Index d = 0;
  Eigen::Index n_train = 0;
  /// fingerprint() of the training data.
  std::uint64_t data_fingerprint = 0;

  SolverMethod method_used = SolverMethod::exact_l1;
  bool converged = false;
  int iterations = 0;

  /// Nonzero entries of (beta_hat, vartheta_hat).
  Eigen::Index df() const;
  /// vartheta on the raw feature scale (clinical entries unchanged).
  Eigen::VectorXd vartheta_raw() const;
  /// theta = (beta_hat, vartheta_hat).
  Eigen::VectorXd theta() const;
};

/// Spline and linear blocks of the model design for a dataset, with features
/// standardized by `record`.
Eigen::MatrixXd model_design(const Dataset& ds, const ModelSpec& spec,
                             const StandardizationRecord& record);

/// Minimizes the penalized Gehan loss. `warm_start` (full theta) seeds the
/// smoothed solver.
FitResult fit(const Dataset& ds, const ModelSpec& spec,
              const std::optional<Eigen::VectorXd>& warm_start = std::nullopt);

/// As fit, requiring at least two nonlinear covariates.
FitResult fit_additive(const Dataset& ds, const ModelSpec& spec,
                       const std::optional<Eigen::VectorXd>& warm_start = std::nullopt);

/// Fitted effect of nonlinear block `block` at x, anchored so phi_hat(0) = 0.
double phi_hat(const FitResult& fr, std::size_t block, double x);

/// sum_j phi_hat_j(x_j) + vartheta^T (linear clinical, standardized z).
/// `clinical` has length q, `features` length d on the raw scale.
double predict_risk(const FitResult& fr, const Eigen::Ref<const Eigen::VectorXd>& clinical,
                    const Eigen::Ref<const Eigen::VectorXd>& features);

Eigen::VectorXd predict_risk(const FitResult& fr, const Dataset& ds);

/// Gehan loss of the fitted model on (possibly new) data.
double gehan_loss(const Dataset& ds, const FitResult& fr);

/// Key-value (JSON) artifact.
std::string to_json(const FitResult& fr);
FitResult fit_result_from_json(const std::string& text);
void save_fit(const FitResult& fr, const std::filesystem::path& path);
FitResult load_fit(const std::filesystem::path& path);

}  // namespace plaft
