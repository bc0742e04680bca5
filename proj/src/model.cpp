#include "plaft/model.hpp"

#include "plaft/error.hpp"

#include <cmath>
#include <limits>
#include <set>
#include <string>

namespace plaft {

void ModelSpec::validate(Eigen::Index q, Eigen::Index d) const {
  std::set<Eigen::Index> seen;
  auto check = [&](Eigen::Index idx, const char* role) {
    if (idx < 0 || idx >= q) {
      throw DimensionError(std::string(role) + " covariate index " + std::to_string(idx) +
                           " outside [0, " + std::to_string(q) + ")");
    }
    if (!seen.insert(idx).second) {
      throw SpecError("clinical column " + std::to_string(idx) + " assigned twice");
    }
  };
  for (auto idx : nonlinear_covariates) check(idx, "nonlinear");
  for (auto idx : linear_clinical) check(idx, "linear");
  if (!basis.empty() && basis.size() != nonlinear_covariates.size()) {
    throw DimensionError("one basis per nonlinear covariate required");
  }
  for (const auto& b : basis) b.validate();
  if (basis.empty() && !nonlinear_covariates.empty()) {
    if (degree < 1) throw SpecError("spline degree must be >= 1");
    if (knots < 0) throw SpecError("knot count must be >= 0");
  }
  if (!std::isfinite(gamma) || gamma < 0.0) throw SpecError("gamma must be finite and >= 0");
  if (!std::isfinite(lambda) || lambda < 0.0) throw SpecError("lambda must be finite and >= 0");
  if (lambda_weights.size() != 0) {
    if (lambda_weights.size() != linear_count(d)) {
      throw DimensionError("lambda weights have " + std::to_string(lambda_weights.size()) +
                           " entries, expected " + std::to_string(linear_count(d)));
    }
    for (Eigen::Index j = 0; j < lambda_weights.size(); ++j) {
      if (std::isnan(lambda_weights(j)) || lambda_weights(j) < 0.0) {
        throw SpecError("lambda weights must be >= 0");
      }
    }
  }
  solver.validate();
}

Eigen::Index ModelSpec::linear_count(Eigen::Index d) const {
  return static_cast<Eigen::Index>(linear_clinical.size()) + (use_features ? d : 0);
}

Eigen::VectorXd ModelSpec::resolved_lambda_weights(Eigen::Index d) const {
  if (lambda_weights.size() != 0) return lambda_weights;
  Eigen::VectorXd w = Eigen::VectorXd::Ones(linear_count(d));
  w.head(static_cast<Eigen::Index>(linear_clinical.size())).setConstant(penalize_clinical ? 1.0 : 0.0);
  return w;
}

Eigen::Index FitResult::df() const {
  return (beta_hat.array() != 0.0).count() + (vartheta_hat.array() != 0.0).count();
}

Eigen::VectorXd FitResult::vartheta_raw() const {
  Eigen::VectorXd out = vartheta_hat;
  if (spec.use_features && d > 0) out.tail(d).array() /= standardization.sds.array();
  return out;
}

Eigen::VectorXd FitResult::theta() const {
  Eigen::VectorXd t(beta_hat.size() + vartheta_hat.size());
  t << beta_hat, vartheta_hat;
  return t;
}

Eigen::MatrixXd model_design(const Dataset& ds, const ModelSpec& spec,
                             const StandardizationRecord& record) {
  const auto q_nl = static_cast<Eigen::Index>(spec.nonlinear_covariates.size());
  if (static_cast<Eigen::Index>(spec.basis.size()) != q_nl) {
    throw DimensionError("one basis per nonlinear covariate required");
  }
  Eigen::MatrixXd nonlinear(ds.n(), q_nl);
  for (Eigen::Index b = 0; b < q_nl; ++b) {
    nonlinear.col(b) = ds.clinical().col(spec.nonlinear_covariates[static_cast<std::size_t>(b)]);
  }
  const auto lc = static_cast<Eigen::Index>(spec.linear_clinical.size());
  Eigen::MatrixXd linear(ds.n(), spec.linear_count(ds.d()));
  for (Eigen::Index j = 0; j < lc; ++j) {
    linear.col(j) = ds.clinical().col(spec.linear_clinical[static_cast<std::size_t>(j)]);
  }
  if (spec.use_features && ds.d() > 0) {
    if (record.means.size() != ds.d()) throw DimensionError("standardization record width differs from d");
    linear.rightCols(ds.d()) = record.apply(ds.features());
  }
  return design_matrix(spec.basis, nonlinear, linear);
}

namespace {

AdditiveBasisSpec resolve_basis(const Dataset& ds, const ModelSpec& spec) {
  if (!spec.basis.empty()) return spec.basis;
  AdditiveBasisSpec out;
  for (auto idx : spec.nonlinear_covariates) {
    SplineBasisSpec b;
    b.degree = spec.degree;
    if (spec.knots > 0) b.knots = place_knots(ds.clinical().col(idx), spec.knots, spec.knot_ties);
    out.push_back(std::move(b));
  }
  return out;
}

}  // namespace

FitResult fit(const Dataset& ds, const ModelSpec& spec, const std::optional<Eigen::VectorXd>& warm_start) {
  spec.validate(ds.q(), ds.d());
  ds.require_events(2);

  FitResult fr;
  fr.spec = spec;
  fr.q = ds.q();
  fr.d = ds.d();
  fr.n_train = ds.n();
  fr.data_fingerprint = fingerprint(ds);
  fr.gamma = spec.gamma;
  fr.lambda = spec.lambda;
  fr.standardization = (spec.use_features && spec.standardize && ds.d() > 0)
                           ? standardize_features(ds).second
                           : StandardizationRecord::identity(ds.d());
  fr.spec.basis = resolve_basis(ds, spec);

  const Eigen::MatrixXd design = model_design(ds, fr.spec, fr.standardization);
  const auto lc_total = spec.linear_count(ds.d());
  const auto layout = DesignLayout::make(fr.spec.basis, lc_total);
  const Eigen::VectorXd weights = spec.resolved_lambda_weights(ds.d());

  // Columns with infinite weight are fixed at zero and left out.
  std::vector<Eigen::Index> free_cols;
  std::vector<Eigen::Index> position(static_cast<std::size_t>(layout.cols()), -1);
  for (Eigen::Index c = 0; c < layout.cols(); ++c) {
    if (c >= layout.spline_cols && std::isinf(weights(c - layout.spline_cols))) continue;
    position[static_cast<std::size_t>(c)] = static_cast<Eigen::Index>(free_cols.size());
    free_cols.push_back(c);
  }
  Eigen::MatrixXd free_design(ds.n(), static_cast<Eigen::Index>(free_cols.size()));
  for (std::size_t k = 0; k < free_cols.size(); ++k) {
    free_design.col(static_cast<Eigen::Index>(k)) = design.col(free_cols[k]);
  }

  // Loss-scale penalties become row weights on the pair-sum scale, which is
  // 2 n^2 times the Gehan loss up to a constant.
  const double n = static_cast<double>(ds.n());
  const double row_scale = 2.0 * n * n;
  std::vector<bool> gamma_col(static_cast<std::size_t>(layout.cols()), false);
  if (spec.penalize_all_beta) {
    for (Eigen::Index c = 0; c < layout.spline_cols; ++c) gamma_col[static_cast<std::size_t>(c)] = true;
  } else {
    for (auto c : layout.knot_columns()) gamma_col[static_cast<std::size_t>(c)] = true;
  }
  std::vector<std::pair<Eigen::Index, double>> entries;
  for (Eigen::Index c = 0; c < layout.cols(); ++c) {
    const auto pos = position[static_cast<std::size_t>(c)];
    if (pos < 0) continue;
    double w = 0.0;
    if (c < layout.spline_cols) {
      if (gamma_col[static_cast<std::size_t>(c)]) w = spec.gamma;
    } else {
      w = spec.lambda * weights(c - layout.spline_cols);
    }
    if (w > 0.0) entries.emplace_back(pos, w * row_scale);
  }

  SolveOutcome outcome;
  if (spec.solver.method == SolverMethod::exact_l1) {
    const PseudoProblem pp =
        build_pseudo_problem(ds.log_time(), ds.event(), free_design, spec.zeta, spec.memory_cap);
    outcome = solve_exact_l1(augment_penalties(pp, entries));
  } else {
    Eigen::VectorXd theta0 = Eigen::VectorXd::Zero(free_design.cols());
    if (warm_start) {
      if (warm_start->size() != layout.cols()) throw DimensionError("warm start length differs from model width");
      for (std::size_t k = 0; k < free_cols.size(); ++k) {
        theta0(static_cast<Eigen::Index>(k)) = (*warm_start)(free_cols[k]);
      }
    }
    const PairwiseGehanObjective objective(ds.log_time(), ds.event(), free_design, entries, spec.zeta);
    outcome = solve_smoothed(objective, spec.solver, theta0);
  }
  fr.method_used = outcome.method_used;
  fr.converged = outcome.converged;
  fr.iterations = outcome.iterations;

  Eigen::VectorXd theta = Eigen::VectorXd::Zero(layout.cols());
  for (std::size_t k = 0; k < free_cols.size(); ++k) {
    const double v = outcome.theta_hat(static_cast<Eigen::Index>(k));
    theta(free_cols[k]) = std::abs(v) < kZeroThreshold ? 0.0 : v;
  }
  fr.beta_hat = theta.head(layout.spline_cols);
  fr.vartheta_hat = theta.tail(lc_total);
  for (Eigen::Index j = 0; j < lc_total; ++j) {
    if (fr.vartheta_hat(j) != 0.0) fr.selected.push_back(j);
  }

  fr.loss = gehan_loss(ds.log_time(), ds.event(), design, theta);
  double penalty = 0.0;
  for (Eigen::Index c = 0; c < layout.cols(); ++c) {
    if (c < layout.spline_cols) {
      if (gamma_col[static_cast<std::size_t>(c)]) penalty += spec.gamma * std::abs(theta(c));
    } else if (theta(c) != 0.0) {
      penalty += spec.lambda * weights(c - layout.spline_cols) * std::abs(theta(c));
    }
  }
  fr.objective = fr.loss + penalty;
  return fr;
}

FitResult fit_additive(const Dataset& ds, const ModelSpec& spec,
                       const std::optional<Eigen::VectorXd>& warm_start) {
  if (spec.nonlinear_covariates.size() < 2) {
    throw SpecError("additive fit needs at least two nonlinear covariates");
  }
  return fit(ds, spec, warm_start);
}

double phi_hat(const FitResult& fr, std::size_t block, double x) {
  if (block >= fr.spec.basis.size()) throw DimensionError("no nonlinear block " + std::to_string(block));
  const auto layout = DesignLayout::make(fr.spec.basis, 0);
  const auto& b = fr.spec.basis[block];
  const auto beta = fr.beta_hat.segment(layout.block_offsets[block], b.size());
  // Knots below zero make B(0) nonzero; subtract it so phi_hat(0) = 0.
  return eval_phi(b, beta, x) - eval_phi(b, beta, 0.0);
}

namespace {
double anchor_total(const FitResult& fr) {
  const auto layout = DesignLayout::make(fr.spec.basis, 0);
  double total = 0.0;
  for (std::size_t b = 0; b < fr.spec.basis.size(); ++b) {
    const auto& spec = fr.spec.basis[b];
    total += eval_phi(spec, fr.beta_hat.segment(layout.block_offsets[b], spec.size()), 0.0);
  }
  return total;
}
}  // namespace

double predict_risk(const FitResult& fr, const Eigen::Ref<const Eigen::VectorXd>& clinical,
                    const Eigen::Ref<const Eigen::VectorXd>& features) {
  if (clinical.size() != fr.q) {
    throw DimensionError("clinical vector has " + std::to_string(clinical.size()) +
                         " entries, expected " + std::to_string(fr.q));
  }
  if (features.size() != fr.d) {
    throw DimensionError("feature vector has " + std::to_string(features.size()) +
                         " entries, expected " + std::to_string(fr.d));
  }
  double score = 0.0;
  for (std::size_t b = 0; b < fr.spec.nonlinear_covariates.size(); ++b) {
    score += phi_hat(fr, b, clinical(fr.spec.nonlinear_covariates[b]));
  }
  const auto lc = static_cast<Eigen::Index>(fr.spec.linear_clinical.size());
  for (Eigen::Index j = 0; j < lc; ++j) {
    score += fr.vartheta_hat(j) * clinical(fr.spec.linear_clinical[static_cast<std::size_t>(j)]);
  }
  if (fr.spec.use_features && fr.d > 0) {
    score += fr.vartheta_hat.tail(fr.d).dot(fr.standardization.apply_row(features));
  }
  return score;
}

Eigen::VectorXd predict_risk(const FitResult& fr, const Dataset& ds) {
  if (ds.q() != fr.q || ds.d() != fr.d) {
    throw DimensionError("dataset has q=" + std::to_string(ds.q()) + ", d=" + std::to_string(ds.d()) +
                         "; model expects q=" + std::to_string(fr.q) + ", d=" + std::to_string(fr.d));
  }
  Eigen::VectorXd score = model_design(ds, fr.spec, fr.standardization) * fr.theta();
  score.array() -= anchor_total(fr);
  return score;
}

double gehan_loss(const Dataset& ds, const FitResult& fr) {
  const Eigen::VectorXd score = predict_risk(fr, ds);
  return gehan_loss(Eigen::VectorXd(ds.log_time() - score), ds.event());
}

}  // namespace plaft
