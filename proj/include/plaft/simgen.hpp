#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "plaft/data.hpp"
#include "plaft/metrics.hpp"
#include "plaft/solver.hpp"
#include "plaft/tuning.hpp"

namespace plaft {

/// Simulation designs: a scalar-Z estimation study, a d = 8 selection study
/// and a high-dimensional prediction study.
enum class Design { estimation, selection, highdim };

enum class PhiKind {
  linear_2x,      // 2x
  quadratic_x2,   // x^2
  quadratic_2x2,  // 2x^2
  cubic_hinge     // (0.2x + 0.5x^2 + 0.15x^3) for x >= 0, 0.05x below
};

std::string_view to_string(Design d);
Design design_from_string(std::string_view s);
std::string_view to_string(PhiKind k);
PhiKind phi_kind_from_string(std::string_view s);

/// True nonlinear effect; every kind satisfies phi(0) = 0.
double phi_truth(PhiKind kind, double x);

struct ScenarioSpec {
  Design design = Design::selection;
  Eigen::Index n = 125;
  Eigen::Index d = 8;
  double rho = 0.0;
  double delta = 1.0;
  PhiKind phi_kind = PhiKind::cubic_hinge;
  /// Width of the uniform censoring offset U*; <= 0 calibrates it to
  /// target_censoring.
  double censor_width = 6.0;
  double target_censoring = 0.4;
  Eigen::Index test_multiplier = 10;
  std::uint64_t seed = 1;

  /// Defaults of each design.
  static ScenarioSpec defaults(Design design);
  /// Throws SpecError on parameter combinations outside the design.
  void validate() const;
  Eigen::VectorXd true_vartheta() const;
};

/// Width w with P(eps > w V) = target for eps ~ N(0,1), V ~ Un(0,1), found by
/// bisection on a fixed 1e5-draw pilot. Results are cached per target.
double calibrate_censor_width(double target);

struct GeneratedData {
  /// Clinical block holds X (q = 1); features hold Z.
  Dataset train;
  Dataset test;
  Eigen::VectorXd vartheta;
  PhiKind phi_kind = PhiKind::cubic_hinge;
  double censor_width = 0.0;

  double phi(double x) const { return phi_truth(phi_kind, x); }
};

/// Pure function of the spec (including its seed).
GeneratedData generate(const ScenarioSpec& spec);

/// splitmix64 step, used to derive independent sub-seeds.
std::uint64_t split_seed(std::uint64_t seed, std::uint64_t stream);

enum class HarnessModel {
  pl_aft,    // spline in X, Z unpenalized, gamma by GCV
  aft,       // X and Z linear, no penalty
  aft_phi,   // true phi subtracted, Z linear
  lasso_pl,  // spline in X, lasso on Z, (gamma, lambda) by GCV
  lasso_l,   // X linear unpenalized, lasso on Z, lambda by GCV
  oracle     // spline in X, true-zero coefficients fixed at 0, gamma by GCV
};

std::string_view to_string(HarnessModel m);

struct ModelVariant {
  std::string name;
  HarnessModel kind = HarnessModel::lasso_pl;
  int knots = 6;
  SolverMethod method = SolverMethod::exact_l1;
};

/// Model line-up used for each design.
std::vector<ModelVariant> default_models(Design design);

struct MonteCarloOptions {
  int replicates = 100;
  unsigned threads = 0;
  /// Tuning grid for gamma and lambda (10 log-spaced values over [1e-3, 10]).
  std::vector<double> gamma_grid = TuningGrid::log_spaced();
  std::vector<double> lambda_grid = TuningGrid::log_spaced();
};

struct ReplicateOutcome {
  int replicate = 0;
  std::size_t model = 0;
  bool ok = false;
  std::string error;
  MetricsReport metrics;
  /// Feature coefficients on the raw scale.
  Eigen::VectorXd vartheta_hat;
  double gamma = 0.0;
  double lambda = 0.0;
  bool converged = true;
  double censoring = 0.0;
};

struct MetricSummary {
  std::string name;
  double mean = 0.0;
  double se = 0.0;
  int count = 0;
};

struct AggregateRow {
  std::string model;
  int failed = 0;
  std::vector<MetricSummary> metrics;

  const MetricSummary* find(std::string_view name) const;
};

struct MonteCarloResult {
  ScenarioSpec spec;
  std::vector<ModelVariant> models;
  int replicates = 0;
  std::vector<ReplicateOutcome> outcomes;
  std::vector<AggregateRow> table;
  double mean_censoring = 0.0;

  /// Rows = models, columns = metric means and SEs, values x1000.
  void write_table_csv(const std::filesystem::path& path) const;
  /// One row per (replicate, model), unscaled.
  void write_replicates_csv(const std::filesystem::path& path) const;
};

/// Fits one harness model to a generated replicate.
FitResult fit_harness_model(const GeneratedData& data, const ModelVariant& model,
                            const MonteCarloOptions& options);

/// Metrics of a harness fit on the replicate's test sample.
ReplicateOutcome evaluate_harness_fit(const GeneratedData& data, const ModelVariant& model,
                                      const FitResult& fr);

/// Replicate r uses generate() with seed split_seed(spec.seed, r).
MonteCarloResult run_monte_carlo(const ScenarioSpec& spec, const std::vector<ModelVariant>& models,
                                 const MonteCarloOptions& options);

}  // namespace plaft
