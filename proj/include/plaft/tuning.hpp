#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "plaft/data.hpp"
#include "plaft/model.hpp"

namespace plaft {

enum class Criterion { cv, gcv };

std::string_view to_string(Criterion c);

struct TuningGrid {
  std::vector<double> gamma_values;
  std::vector<double> lambda_values;
  int folds = 5;
  std::uint64_t seed = 1;
  /// GCV points with df > gcv_df_fraction * n are flagged invalid. With df
  /// near n the Gehan loss of an interpolating fit is ~0 and the criterion
  /// degenerates. 1 keeps only the df < n requirement.
  double gcv_df_fraction = 0.5;

  /// count values spaced evenly in log scale over [lo, hi].
  static std::vector<double> log_spaced(int count = 10, double lo = 1e-3, double hi = 10.0);
  /// 10 x 10 grid over [1e-3, 10] for both parameters.
  static TuningGrid standard();

  void validate() const;
};

struct TuningRecord {
  double gamma = 0.0;
  double lambda = 0.0;
  /// Mean held-out loss (cv) or GCV score; NaN when invalid.
  double criterion = 0.0;
  Eigen::Index df = 0;
  bool valid = true;
  /// Held-out loss per fold (cv only).
  std::vector<double> fold_losses;
};

struct TuningReport {
  Criterion criterion = Criterion::gcv;
  /// Grid order: gamma outer, lambda inner, as given.
  std::vector<TuningRecord> records;
  std::size_t chosen_index = 0;
  double chosen_gamma = 0.0;
  double chosen_lambda = 0.0;
  /// Fold of each subject (cv only).
  std::vector<int> folds;
  /// Full-data fit at the chosen point (gcv only).
  std::optional<FitResult> chosen_fit;

  void write_csv(const std::filesystem::path& path) const;
};

/// L_n / (1 - df/n)^2 on `ds`. Throws SaturationError when df >= n.
double gcv_score(const Dataset& ds, const FitResult& fr);

/// Fold labels 0..K-1, stratified on event status. Depends only on (seed,
/// event vector).
std::vector<int> stratified_folds(const EventVector& event, int folds, std::uint64_t seed);

/// K-fold CV on the held-out Gehan loss (pairs within the held-out fold).
TuningReport cross_validate(const Dataset& ds, const ModelSpec& spec, const TuningGrid& grid,
                            unsigned threads = 1);

/// GCV on full-data fits, warm-starting along decreasing lambda.
TuningReport tune_gcv(const Dataset& ds, const ModelSpec& spec, const TuningGrid& grid,
                      unsigned threads = 1);

}  // namespace plaft
