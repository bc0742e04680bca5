#pragma once

#include <Eigen/Dense>

#include <optional>
#include <ostream>
#include <string>

#include "plaft/data.hpp"

namespace plaft {

/// Harrell-type concordance for censored data. Scores predict log-survival,
/// so a pair is concordant when the subject failing first has the lower
/// score.
struct Concordance {
  double value = 0.0;
  double concordant = 0.0;
  long long comparable = 0;
  bool defined() const { return comparable > 0; }
};

/// A pair is comparable when the smaller observed time is an event, or the
/// times are equal and exactly one of the two is an event. Score ties count
/// one half.
Concordance c_statistic(const Eigen::Ref<const Eigen::VectorXd>& times, const EventVector& events,
                        const Eigen::Ref<const Eigen::VectorXd>& scores);

/// Simulation truth on a test sample: phi(X_j) anchored at phi(0) = 0 and the
/// true linear coefficients.
struct TruthValues {
  Eigen::VectorXd phi;
  Eigen::VectorXd vartheta;
};

struct PredictionErrors {
  double mspe1 = 0.0;
  double mspe2 = 0.0;
};

/// mspe1 = mean [phi_hat - phi + (vartheta_hat - vartheta)^T Z]^2,
/// mspe2 = mean [(vartheta_hat - vartheta)^T Z]^2. Throws CapabilityError
/// without truth.
PredictionErrors mspe(const Eigen::Ref<const Eigen::VectorXd>& phi_hat,
                      const Eigen::Ref<const Eigen::VectorXd>& vartheta_hat,
                      const Eigen::Ref<const Eigen::MatrixXd>& z,
                      const std::optional<TruthValues>& truth);

struct SelectionRates {
  /// Share of truly zero coefficients estimated as zero.
  std::optional<double> p_c;
  /// Share of truly nonzero coefficients estimated as zero.
  std::optional<double> p_i;
};

SelectionRates selection_rates(const Eigen::Ref<const Eigen::VectorXd>& vartheta_hat,
                               const Eigen::Ref<const Eigen::VectorXd>& vartheta_true);

double sse(const Eigen::Ref<const Eigen::VectorXd>& vartheta_hat,
           const Eigen::Ref<const Eigen::VectorXd>& vartheta_true);

struct MetricsReport {
  std::optional<double> c_statistic;
  long long comparable_pairs = 0;
  std::optional<double> mspe1;
  std::optional<double> mspe2;
  std::optional<double> sse;
  std::optional<double> p_c;
  std::optional<double> p_i;

  static std::string csv_header();
  /// Undefined values are written as NA.
  std::string csv_row() const;
  void write_summary(std::ostream& out) const;
};

}  // namespace plaft
