#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace plaft {

using EventVector = Eigen::Matrix<bool, Eigen::Dynamic, 1>;

/// One subject: log follow-up time, event flag, clinical covariates X and
/// linear features Z.
struct CensoredObservation {
  double log_time = 0.0;
  bool event = false;
  Eigen::VectorXd clinical;
  Eigen::VectorXd features;
};

/// Censored survival data stored column-wise. Immutable once built.
///
/// Rows are subjects. The clinical block (n x q) holds covariates that may
/// enter nonlinearly; the feature block (n x d) holds the high-dimensional
/// linear predictors.
class Dataset {
 public:
  Dataset() = default;
  Dataset(Eigen::VectorXd log_time, EventVector event, Eigen::MatrixXd clinical,
          Eigen::MatrixXd features, std::vector<std::string> clinical_names = {},
          std::vector<std::string> feature_names = {});

  static Dataset from_observations(const std::vector<CensoredObservation>& obs);

  Eigen::Index n() const { return log_time_.size(); }
  Eigen::Index q() const { return clinical_.cols(); }
  Eigen::Index d() const { return features_.cols(); }
  Eigen::Index n_events() const { return event_.count(); }

  const Eigen::VectorXd& log_time() const { return log_time_; }
  const EventVector& event() const { return event_; }
  const Eigen::MatrixXd& clinical() const { return clinical_; }
  const Eigen::MatrixXd& features() const { return features_; }
  const std::vector<std::string>& clinical_names() const { return clinical_names_; }
  const std::vector<std::string>& feature_names() const { return feature_names_; }

  CensoredObservation observation(Eigen::Index i) const;

  /// Rows in the given order (duplicates allowed).
  Dataset subset(const std::vector<Eigen::Index>& rows) const;
  Dataset with_log_time(Eigen::VectorXd log_time) const;
  Dataset with_features(Eigen::MatrixXd features) const;

  /// Throws DegenerateDataError unless at least two events are present.
  void require_events(Eigen::Index minimum = 2) const;

  bool operator==(const Dataset& other) const;

 private:
  Eigen::VectorXd log_time_;
  EventVector event_;
  Eigen::MatrixXd clinical_;
  Eigen::MatrixXd features_;
  std::vector<std::string> clinical_names_;
  std::vector<std::string> feature_names_;
};

/// Column roles for CSV ingestion. Column items are header names, name
/// ranges `first:last` (inclusive, by header position) or 1-based
/// positional ranges `3-10`.
struct CsvSchema {
  std::string time_col;
  std::string status_col;
  std::vector<std::string> clinical_cols;
  std::vector<std::string> feature_cols;
  /// Time column already holds log times.
  bool time_is_log = false;
  /// When set, rows sharing an id are averaged into one subject.
  std::optional<std::string> id_col;
};

/// Expands name/range items against a header row.
std::vector<std::size_t> resolve_columns(const std::vector<std::string>& header,
                                         const std::vector<std::string>& items);

Dataset load_csv(const std::filesystem::path& path, const CsvSchema& schema);

/// Writes `log_time,status,<clinical>,<features>` with round-trip precision.
/// Reload with `time_is_log = true`.
void write_csv(const Dataset& ds, const std::filesystem::path& path);

/// Per-feature centering and scaling (sample sd, n - 1 denominator).
struct StandardizationRecord {
  Eigen::VectorXd means;
  Eigen::VectorXd sds;

  static StandardizationRecord identity(Eigen::Index d);

  Eigen::MatrixXd apply(const Eigen::Ref<const Eigen::MatrixXd>& z) const;
  Eigen::VectorXd apply_row(const Eigen::Ref<const Eigen::VectorXd>& z) const;
  Eigen::MatrixXd invert(const Eigen::Ref<const Eigen::MatrixXd>& z_std) const;
};

std::pair<Dataset, StandardizationRecord> standardize_features(const Dataset& ds);

/// FNV-1a hash of the numeric content (times, events, covariates). Used to
/// recognize a model's own training data.
std::uint64_t fingerprint(const Dataset& ds);

}  // namespace plaft
