#include "plaft/splines.hpp"

#include "plaft/log.hpp"

#include <algorithm>
#include <iostream>
#include <mutex>

namespace plaft {

namespace {
std::mutex warning_mutex;
WarningHandler& warning_handler() {
  static WarningHandler handler = [](const std::string& m) { std::cerr << "warning: " << m << '\n'; };
  return handler;
}
}  // namespace

WarningHandler set_warning_handler(WarningHandler handler) {
  std::lock_guard lock(warning_mutex);
  std::swap(handler, warning_handler());
  return handler;
}

void warn(const std::string& message) {
  std::lock_guard lock(warning_mutex);
  if (warning_handler()) warning_handler()(message);
}

void SplineBasisSpec::validate() const {
  if (degree < 1) throw SpecError("spline degree must be at least 1");
  for (Eigen::Index k = 0; k < knots.size(); ++k) {
    if (!std::isfinite(knots(k))) throw SpecError("knots must be finite");
    if (k > 0 && !(knots(k) > knots(k - 1))) throw SpecError("knots must be strictly increasing");
  }
}

double sorted_quantile(const Eigen::Ref<const Eigen::VectorXd>& sorted, double prob) {
  const Eigen::Index n = sorted.size();
  if (n == 0) throw DimensionError("quantile of an empty sample");
  const double h = static_cast<double>(n - 1) * prob;
  const auto lo = static_cast<Eigen::Index>(std::floor(h));
  if (lo >= n - 1) return sorted(n - 1);
  const double frac = h - static_cast<double>(lo);
  return sorted(lo) + frac * (sorted(lo + 1) - sorted(lo));
}

Eigen::VectorXd place_knots(const Eigen::Ref<const Eigen::VectorXd>& values, int r, KnotTies ties) {
  if (r < 1) throw SpecError("knot count must be at least 1");
  Eigen::VectorXd sorted = values;
  std::sort(sorted.data(), sorted.data() + sorted.size());
  std::vector<double> uniq(sorted.data(), sorted.data() + sorted.size());
  uniq.erase(std::unique(uniq.begin(), uniq.end()), uniq.end());
  const int n_distinct = static_cast<int>(uniq.size());

  std::vector<double> knots;
  for (int k = 1; k <= r; ++k) {
    const double v = sorted_quantile(sorted, static_cast<double>(k) / (r + 1));
    // A knot at the sample maximum gives an identically zero basis column.
    if (v >= sorted(sorted.size() - 1)) continue;
    if (knots.empty() || v > knots.back()) knots.push_back(v);
  }
  const int achievable = static_cast<int>(knots.size());
  if (ties == KnotTies::strict) {
    if (n_distinct < r + 2 || achievable < r) {
      throw KnotDegeneracyError("only " + std::to_string(achievable) +
                                    " distinct interior knots available (requested " +
                                    std::to_string(r) + ")",
                                std::min(achievable, std::max(0, n_distinct - 2)));
    }
  } else {
    if (achievable == 0) {
      throw KnotDegeneracyError("no distinct interior knots available", 0);
    }
    if (achievable < r) {
      warn("knot ties collapsed: using " + std::to_string(achievable) + " knots instead of " +
           std::to_string(r));
    }
  }
  return Eigen::Map<const Eigen::VectorXd>(knots.data(), static_cast<Eigen::Index>(knots.size()));
}

Eigen::MatrixXd basis_matrix(const SplineBasisSpec& spec, const Eigen::Ref<const Eigen::VectorXd>& x) {
  Eigen::MatrixXd out(x.size(), spec.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) out.row(i) = eval_basis(spec, x(i)).transpose();
  return out;
}

}  // namespace plaft
