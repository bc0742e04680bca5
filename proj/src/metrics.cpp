#include "plaft/metrics.hpp"

#include "plaft/error.hpp"

#include <cstdio>
#include <string>

namespace plaft {

Concordance c_statistic(const Eigen::Ref<const Eigen::VectorXd>& times, const EventVector& events,
                        const Eigen::Ref<const Eigen::VectorXd>& scores) {
  const Eigen::Index n = times.size();
  if (events.size() != n || scores.size() != n) throw DimensionError("c statistic inputs differ in length");
  Concordance out;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!events(i)) continue;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (j == i) continue;
      // i fails first: strictly earlier, or tied with a censored j.
      const bool earlier = times(i) < times(j) || (times(i) == times(j) && !events(j));
      if (!earlier) continue;
      ++out.comparable;
      if (scores(i) < scores(j)) {
        out.concordant += 1.0;
      } else if (scores(i) == scores(j)) {
        out.concordant += 0.5;
      }
    }
  }
  if (out.comparable > 0) out.value = out.concordant / static_cast<double>(out.comparable);
  return out;
}

PredictionErrors mspe(const Eigen::Ref<const Eigen::VectorXd>& phi_hat,
                      const Eigen::Ref<const Eigen::VectorXd>& vartheta_hat,
                      const Eigen::Ref<const Eigen::MatrixXd>& z,
                      const std::optional<TruthValues>& truth) {
  if (!truth) throw CapabilityError("prediction error needs the true phi and vartheta (simulation only)");
  if (phi_hat.size() != z.rows() || truth->phi.size() != z.rows()) {
    throw DimensionError("phi values and Z differ in rows");
  }
  if (vartheta_hat.size() != z.cols() || truth->vartheta.size() != z.cols()) {
    throw DimensionError("coefficient length differs from Z columns");
  }
  const Eigen::VectorXd linear = z * (vartheta_hat - truth->vartheta);
  const Eigen::VectorXd total = phi_hat - truth->phi + linear;
  PredictionErrors out;
  if (z.rows() > 0) {
    out.mspe1 = total.squaredNorm() / static_cast<double>(z.rows());
    out.mspe2 = linear.squaredNorm() / static_cast<double>(z.rows());
  }
  return out;
}

SelectionRates selection_rates(const Eigen::Ref<const Eigen::VectorXd>& vartheta_hat,
                               const Eigen::Ref<const Eigen::VectorXd>& vartheta_true) {
  if (vartheta_hat.size() != vartheta_true.size()) throw DimensionError("coefficient vectors differ in length");
  long zero = 0, zero_hit = 0, nonzero = 0, nonzero_miss = 0;
  for (Eigen::Index j = 0; j < vartheta_true.size(); ++j) {
    const bool est_zero = vartheta_hat(j) == 0.0;
    if (vartheta_true(j) == 0.0) {
      ++zero;
      zero_hit += est_zero;
    } else {
      ++nonzero;
      nonzero_miss += est_zero;
    }
  }
  SelectionRates out;
  if (zero > 0) out.p_c = static_cast<double>(zero_hit) / static_cast<double>(zero);
  if (nonzero > 0) out.p_i = static_cast<double>(nonzero_miss) / static_cast<double>(nonzero);
  return out;
}

double sse(const Eigen::Ref<const Eigen::VectorXd>& vartheta_hat,
           const Eigen::Ref<const Eigen::VectorXd>& vartheta_true) {
  if (vartheta_hat.size() != vartheta_true.size()) throw DimensionError("coefficient vectors differ in length");
  return (vartheta_hat - vartheta_true).squaredNorm();
}

namespace {
std::string cell(const std::optional<double>& v) {
  if (!v) return "NA";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", *v);
  return buf;
}
}  // namespace

std::string MetricsReport::csv_header() { return "c_statistic,comparable_pairs,mspe1,mspe2,sse,p_c,p_i"; }

std::string MetricsReport::csv_row() const {
  return cell(c_statistic) + "," + std::to_string(comparable_pairs) + "," + cell(mspe1) + "," +
         cell(mspe2) + "," + cell(sse) + "," + cell(p_c) + "," + cell(p_i);
}

void MetricsReport::write_summary(std::ostream& out) const {
  out << "c statistic:      " << (c_statistic ? cell(c_statistic) : "undefined (no comparable pairs)")
      << " over " << comparable_pairs << " comparable pairs\n";
  if (mspe1) out << "MSPE1:            " << cell(mspe1) << '\n';
  if (mspe2) out << "MSPE2:            " << cell(mspe2) << '\n';
  if (sse) out << "SSE:              " << cell(sse) << '\n';
  if (p_c) out << "P_C:              " << cell(p_c) << '\n';
  if (p_i) out << "P_I:              " << cell(p_i) << '\n';
}

}  // namespace plaft
