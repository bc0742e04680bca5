#include "plaft/gehan.hpp"

#include "plaft/error.hpp"

#include <cmath>
#include <string>

namespace plaft {

DesignLayout DesignLayout::make(const AdditiveBasisSpec& basis, Eigen::Index linear_cols) {
  DesignLayout layout;
  Eigen::Index offset = 0;
  for (const auto& b : basis) {
    b.validate();
    layout.block_offsets.push_back(offset);
    layout.block_sizes.push_back(b.size());
    layout.block_degrees.push_back(b.degree);
    offset += b.size();
  }
  layout.spline_cols = offset;
  layout.linear_cols = linear_cols;
  return layout;
}

std::vector<Eigen::Index> DesignLayout::knot_columns() const {
  std::vector<Eigen::Index> out;
  for (std::size_t b = 0; b < block_offsets.size(); ++b) {
    for (Eigen::Index m = block_degrees[b]; m < block_sizes[b]; ++m) {
      out.push_back(block_offsets[b] + m);
    }
  }
  return out;
}

std::vector<Eigen::Index> DesignLayout::polynomial_columns() const {
  std::vector<Eigen::Index> out;
  for (std::size_t b = 0; b < block_offsets.size(); ++b) {
    for (Eigen::Index m = 0; m < block_degrees[b]; ++m) out.push_back(block_offsets[b] + m);
  }
  return out;
}

Eigen::MatrixXd design_matrix(const AdditiveBasisSpec& basis,
                              const Eigen::Ref<const Eigen::MatrixXd>& nonlinear_x,
                              const Eigen::Ref<const Eigen::MatrixXd>& linear) {
  if (nonlinear_x.cols() != static_cast<Eigen::Index>(basis.size())) {
    throw DimensionError("one basis per nonlinear covariate required");
  }
  if (nonlinear_x.rows() != linear.rows()) throw DimensionError("design blocks differ in rows");
  const auto layout = DesignLayout::make(basis, linear.cols());
  Eigen::MatrixXd d(linear.rows(), layout.cols());
  for (std::size_t b = 0; b < basis.size(); ++b) {
    d.middleCols(layout.block_offsets[b], layout.block_sizes[b]) =
        basis_matrix(basis[b], nonlinear_x.col(static_cast<Eigen::Index>(b)));
  }
  d.rightCols(linear.cols()) = linear;
  return d;
}

double gehan_loss(const Eigen::Ref<const Eigen::VectorXd>& residuals, const EventVector& event) {
  const Eigen::Index n = residuals.size();
  if (event.size() != n) throw DimensionError("residual and event lengths differ");
  if (n == 0) return 0.0;
  long double total = 0.0L;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!event(i)) continue;
    for (Eigen::Index j = 0; j < n; ++j) {
      const double diff = residuals(i) - residuals(j);
      if (diff < 0.0) total -= diff;
    }
  }
  return static_cast<double>(total / (static_cast<long double>(n) * n));
}

double gehan_loss(const Eigen::Ref<const Eigen::VectorXd>& log_time, const EventVector& event,
                  const Eigen::Ref<const Eigen::MatrixXd>& design,
                  const Eigen::Ref<const Eigen::VectorXd>& theta) {
  if (design.rows() != log_time.size()) throw DimensionError("design rows differ from n");
  if (design.cols() != theta.size()) {
    throw DimensionError("coefficient length " + std::to_string(theta.size()) +
                         " differs from design width " + std::to_string(design.cols()));
  }
  const Eigen::VectorXd e = log_time - design * theta;
  return gehan_loss(e, event);
}

namespace {

Eigen::MatrixXd default_design(const Dataset& ds, const AdditiveBasisSpec& basis) {
  const auto q_nl = static_cast<Eigen::Index>(basis.size());
  if (q_nl > ds.q()) throw DimensionError("more bases than clinical covariates");
  Eigen::MatrixXd linear(ds.n(), ds.q() - q_nl + ds.d());
  linear << ds.clinical().rightCols(ds.q() - q_nl), ds.features();
  return design_matrix(basis, ds.clinical().leftCols(q_nl), linear);
}

}  // namespace

double gehan_loss(const Dataset& ds, const AdditiveBasisSpec& basis,
                  const Eigen::Ref<const Eigen::VectorXd>& beta,
                  const Eigen::Ref<const Eigen::VectorXd>& vartheta) {
  const Eigen::MatrixXd design = default_design(ds, basis);
  const auto layout = DesignLayout::make(basis, 0);
  if (beta.size() != layout.spline_cols) throw DimensionError("beta length differs from basis size");
  Eigen::VectorXd theta(beta.size() + vartheta.size());
  theta << beta, vartheta;
  return gehan_loss(ds.log_time(), ds.event(), design, theta);
}

PseudoProblem build_pseudo_problem(const Eigen::Ref<const Eigen::VectorXd>& log_time,
                                   const EventVector& event,
                                   const Eigen::Ref<const Eigen::MatrixXd>& design,
                                   ZetaPolicy zeta, std::size_t memory_cap) {
  const Eigen::Index n = log_time.size();
  if (event.size() != n || design.rows() != n) throw DimensionError("inputs disagree on n");
  const Eigen::Index events = event.count();
  if (events < 2) {
    throw DegenerateDataError("need at least 2 observed events, found " + std::to_string(events));
  }
  const Eigen::Index p = design.cols();
  const Eigen::Index S = events * n + 1;
  const double bytes = static_cast<double>(S) * static_cast<double>(p + 1) * sizeof(double);
  if (bytes > static_cast<double>(memory_cap)) {
    throw CapabilityError("pseudo-problem needs " + std::to_string(bytes / (1 << 20)) +
                          " MiB, above the materialization cap; use the smoothed solver");
  }

  PseudoProblem pp;
  pp.S = S;
  pp.V.resize(S);
  pp.W.resize(S, p);
  pp.pairs.reserve(static_cast<std::size_t>(S - 1));
  pp.partner_event.reserve(static_cast<std::size_t>(S - 1));
  Eigen::Index s = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!event(i)) continue;
    for (Eigen::Index j = 0; j < n; ++j, ++s) {
      pp.V(s) = log_time(i) - log_time(j);
      pp.W.row(s) = design.row(i) - design.row(j);
      pp.pairs.emplace_back(i, j);
      pp.partner_event.push_back(event(j));
    }
  }
  // sum_k sum_l delta_k (D_l - D_k)
  const Eigen::RowVectorXd col_sum = design.colwise().sum();
  Eigen::RowVectorXd event_sum = Eigen::RowVectorXd::Zero(p);
  for (Eigen::Index k = 0; k < n; ++k) {
    if (event(k)) event_sum += design.row(k);
  }
  const double abs_v = pp.V.head(S - 1).cwiseAbs().sum();
  pp.zeta = zeta.multiplier * (abs_v > 0.0 ? abs_v : 1.0);
  pp.V(S - 1) = pp.zeta;
  pp.W.row(S - 1) = static_cast<double>(events) * col_sum - static_cast<double>(n) * event_sum;
  return pp;
}

PseudoProblem build_pseudo_problem(const Dataset& ds, const AdditiveBasisSpec& basis,
                                   ZetaPolicy zeta, std::size_t memory_cap) {
  return build_pseudo_problem(ds.log_time(), ds.event(), default_design(ds, basis), zeta,
                              memory_cap);
}

void PenaltySpec::validate(const DesignLayout& layout) const {
  if (!std::isfinite(gamma) || gamma < 0.0) throw SpecError("gamma must be finite and >= 0");
  if (lambda.size() != layout.linear_cols) {
    throw DimensionError("lambda has " + std::to_string(lambda.size()) + " entries, expected " +
                         std::to_string(layout.linear_cols));
  }
  if (!lambda.allFinite() || (lambda.array() < 0.0).any()) {
    throw SpecError("lambda entries must be finite and >= 0");
  }
}

std::vector<std::pair<Eigen::Index, double>> penalty_entries(const PenaltySpec& pen,
                                                             const DesignLayout& layout) {
  pen.validate(layout);
  std::vector<std::pair<Eigen::Index, double>> out;
  if (pen.penalize_all_beta) {
    for (Eigen::Index c = 0; c < layout.spline_cols; ++c) out.emplace_back(c, pen.gamma);
  } else {
    for (auto c : layout.knot_columns()) out.emplace_back(c, pen.gamma);
  }
  for (Eigen::Index j = 0; j < layout.linear_cols; ++j) {
    out.emplace_back(layout.spline_cols + j, pen.lambda(j));
  }
  return out;
}

PseudoProblem augment_penalties(const PseudoProblem& pp, const PenaltySpec& pen,
                                const DesignLayout& layout) {
  if (pp.augmented()) throw StateError("pseudo-problem already carries penalty rows");
  if (layout.cols() != pp.cols()) throw DimensionError("layout width differs from pseudo-problem");
  return augment_penalties(pp, penalty_entries(pen, layout));
}

PseudoProblem augment_penalties(const PseudoProblem& pp,
                                const std::vector<std::pair<Eigen::Index, double>>& entries) {
  if (pp.augmented()) throw StateError("pseudo-problem already carries penalty rows");
  for (const auto& [col, weight] : entries) {
    if (col < 0 || col >= pp.cols()) throw DimensionError("penalty column out of range");
    if (!std::isfinite(weight) || weight < 0.0) throw SpecError("penalty weights must be finite and >= 0");
  }
  const auto extra = static_cast<Eigen::Index>(entries.size());

  PseudoProblem out = pp;
  out.penalty_rows = extra;
  out.penalized = true;
  out.V.conservativeResize(pp.rows() + extra);
  out.W.conservativeResize(pp.rows() + extra, Eigen::NoChange);
  out.V.tail(extra).setZero();
  out.W.bottomRows(extra).setZero();
  for (Eigen::Index k = 0; k < extra; ++k) {
    const auto [col, weight] = entries[static_cast<std::size_t>(k)];
    out.W(pp.rows() + k, col) = weight;
  }
  return out;
}

double l1_objective(const PseudoProblem& pp, const Eigen::Ref<const Eigen::VectorXd>& theta) {
  if (theta.size() != pp.cols()) throw DimensionError("theta length differs from pseudo-problem");
  long double total = 0.0L;
  for (Eigen::Index s = 0; s < pp.rows(); ++s) {
    const long double fit = pp.W.row(s).dot(theta);
    total += std::fabs(static_cast<long double>(pp.V(s)) - fit);
  }
  return static_cast<double>(total);
}

}  // namespace plaft
