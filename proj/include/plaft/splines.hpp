#pragma once

#include <Eigen/Dense>

#include <vector>

#include "plaft/error.hpp"

namespace plaft {

/// Truncated power basis without intercept:
///   B(x) = (x, x^2, ..., x^p, (x - k_1)_+^p, ..., (x - k_r)_+^p).
struct SplineBasisSpec {
  int degree = 3;
  Eigen::VectorXd knots;

  Eigen::Index size() const { return degree + knots.size(); }
  Eigen::Index knot_count() const { return knots.size(); }

  /// Throws SpecError unless degree >= 1 and knots strictly increase.
  void validate() const;
};

/// One basis per nonlinear covariate.
using AdditiveBasisSpec = std::vector<SplineBasisSpec>;

enum class KnotTies {
  strict,   // throw KnotDegeneracyError when quantiles coincide
  collapse  // drop duplicates with a warning; throw only if none remain
};

/// Sample quantiles at levels k/(r+1), k = 1..r, with linear interpolation
/// between order statistics.
Eigen::VectorXd place_knots(const Eigen::Ref<const Eigen::VectorXd>& values, int r,
                            KnotTies ties = KnotTies::strict);

/// Linear-interpolation quantile of sorted data at level `prob` in [0, 1].
double sorted_quantile(const Eigen::Ref<const Eigen::VectorXd>& sorted, double prob);

template <class Scalar>
Scalar ipow(Scalar base, int exponent) {
  Scalar out(1);
  for (int i = 0; i < exponent; ++i) out *= base;
  return out;
}

template <class Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, 1> eval_basis(const SplineBasisSpec& spec, Scalar x) {
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> b(spec.size());
  Scalar power = x;
  for (int m = 0; m < spec.degree; ++m) {
    b(m) = power;
    power *= x;
  }
  for (Eigen::Index k = 0; k < spec.knots.size(); ++k) {
    const Scalar u = x - static_cast<Scalar>(spec.knots(k));
    b(spec.degree + k) = u > Scalar(0) ? ipow(u, spec.degree) : Scalar(0);
  }
  return b;
}

template <class Derived>
typename Derived::Scalar eval_phi(const SplineBasisSpec& spec,
                                  const Eigen::MatrixBase<Derived>& beta,
                                  typename Derived::Scalar x) {
  if (beta.size() != spec.size()) {
    throw DimensionError("spline coefficient length " + std::to_string(beta.size()) +
                         " differs from basis size " + std::to_string(spec.size()));
  }
  return eval_basis(spec, x).dot(beta.derived());
}

/// Basis evaluated at every entry of x, one row per entry.
Eigen::MatrixXd basis_matrix(const SplineBasisSpec& spec, const Eigen::Ref<const Eigen::VectorXd>& x);

}  // namespace plaft
