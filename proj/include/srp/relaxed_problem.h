// A convex relaxation instance as a function of one flat variable vector,
// with an exact evaluator, a smoothed evaluator with its gradient, and a
// subgradient for first-order oracles.
#pragma once

#include <optional>

#include "srp/objectives.h"

namespace srp {

enum class RelaxationKind {
  kSymmetric,     // sum_i M_p(|A p_i - q_i + t|, |A^T q_i - p_i + s|)
  kNonSymmetric,  // sum_i |A p_i + t - q_i|
  kSquared,       // sum_i (|A p_i - q_i + t|^2 + |A^T q_i - p_i + s|^2) / 2
};

struct ValueAndGradient {
  double value = 0.0;
  Vector gradient;
};

/// Objective selector plus data. The variable vector is laid out as
/// vec(A) in column-major order, then t (when translations are enabled),
/// then s (when translations are enabled and the kind has a backward term).
///
/// An optional covariance term adds lambda * |A cov_p - cov_q A|_F, or
/// lambda * |A cov_p - cov_q A|_F^2 for the squared kind.
class RelaxedProblem {
 public:
  RelaxedProblem(PointPairs pts, RelaxationKind kind, NormPower p, bool use_translations);

  RelaxedProblem& WithCovariance(CovariancePair cov, double lambda);

  const PointPairs& pairs() const { return pts_; }
  RelaxationKind kind() const { return kind_; }
  NormPower power() const { return p_; }
  bool use_translations() const { return use_translations_; }
  bool has_backward() const { return kind_ != RelaxationKind::kNonSymmetric; }
  bool has_t() const { return use_translations_; }
  bool has_s() const { return use_translations_ && has_backward(); }
  const std::optional<CovariancePair>& covariance() const { return cov_; }
  double lambda() const { return lambda_; }
  bool has_covariance_term() const { return cov_.has_value() && lambda_ > 0; }

  int dim() const { return pts_.dim(); }
  int num_variables() const;
  int t_offset() const { return dim() * dim(); }
  int s_offset() const { return dim() * dim() + dim(); }

  Vector Pack(const Matrix& a, const Vector& t, const Vector& s) const;
  // Absent t or s come back as zero vectors. `objective` holds Value(x).
  RelaxedSolution Unpack(const Vector& x) const;

  double Value(const Vector& x) const;

  // Pseudo-Huber smoothing: |v| -> sqrt(|v|^2 + eps^2) and
  // max(x, y) -> (x + y + sqrt((x - y)^2 + eps^2)) / 2. For p = inf the
  // inner norms use eps / 2 so that every term overestimates by at most eps.
  // The squared kind is already smooth and ignores eps.
  ValueAndGradient Smoothed(const Vector& x, double eps) const;

  // One element of the subdifferential of Value at x.
  Vector Subgradient(const Vector& x) const;

  // Median over pairs of sqrt(|p_i|^2 + |q_i|^2).
  double ResidualScale() const;

 private:
  PointPairs pts_;
  RelaxationKind kind_;
  NormPower p_;
  bool use_translations_;
  std::optional<CovariancePair> cov_;
  double lambda_ = 0.0;
};

ValueAndGradient SmoothedValueAndGradient(const RelaxedProblem& problem, const Vector& x,
                                          double eps);

}  // namespace srp
