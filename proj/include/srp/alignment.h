// Relax-and-project pipelines and the IRLS baseline. Each returns a feasible
// motion in O(d) x R^d together with the relaxation's lower bound.
#pragma once

#include <optional>
#include <string>
#include <vector>

#include "srp/solvers.h"

namespace srp {

struct AlignmentResult {
  RigidMotion motion;
  double achieved_energy = 0.0;
  // Relaxed optimum; NaN when the method has no bound on the robust energy.
  double lower_bound = 0.0;
  double ratio = 0.0;  // achieved_energy / max(lower_bound, 1e-12)
  std::string method;
  SolveReport solve_report;
  std::vector<double> energy_trace;  // IRLS only: E(R, t) after each iteration
};

// Approximation ratio with the denominator floored at 1e-12.
double ApproximationRatio(double achieved, double lower_bound);

// Orthogonal problem: R = Pi(A*), t = 0.
AlignmentResult SrpOrth(const PointPairs& pts, const SolverConfig& cfg);

// Rigid problem: R = Pi(A*), t = geometric median of {q_i - R p_i}.
AlignmentResult SrpRigid(const PointPairs& pts, const SolverConfig& cfg);

// Non-symmetrized relax-and-project; t re-estimated by geometric median
// after projection when cfg.use_translations is set, zero otherwise.
AlignmentResult NonSymPipeline(const PointPairs& pts, const SolverConfig& cfg);

// Relax-and-project on the squared symmetrized energy (closed form). Its
// relaxed value bounds the least-squares energy, not the robust one, so
// lower_bound is NaN.
AlignmentResult SquaredPipeline(const PointPairs& pts, const SolverConfig& cfg);

/// Closed-form minimizer of sum_i w_i |R p_i - q_i + t|^2 over O(d) x R^d
/// (weighted centroids, SVD of the weighted cross-covariance, no determinant
/// correction). With `with_translation` false, t = 0 and the centroids are
/// not subtracted.
RigidMotion WeightedProcrustes(const PointPairs& pts, const Vector& w,
                               bool with_translation = true);

struct IrlsOptions {
  std::optional<RigidMotion> init;  // empty: start from uniform weights
  double delta = 0.0;               // <= 0 selects 1e-7 x residual scale
  int max_iter = 500;
  double tol = 1e-10;
  bool with_translation = true;
  double lower_bound = 0.0;  // copied into the result when known
};

// Alternates w_i = 1 / max(|R p_i - q_i + t|, delta) with WeightedProcrustes.
AlignmentResult IrlsRigid(const PointPairs& pts, const IrlsOptions& options = {});

// Balancing factor alpha that scales lambda = lambda_bar * alpha for the
// covariance term, per variant (and per p for the symmetric variant).
double BalancingFactor(CovarianceVariant variant, NormPower p, const PointPairs& pts,
                       const CovariancePair& cov);

// Orthogonal alignment with the covariance energy of two unpaired pools
// (columns are points). The output has t = 0. achieved_energy is the
// regularized objective at the projected R and lower_bound its relaxed
// minimum, both with the same lambda.
AlignmentResult SrpSemisupervised(const PointPairs& pts, const Matrix& unpaired_p,
                                  const Matrix& unpaired_q, double lambda_bar,
                                  CovarianceVariant variant, const SolverConfig& cfg);

}  // namespace srp
