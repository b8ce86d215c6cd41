// Per-pair quantities of a smoothed relaxation, shared by the evaluator and
// the solvers.
#pragma once

#include "srp/relaxed_problem.h"

namespace srp::internal {

// Each pair contributes phi(na, nb), where na and nb are the smoothed norms of
// the forward residual a_i = A p_i + t - q_i and backward residual
// b_i = A^T q_i + s - p_i. The squared kind uses phi = (na^2 + nb^2) / 2 with
// unsmoothed norms.
struct TermEval {
  Matrix a;  // unpacked variables
  Vector t;
  Vector s;
  Matrix fwd;  // d x n residuals
  Matrix bwd;
  Vector na;  // smoothed norms
  Vector nb;
  Vector phi;
  // Hessian of phi in (a_i, b_i) is diag(ca I, cb I) + U M U^T with
  // U = [a_i / na, b_i / nb] and M = [[m11, m12], [m12, m22]]; the gradient
  // is (ca a_i, cb b_i).
  Vector ca;
  Vector cb;
  Vector m11;
  Vector m12;
  Vector m22;
  Matrix cov_residual;  // A cov_p - cov_q A (empty without covariance term)
  double cov_norm = 0.0;  // smoothed |cov_residual|_F
  double value = 0.0;     // total smoothed objective
};

TermEval EvaluateTerms(const RelaxedProblem& problem, const Vector& x, double eps);

// Weight of L^T L in the Hessian of the covariance term.
double CovarianceCurvature(const RelaxedProblem& problem, const TermEval& ev);

// Gradient of the smoothed objective given a term evaluation.
Vector AssembleGradient(const RelaxedProblem& problem, const TermEval& ev);

// Dense matrix of sum_i ca_i J_a^T J_a + cb_i J_b^T J_b + c_cov L^T L, where
// J_a, J_b are the Jacobians of the residuals in the flat variable and L is
// the linear map vec(A) -> vec(A cov_p - cov_q A).
Matrix AssembleCurvature(const RelaxedProblem& problem, const Vector& ca, const Vector& cb,
                         double c_cov);

// Right-hand side sum_i ca_i J_a^T q_i + cb_i J_b^T p_i.
Vector AssembleTarget(const RelaxedProblem& problem, const Vector& ca, const Vector& cb);

// Flat-variable image of vec(cov_residual) under L^T.
Vector CovarianceAdjoint(const RelaxedProblem& problem, const Matrix& cov_residual);

}  // namespace srp::internal
