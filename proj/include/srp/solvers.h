// Global minimization of the convex relaxations.
#pragma once

#include <cstdint>
#include <vector>

#include "srp/relaxed_problem.h"

namespace srp {

enum class SolverEngine {
  kAuto,      // Newton for p = inf and covariance terms, majorize-minimize otherwise
  kMajorize,  // reweighted least squares on the smoothed objective
  kNewton,    // damped Newton on the smoothed objective
};

enum class InitMode {
  kLeastSquares,  // unconstrained linear fit Q ~ A P when P has full row rank, else 0
  kRandom,        // Gaussian start drawn from `seed`
};

struct SolverConfig {
  NormPower p = NormPower::kTwo;
  double rel_tol = 1e-8;
  double eps_init = 0.0;  // <= 0 selects 1e-2 x median sqrt(|p_i|^2 + |q_i|^2)
  double eps_decay = 0.1;
  double eps_min = 1e-10;
  int max_outer = 12;
  int max_inner = 500;
  double lambda = 0.0;  // covariance weight
  bool use_translations = false;
  std::uint64_t seed = 0;
  SolverEngine engine = SolverEngine::kAuto;
  InitMode init = InitMode::kLeastSquares;

  void Validate() const;
};

struct SolveReport {
  RelaxedSolution solution;
  int inner_iterations = 0;
  double final_eps = 0.0;
  bool converged = false;
  double wall_time = 0.0;  // seconds
  // Smoothed objective at the end of every smoothing stage; nonincreasing.
  std::vector<double> stage_trace;
  double final_smoothed = 0.0;
};

enum class CovarianceVariant { kSymmetric, kNonSymmetric, kSquared };

// min_A E_p(A). cfg.use_translations must be false.
SolveReport SolveRelaxationOrth(const PointPairs& pts, const SolverConfig& cfg);

// min_{A,t,s} E_p(A, t, s). cfg.use_translations must be true.
SolveReport SolveRelaxationRigid(const PointPairs& pts, const SolverConfig& cfg);

// min sum_i |A p_i + t - q_i|, with or without t per cfg.use_translations.
SolveReport SolveNonSym(const PointPairs& pts, const SolverConfig& cfg);

// Relaxation plus cfg.lambda times the covariance energy (squared for the
// squared variant, which is solved in closed form).
SolveReport SolveWithCovariance(const PointPairs& pts, const CovariancePair& cov,
                                const SolverConfig& cfg, CovarianceVariant variant);

// Any problem of the family. `start`, when non-empty, replaces the
// configured initialization.
SolveReport SolveRelaxed(const RelaxedProblem& problem, const SolverConfig& cfg,
                         const Vector& start = Vector());

// Independent check of the convex minimum: best objective value seen over
// `budget` subgradient steps of length c / sqrt(k), restarted from the best
// point with a smaller c whenever an epoch makes no progress. Test use only.
double SubgradientOracle(const RelaxedProblem& problem, int budget, std::uint64_t seed);

}  // namespace srp
