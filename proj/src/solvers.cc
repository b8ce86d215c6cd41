#include "srp/solvers.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/LU>

#include "term_eval.h"

namespace srp {
namespace {

using internal::TermEval;

constexpr double kTiny = 1e-300;

double RelativeDecrease(double before, double after) {
  return (before - after) / std::max(std::abs(after), kTiny);
}

Vector InitialPoint(const RelaxedProblem& problem, const SolverConfig& cfg) {
  const int d = problem.dim();
  const PointPairs& pts = problem.pairs();
  Matrix a = Matrix::Zero(d, d);
  Vector t = Vector::Zero(d);
  Vector s = Vector::Zero(d);
  if (cfg.init == InitMode::kRandom) {
    Rng rng(cfg.seed);
    std::normal_distribution<double> normal(0.0, 1.0 / std::sqrt(static_cast<double>(d)));
    for (int j = 0; j < d; ++j)
      for (int i = 0; i < d; ++i) a(i, j) = normal(rng);
    for (int i = 0; i < d; ++i) t(i) = normal(rng), s(i) = normal(rng);
  } else if (pts.size() >= d) {
    const Matrix gram = pts.p() * pts.p().transpose();
    Eigen::FullPivLU<Matrix> lu(gram);
    if (lu.rank() == d) a = (pts.q() * pts.p().transpose()) * lu.inverse();
  }
  return problem.Pack(a, t, s);
}

// Solves A X + Y A = B for symmetric positive semidefinite X, Y, taking the
// minimum-norm solution on the null part of the operator.
Matrix SolveSylvester(const Matrix& x, const Matrix& y, const Matrix& b) {
  Eigen::SelfAdjointEigenSolver<Matrix> ex(x);
  Eigen::SelfAdjointEigenSolver<Matrix> ey(y);
  const Vector& dx = ex.eigenvalues();
  const Vector& dy = ey.eigenvalues();
  Matrix bt = ey.eigenvectors().transpose() * b * ex.eigenvectors();
  const double scale = dx.cwiseAbs().maxCoeff() + dy.cwiseAbs().maxCoeff();
  const double floor = 1e-14 * scale;
  for (Eigen::Index j = 0; j < bt.cols(); ++j)
    for (Eigen::Index k = 0; k < bt.rows(); ++k) {
      const double denom = dy(k) + dx(j);
      bt(k, j) = denom > floor ? bt(k, j) / denom : 0.0;
    }
  return ey.eigenvectors() * bt * ex.eigenvectors().transpose();
}

Vector SolveDense(Matrix h, const Vector& rhs) {
  const double ridge = 1e-14 * std::max(h.diagonal().cwiseAbs().maxCoeff(), 1.0);
  h.diagonal().array() += ridge;
  Eigen::LDLT<Matrix> ldlt(h);
  Vector x = ldlt.solve(rhs);
  if (ldlt.info() != Eigen::Success || !x.allFinite()) {
    x = h.completeOrthogonalDecomposition().solve(rhs);
  }
  return x;
}

// Minimizer of (1/2) sum_i ca_i |a_i|^2 + cb_i |b_i|^2 + (c_cov / 2) |A C_p - C_q A|^2.
Vector SolveWeightedQuadratic(const RelaxedProblem& problem, const Vector& ca, const Vector& cb,
                              double c_cov) {
  if (c_cov != 0.0 && problem.has_covariance_term()) {
    return SolveDense(internal::AssembleCurvature(problem, ca, cb, c_cov),
                      internal::AssembleTarget(problem, ca, cb));
  }
  // Without the covariance coupling the normal equations reduce, after
  // eliminating t and s, to a Sylvester equation in A.
  const PointPairs& pts = problem.pairs();
  const int d = problem.dim();
  const Matrix& p = pts.p();
  const Matrix& q = pts.q();
  const Vector cb_eff = problem.has_backward() ? cb : Vector::Zero(ca.size());

  Matrix x = p * ca.asDiagonal() * p.transpose();
  Matrix y = q * cb_eff.asDiagonal() * q.transpose();
  Matrix b = q * (ca + cb_eff).asDiagonal() * p.transpose();
  const double wa = ca.sum();
  const double wb = cb_eff.sum();
  const Vector mp = p * ca;
  const Vector mqa = q * ca;
  const Vector mq = q * cb_eff;
  const Vector mpb = p * cb_eff;
  if (problem.has_t() && wa > 0) {
    x -= mp * mp.transpose() / wa;
    b -= mqa * mp.transpose() / wa;
  }
  if (problem.has_s() && wb > 0) {
    y -= mq * mq.transpose() / wb;
    b -= mq * mpb.transpose() / wb;
  }
  const Matrix a = SolveSylvester(x, y, b);
  Vector t = Vector::Zero(d);
  Vector s = Vector::Zero(d);
  if (problem.has_t() && wa > 0) t = (mqa - a * mp) / wa;
  if (problem.has_s() && wb > 0) s = (mpb - a.transpose() * mq) / wb;
  return problem.Pack(a, t, s);
}

Matrix NewtonHessian(const RelaxedProblem& problem, const TermEval& ev) {
  const int d = problem.dim();
  const int n = problem.pairs().size();
  const int nv = problem.num_variables();
  const PointPairs& pts = problem.pairs();
  const double c_cov = internal::CovarianceCurvature(problem, ev);
  Matrix h = internal::AssembleCurvature(problem, ev.ca, ev.cb, c_cov);

  const int blocks = problem.has_backward() ? 2 : 1;
  Matrix u = Matrix::Zero(nv, blocks * n);
  for (int i = 0; i < n; ++i) {
    const Vector ahat = ev.fwd.col(i) / ev.na(i);
    for (int j = 0; j < d; ++j) u.col(i).segment(d * j, d) = pts.p()(j, i) * ahat;
    if (problem.has_t()) u.col(i).segment(problem.t_offset(), d) = ahat;
    if (blocks == 2) {
      const Vector bhat = ev.bwd.col(i) / ev.nb(i);
      for (int j = 0; j < d; ++j) u.col(n + i).segment(d * j, d) = bhat(j) * pts.q().col(i);
      if (problem.has_s()) u.col(n + i).segment(problem.s_offset(), d) = bhat;
    }
  }
  // Split each 2x2 block [m11 m12; m12 m22] into signed rank-one parts so the
  // update runs as two symmetric rank-k products.
  Matrix pos(nv, blocks * n);
  Matrix neg(nv, blocks * n);
  int n_pos = 0;
  int n_neg = 0;
  auto push = [&](double lam, const Vector& col) {
    if (lam > 0) pos.col(n_pos++) = std::sqrt(lam) * col;
    if (lam < 0) neg.col(n_neg++) = std::sqrt(-lam) * col;
  };
  for (int i = 0; i < n; ++i) {
    if (blocks == 1) {
      push(ev.m11(i), u.col(i));
      continue;
    }
    Eigen::Matrix2d m;
    m << ev.m11(i), ev.m12(i), ev.m12(i), ev.m22(i);
    const Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(m);
    for (int k = 0; k < 2; ++k) {
      push(es.eigenvalues()(k),
           es.eigenvectors()(0, k) * u.col(i) + es.eigenvectors()(1, k) * u.col(n + i));
    }
  }
  // Eigen's blocking heuristic divides by the column count.
  if (n_pos > 0) h.selfadjointView<Eigen::Lower>().rankUpdate(pos.leftCols(n_pos), 1.0);
  if (n_neg > 0) h.selfadjointView<Eigen::Lower>().rankUpdate(neg.leftCols(n_neg), -1.0);
  h.triangularView<Eigen::StrictlyUpper>() = h.transpose();

  if (problem.has_covariance_term() && problem.kind() != RelaxationKind::kSquared) {
    const Vector g = internal::CovarianceAdjoint(problem, ev.cov_residual);
    const double r = ev.cov_norm;
    h.noalias() -= (problem.lambda() / (r * r * r)) * g * g.transpose();
  }
  return h;
}

constexpr double kFinalStageTolFactor = 0.01;

struct StageResult {
  Vector x;
  double smoothed = 0.0;
  double last_rel_decrease = std::numeric_limits<double>::infinity();
  int iterations = 0;
};

StageResult MajorizeStage(const RelaxedProblem& problem, Vector x, double eps,
                          const SolverConfig& cfg, double tol) {
  StageResult r;
  TermEval ev = internal::EvaluateTerms(problem, x, eps);
  for (int it = 0; it < cfg.max_inner; ++it) {
    const Vector next = SolveWeightedQuadratic(problem, ev.ca, ev.cb,
                                               internal::CovarianceCurvature(problem, ev));
    TermEval ev_next = internal::EvaluateTerms(problem, next, eps);
    ++r.iterations;
    if (!(ev_next.value <= ev.value)) {
      // Roundoff at the fixed point; keep the better iterate.
      r.last_rel_decrease = 0.0;
      break;
    }
    r.last_rel_decrease = RelativeDecrease(ev.value, ev_next.value);
    x = next;
    ev = std::move(ev_next);
    if (r.last_rel_decrease <= tol) break;
  }
  r.x = std::move(x);
  r.smoothed = ev.value;
  return r;
}

StageResult NewtonStage(const RelaxedProblem& problem, Vector x, double eps,
                        const SolverConfig& cfg, double tol) {
  constexpr double kArmijo = 1e-4;
  constexpr double kShrink = 0.5;
  StageResult r;
  TermEval ev = internal::EvaluateTerms(problem, x, eps);
  for (int it = 0; it < cfg.max_inner; ++it) {
    const Vector g = internal::AssembleGradient(problem, ev);
    Vector step = SolveDense(NewtonHessian(problem, ev), -g);
    double slope = g.dot(step);
    if (!(slope < 0)) {
      step = -g;
      slope = -g.squaredNorm();
    }
    ++r.iterations;
    if (-slope <= 2.0 * tol * std::max(std::abs(ev.value), kTiny)) {
      r.last_rel_decrease = -0.5 * slope / std::max(std::abs(ev.value), kTiny);
      break;
    }
    double alpha = 1.0;
    bool accepted = false;
    TermEval trial;
    for (int ls = 0; ls < 60; ++ls) {
      trial = internal::EvaluateTerms(problem, x + alpha * step, eps);
      if (trial.value <= ev.value + kArmijo * alpha * slope) {
        accepted = true;
        break;
      }
      alpha *= kShrink;
    }
    if (!accepted) {
      r.last_rel_decrease = 0.0;
      break;
    }
    r.last_rel_decrease = RelativeDecrease(ev.value, trial.value);
    x += alpha * step;
    ev = std::move(trial);
    if (r.last_rel_decrease <= tol) break;
  }
  r.x = std::move(x);
  r.smoothed = ev.value;
  return r;
}

SolveReport ClosedFormSquared(const RelaxedProblem& problem) {
  const int n = problem.pairs().size();
  const Vector ones = Vector::Ones(n);
  const double c_cov = problem.has_covariance_term() ? 2.0 * problem.lambda() : 0.0;
  const Vector x = SolveWeightedQuadratic(problem, ones, ones, c_cov);
  SolveReport report;
  report.solution = problem.Unpack(x);
  report.solution.objective = problem.Value(x);
  report.converged = true;
  report.inner_iterations = 1;
  report.final_smoothed = report.solution.objective;
  report.stage_trace.push_back(report.solution.objective);
  return report;
}

}  // namespace

void SolverConfig::Validate() const {
  if (!(rel_tol > 0)) throw std::invalid_argument("solver: rel_tol must be positive");
  if (!(eps_decay > 0 && eps_decay < 1)) {
    throw std::invalid_argument("solver: eps_decay must lie in (0, 1)");
  }
  if (!(eps_min > 0)) throw std::invalid_argument("solver: eps_min must be positive");
  if (eps_init > 0 && !(eps_min < eps_init)) {
    throw std::invalid_argument("solver: eps_min must be below eps_init");
  }
  if (max_outer < 1 || max_inner < 1) {
    throw std::invalid_argument("solver: iteration caps must be >= 1");
  }
  if (!(lambda >= 0)) throw std::invalid_argument("solver: lambda must be >= 0");
}

SolveReport SolveRelaxed(const RelaxedProblem& problem, const SolverConfig& cfg,
                         const Vector& start) {
  cfg.Validate();
  const auto t0 = std::chrono::steady_clock::now();
  auto elapsed = [&] {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  };

  if (problem.kind() == RelaxationKind::kSquared) {
    SolveReport report = ClosedFormSquared(problem);
    report.wall_time = elapsed();
    return report;
  }

  Vector x = start.size() > 0 ? start : InitialPoint(problem, cfg);
  if (x.size() != problem.num_variables()) throw DimensionError("solver: bad start vector");

  double eps = cfg.eps_init;
  if (!(eps > 0)) {
    const double scale = problem.ResidualScale();
    eps = scale > 0 ? 1e-2 * scale : 1e-2;
    eps = std::max(eps, 10.0 * cfg.eps_min);
  }

  // MM crawls when the covariance norm dominates the majorizer.
  const bool newton =
      cfg.engine == SolverEngine::kNewton ||
      (cfg.engine == SolverEngine::kAuto &&
       ((problem.kind() == RelaxationKind::kSymmetric && problem.power() == NormPower::kInf) ||
        problem.has_covariance_term()));

  SolveReport report;
  StageResult stage;
  for (int outer = 0; outer < cfg.max_outer; ++outer) {
    // MM converges linearly, so a small last decrease can still leave a gap
    // several times larger; the last stage stops well inside rel_tol.
    const double tol = eps <= cfg.eps_min ? kFinalStageTolFactor * cfg.rel_tol : cfg.rel_tol;
    stage = newton ? NewtonStage(problem, std::move(x), eps, cfg, tol)
                   : MajorizeStage(problem, std::move(x), eps, cfg, tol);
    x = stage.x;
    report.inner_iterations += stage.iterations;
    report.stage_trace.push_back(stage.smoothed);
    report.final_eps = eps;
    if (eps <= cfg.eps_min) break;
    eps = std::max(eps * cfg.eps_decay, cfg.eps_min);
  }
  report.final_smoothed = stage.smoothed;
  report.converged =
      stage.last_rel_decrease <= cfg.rel_tol && report.final_eps <= 10.0 * cfg.eps_min;
  report.solution = problem.Unpack(x);
  report.solution.objective = problem.Value(x);
  report.wall_time = elapsed();
  return report;
}

SolveReport SolveRelaxationOrth(const PointPairs& pts, const SolverConfig& cfg) {
  if (cfg.use_translations) {
    throw std::invalid_argument("solve_relaxation_orth: use_translations must be false");
  }
  return SolveRelaxed(RelaxedProblem(pts, RelaxationKind::kSymmetric, cfg.p, false), cfg);
}

SolveReport SolveRelaxationRigid(const PointPairs& pts, const SolverConfig& cfg) {
  if (!cfg.use_translations) {
    throw std::invalid_argument("solve_relaxation_rigid: use_translations must be true");
  }
  return SolveRelaxed(RelaxedProblem(pts, RelaxationKind::kSymmetric, cfg.p, true), cfg);
}

SolveReport SolveNonSym(const PointPairs& pts, const SolverConfig& cfg) {
  return SolveRelaxed(
      RelaxedProblem(pts, RelaxationKind::kNonSymmetric, cfg.p, cfg.use_translations), cfg);
}

SolveReport SolveWithCovariance(const PointPairs& pts, const CovariancePair& cov,
                                const SolverConfig& cfg, CovarianceVariant variant) {
  RelaxationKind kind = RelaxationKind::kSymmetric;
  if (variant == CovarianceVariant::kNonSymmetric) kind = RelaxationKind::kNonSymmetric;
  if (variant == CovarianceVariant::kSquared) kind = RelaxationKind::kSquared;
  RelaxedProblem problem(pts, kind, cfg.p, cfg.use_translations);
  problem.WithCovariance(cov, cfg.lambda);
  return SolveRelaxed(problem, cfg);
}

}  // namespace srp
