#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

#include "srp/alignment.h"

namespace srp {
namespace {

constexpr double kMedianTol = 1e-10;
constexpr double kRatioFloor = 1e-12;

Vector RobustTranslation(const PointPairs& pts, const Matrix& r) {
  return GeometricMedian(pts.q() - r * pts.p(), kMedianTol);
}

// Projects the relaxed A and evaluates the robust energy of the motion.
AlignmentResult Project(const PointPairs& pts, SolveReport report, bool with_translation,
                        std::string method) {
  AlignmentResult out;
  const Matrix r = ProjectOrthogonal(report.solution.a);
  out.motion.rotation = r;
  out.motion.translation =
      with_translation ? RobustTranslation(pts, r) : Vector(Vector::Zero(pts.dim()));
  out.achieved_energy = EnergyRobust(out.motion, pts);
  out.lower_bound = report.solution.objective;
  out.ratio = ApproximationRatio(out.achieved_energy, out.lower_bound);
  out.method = std::move(method);
  out.solve_report = std::move(report);
  return out;
}

std::string SrpTag(NormPower p) { return "srp" + ToString(p); }

double ResidualScale(const PointPairs& pts) {
  return RelaxedProblem(pts, RelaxationKind::kSymmetric, NormPower::kTwo, false).ResidualScale();
}

}  // namespace

double ApproximationRatio(double achieved, double lower_bound) {
  if (std::isnan(lower_bound)) return std::numeric_limits<double>::quiet_NaN();
  return achieved / std::max(lower_bound, kRatioFloor);
}

AlignmentResult SrpOrth(const PointPairs& pts, const SolverConfig& cfg) {
  return Project(pts, SolveRelaxationOrth(pts, cfg), false, SrpTag(cfg.p));
}

AlignmentResult SrpRigid(const PointPairs& pts, const SolverConfig& cfg) {
  return Project(pts, SolveRelaxationRigid(pts, cfg), true, SrpTag(cfg.p));
}

AlignmentResult NonSymPipeline(const PointPairs& pts, const SolverConfig& cfg) {
  return Project(pts, SolveNonSym(pts, cfg), cfg.use_translations, "nonsym");
}

AlignmentResult SquaredPipeline(const PointPairs& pts, const SolverConfig& cfg) {
  const RelaxedProblem problem(pts, RelaxationKind::kSquared, cfg.p, cfg.use_translations);
  AlignmentResult out =
      Project(pts, SolveRelaxed(problem, cfg), cfg.use_translations, "srp_squared");
  out.lower_bound = std::numeric_limits<double>::quiet_NaN();
  out.ratio = std::numeric_limits<double>::quiet_NaN();
  return out;
}

RigidMotion WeightedProcrustes(const PointPairs& pts, const Vector& w, bool with_translation) {
  if (w.size() != pts.size()) throw DimensionError("weighted_procrustes: weight count mismatch");
  if ((w.array() < 0).any() || !w.allFinite()) {
    throw std::invalid_argument("weighted_procrustes: weights must be finite and nonnegative");
  }
  const double total = w.sum();
  if (!(total > 0)) throw std::invalid_argument("weighted_procrustes: all weights are zero");

  const int d = pts.dim();
  Vector p_bar = Vector::Zero(d);
  Vector q_bar = Vector::Zero(d);
  if (with_translation) {
    p_bar = pts.p() * w / total;
    q_bar = pts.q() * w / total;
  }
  const Matrix cross =
      (pts.q().colwise() - q_bar) * w.asDiagonal() * (pts.p().colwise() - p_bar).transpose();
  RigidMotion m;
  m.rotation = ProjectOrthogonal(cross);
  m.translation = q_bar - m.rotation * p_bar;
  return m;
}

AlignmentResult IrlsRigid(const PointPairs& pts, const IrlsOptions& options) {
  const auto t0 = std::chrono::steady_clock::now();
  const double delta = options.delta > 0 ? options.delta : 1e-7 * std::max(ResidualScale(pts), 1e-300);
  const int n = pts.size();

  RigidMotion m = options.init ? *options.init
                               : WeightedProcrustes(pts, Vector::Ones(n), options.with_translation);
  if (!options.with_translation) m.translation = Vector::Zero(pts.dim());

  AlignmentResult out;
  double energy = EnergyRobust(m, pts);
  out.energy_trace.push_back(energy);
  for (int it = 0; it < options.max_iter && energy > 0; ++it) {
    const Vector r = ((m.rotation * pts.p() - pts.q()).colwise() + m.translation).colwise().norm();
    const Vector w = r.cwiseMax(delta).cwiseInverse();
    const RigidMotion next = WeightedProcrustes(pts, w, options.with_translation);
    const double next_energy = EnergyRobust(next, pts);
    out.energy_trace.push_back(next_energy);
    const double decrease = (energy - next_energy) / std::max(energy, 1e-300);
    if (next_energy <= energy) m = next;
    energy = std::min(energy, next_energy);
    if (decrease < options.tol) break;
  }
  out.motion = m;
  out.achieved_energy = energy;
  out.lower_bound = options.lower_bound;
  out.ratio = ApproximationRatio(out.achieved_energy, out.lower_bound);
  out.method = options.init ? "irls_init" : "irls";
  out.solve_report.converged = true;
  out.solve_report.inner_iterations = static_cast<int>(out.energy_trace.size()) - 1;
  out.solve_report.wall_time =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

double BalancingFactor(CovarianceVariant variant, NormPower p, const PointPairs& pts,
                       const CovariancePair& cov) {
  double spread = 0.0;
  for (Eigen::Index i = 0; i < cov.sigma.size(); ++i)
    for (Eigen::Index j = 0; j < cov.tau.size(); ++j)
      spread = std::max(spread, std::abs(cov.sigma(i) - cov.tau(j)));
  if (!(spread > 0)) {
    throw DataError(
        "balancing factor undefined: max_{i,j} |sigma_i - tau_j| over the covariance spectra is 0");
  }
  const Eigen::RowVectorXd np = pts.p().colwise().norm();
  const Eigen::RowVectorXd nq = pts.q().colwise().norm();
  double numerator = 0.0;
  for (int i = 0; i < pts.size(); ++i) {
    switch (variant) {
      case CovarianceVariant::kNonSymmetric:
        numerator += np(i);
        break;
      case CovarianceVariant::kSquared:
        numerator += 0.5 * (np(i) * np(i) + nq(i) * nq(i));
        break;
      case CovarianceVariant::kSymmetric:
        numerator += PowerMean(np(i), nq(i), p);
        break;
    }
  }
  return variant == CovarianceVariant::kSquared ? numerator / (spread * spread)
                                                : numerator / spread;
}

AlignmentResult SrpSemisupervised(const PointPairs& pts, const Matrix& unpaired_p,
                                  const Matrix& unpaired_q, double lambda_bar,
                                  CovarianceVariant variant, const SolverConfig& cfg) {
  if (!(lambda_bar >= 0)) throw std::invalid_argument("semisupervised: lambda_bar must be >= 0");
  if (unpaired_p.rows() != pts.dim() || unpaired_q.rows() != pts.dim()) {
    throw DimensionError("semisupervised: pool dimension differs from pair dimension");
  }
  const CovariancePair cov = CovariancePair::FromPools(unpaired_p, unpaired_q);
  SolverConfig local = cfg;
  local.use_translations = false;
  local.lambda = lambda_bar > 0 ? lambda_bar * BalancingFactor(variant, cfg.p, pts, cov) : 0.0;

  RelaxationKind kind = RelaxationKind::kSymmetric;
  std::string tag = SrpTag(cfg.p);
  if (variant == CovarianceVariant::kNonSymmetric) kind = RelaxationKind::kNonSymmetric, tag = "nonsym";
  if (variant == CovarianceVariant::kSquared) kind = RelaxationKind::kSquared, tag = "srp_squared";
  RelaxedProblem problem(pts, kind, cfg.p, false);
  problem.WithCovariance(cov, local.lambda);

  AlignmentResult out = Project(pts, SolveRelaxed(problem, local), false, tag);
  const Vector zero = Vector::Zero(pts.dim());
  const Matrix& r = out.motion.rotation;
  out.achieved_energy = problem.Value(problem.Pack(r, zero, zero));
  out.ratio = ApproximationRatio(out.achieved_energy, out.lower_bound);
  return out;
}

}  // namespace srp
