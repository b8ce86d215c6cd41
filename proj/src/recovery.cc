#include "srp/recovery.h"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace srp {
namespace {

Vector RandomUnit(int d, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector v(d);
  do {
    for (int i = 0; i < d; ++i) v(i) = normal(rng);
  } while (v.norm() == 0.0);
  return v / v.norm();
}

void FillGaussian(Matrix& m, double stddev, Rng& rng) {
  std::normal_distribution<double> normal(0.0, stddev);
  for (Eigen::Index j = 0; j < m.cols(); ++j)
    for (Eigen::Index i = 0; i < m.rows(); ++i) m(i, j) = normal(rng);
}

std::vector<bool> InlierMask(int n, const std::vector<int>& inlier_set) {
  std::vector<bool> mask(n, false);
  for (int i : inlier_set) {
    if (i < 0 || i >= n) throw DataError("inlier index " + std::to_string(i) + " out of range");
    mask[i] = true;
  }
  return mask;
}

// Signed margin of one side and its subgradient with respect to (u, alpha).
double SideMargin(const Matrix& x, const std::vector<bool>& mask, const Vector& u, double alpha,
                  Vector* grad) {
  const Eigen::RowVectorXd proj = (u.transpose() * x).array() + alpha;
  double margin = 0.0;
  if (grad) *grad = Vector::Zero(u.size() + 1);
  for (Eigen::Index i = 0; i < x.cols(); ++i) {
    const double sign = mask[i] ? 1.0 : -1.0;
    margin += sign * std::abs(proj(i));
    if (grad) {
      const double s = sign * (proj(i) > 0 ? 1.0 : (proj(i) < 0 ? -1.0 : 0.0));
      grad->head(u.size()) += s * x.col(i);
      (*grad)(u.size()) += s;
    }
  }
  return margin;
}

double MarginWithGrad(const PointPairs& pts, const std::vector<bool>& mask, const Vector& u,
                      double alpha, Vector* grad) {
  Vector gp, gq;
  const double mp = SideMargin(pts.p(), mask, u, alpha, grad ? &gp : nullptr);
  const double mq = SideMargin(pts.q(), mask, u, alpha, grad ? &gq : nullptr);
  if (grad) *grad = mp <= mq ? gp : gq;
  return std::min(mp, mq);
}

// Minimizes the margin over the unit sphere of (u, alpha); the alpha
// coordinate is pinned to zero for the linear check.
DipReport SearchDip(const PointPairs& pts, const std::vector<int>& inlier_set, int probes,
                    int refine_steps, std::uint64_t seed, bool affine) {
  const int d = pts.dim();
  const int dim = affine ? d + 1 : d;
  const std::vector<bool> mask = InlierMask(pts.size(), inlier_set);
  Rng rng(seed);

  DipReport report;
  report.min_margin = std::numeric_limits<double>::infinity();
  Vector best;
  auto consider = [&](const Vector& v) {
    const double m = MarginWithGrad(pts, mask, v.head(d), affine ? v(d) : 0.0, nullptr);
    ++report.probes;
    if (m < report.min_margin) {
      report.min_margin = m;
      best = v;
    }
  };
  for (int k = 0; k < dim; ++k) consider(Vector::Unit(dim, k));
  for (int k = 0; k < probes; ++k) consider(RandomUnit(dim, rng));

  Vector v = best;
  constexpr double kStep = 0.2;
  for (int k = 1; k <= refine_steps; ++k) {
    Vector g;
    MarginWithGrad(pts, mask, v.head(d), affine ? v(d) : 0.0, &g);
    if (!affine) g.conservativeResize(d);
    // Tangential part only; the margin is positively homogeneous.
    g -= g.dot(v) * v;
    if (g.norm() == 0.0) break;
    v -= (kStep / std::sqrt(static_cast<double>(k))) * g / g.norm();
    v /= v.norm();
    consider(v);
  }
  report.worst_direction = best.head(d);
  report.worst_offset = affine ? best(d) : 0.0;
  report.holds_sampled = report.min_margin > 0;
  return report;
}

}  // namespace

void NoiseParams::Validate() const {
  if (n_inliers < 0 || n_outliers < 0 || n_inliers + n_outliers < 1) {
    throw std::invalid_argument("noise params: need n_inliers, n_outliers >= 0 with a positive sum");
  }
  if (d < 1) throw std::invalid_argument("noise params: d must be >= 1");
  if (!(sigma >= 0) || !(sigma_t >= 0)) {
    throw std::invalid_argument("noise params: sigma and sigma_t must be >= 0");
  }
}

SyntheticInstance GenerateInstance(const NoiseParams& params) {
  params.Validate();
  const int d = params.d;
  const int n = params.n_inliers + params.n_outliers;
  const double root_d = std::sqrt(static_cast<double>(d));
  Rng rng(params.seed);

  RigidMotion truth;
  truth.rotation = RandomOrthogonal(d, rng);
  Matrix t0(d, 1);
  FillGaussian(t0, params.sigma_t / root_d, rng);
  truth.translation = t0.col(0);

  Matrix p(d, n);
  Matrix q(d, n);
  FillGaussian(p, 1.0 / root_d, rng);
  Matrix noise(d, params.n_inliers);
  FillGaussian(noise, params.sigma / root_d, rng);
  q.leftCols(params.n_inliers) =
      (truth.rotation * p.leftCols(params.n_inliers)).colwise() + truth.translation;
  q.leftCols(params.n_inliers) += noise;
  Matrix outliers(d, params.n_outliers);
  const double spread = std::sqrt(1.0 + params.sigma_t * params.sigma_t + params.sigma * params.sigma);
  FillGaussian(outliers, spread / root_d, rng);
  q.rightCols(params.n_outliers) = outliers;

  std::vector<int> inliers(params.n_inliers);
  std::iota(inliers.begin(), inliers.end(), 0);
  return {PointPairs(std::move(p), std::move(q)), std::move(truth), std::move(inliers), params};
}

SemisupervisedInstance GenerateSemisupervised(int d, int n, int n_tilde, int n_out, double sigma,
                                              std::uint64_t seed) {
  if (d < 1 || n < 0 || n_tilde < 1 || n_out < 0 || n + n_out < 1) {
    throw std::invalid_argument("semisupervised generator: invalid sizes");
  }
  if (n_out > n_tilde) throw std::invalid_argument("semisupervised generator: need n_out <= n_tilde");
  if (n_out > 0 && n_tilde < 2) {
    throw std::invalid_argument("semisupervised generator: mismatches need n_tilde >= 2");
  }
  const double root_d = std::sqrt(static_cast<double>(d));
  Rng rng(seed);
  RigidMotion truth{RandomOrthogonal(d, rng), Vector::Zero(d)};

  auto noisy_pairs = [&](int count, Matrix& p, Matrix& q) {
    p.resize(d, count);
    FillGaussian(p, 1.0 / root_d, rng);
    Matrix noise(d, count);
    FillGaussian(noise, sigma / root_d, rng);
    q = truth.rotation * p + noise;
  };
  Matrix p_in, q_in, pool_p, pool_q;
  noisy_pairs(n, p_in, q_in);
  noisy_pairs(n_tilde, pool_p, pool_q);

  // Mismatches: distinct pool indices i, each paired with a different pool index j.
  std::vector<int> order(n_tilde);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  std::uniform_int_distribution<int> offset(1, n_tilde - 1);
  Matrix p(d, n + n_out);
  Matrix q(d, n + n_out);
  p.leftCols(n) = p_in;
  q.leftCols(n) = q_in;
  for (int k = 0; k < n_out; ++k) {
    const int i = order[k];
    const int j = (i + offset(rng)) % n_tilde;
    p.col(n + k) = pool_p.col(i);
    q.col(n + k) = pool_q.col(j);
  }

  std::vector<int> perm(n_tilde);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  Matrix shuffled(d, n_tilde);
  for (int k = 0; k < n_tilde; ++k) shuffled.col(k) = pool_q.col(perm[k]);

  std::vector<int> inliers(n);
  std::iota(inliers.begin(), inliers.end(), 0);
  return {PointPairs(std::move(p), std::move(q)), std::move(pool_p), std::move(shuffled),
          std::move(truth), std::move(inliers)};
}

double DipMargin(const PointPairs& pts, const std::vector<int>& inlier_set, const Vector& u,
                 double alpha) {
  if (u.size() != pts.dim()) throw DimensionError("dip margin: direction has wrong length");
  return MarginWithGrad(pts, InlierMask(pts.size(), inlier_set), u, alpha, nullptr);
}

DipReport CheckLinearDip(const PointPairs& pts, const std::vector<int>& inlier_set, int probes,
                         int refine_steps, std::uint64_t seed) {
  if (probes < 1) throw std::invalid_argument("dip check: probes must be >= 1");
  return SearchDip(pts, inlier_set, probes, refine_steps, seed, false);
}

DipReport CheckAffineDip(const PointPairs& pts, const std::vector<int>& inlier_set, int probes,
                         int refine_steps, std::uint64_t seed) {
  if (probes < 1) throw std::invalid_argument("dip check: probes must be >= 1");
  return SearchDip(pts, inlier_set, probes, refine_steps, seed, true);
}

DipConstruction ConstructDipInstance(int d, int copies, double scale, int n_outliers,
                                     double outlier_mass, bool affine, std::uint64_t seed) {
  if (d < 1 || copies < 1 || !(scale > 0) || n_outliers < 0 || !(outlier_mass >= 0)) {
    throw std::invalid_argument("dip construction: invalid parameters");
  }
  Rng rng(seed);
  const int n_in = 2 * copies * d;
  const int n = n_in + n_outliers;
  const double axis_mass = copies * scale;
  const double budget = outlier_mass * axis_mass;

  RigidMotion truth{RandomOrthogonal(d, rng), Vector::Zero(d)};
  if (affine && n_outliers > 0) {
    truth.translation = RandomUnit(d, rng) * std::min(0.3, budget / (2.0 * n_outliers));
  } else if (affine) {
    truth.translation = RandomUnit(d, rng) * 0.3;
  }

  Matrix p(d, n);
  int col = 0;
  for (int k = 0; k < d; ++k)
    for (int sign : {1, -1})
      for (int c = 0; c < copies; ++c) p.col(col++) = sign * scale * Vector::Unit(d, k);
  Matrix q(d, n);
  q.leftCols(n_in) = (truth.rotation * p.leftCols(n_in)).colwise() + truth.translation;
  const double q_share = affine ? 0.5 : 1.0;
  for (int k = 0; k < n_outliers; ++k) {
    p.col(n_in + k) = RandomUnit(d, rng) * (budget / n_outliers);
    q.col(n_in + k) = RandomUnit(d, rng) * (q_share * budget / n_outliers);
  }

  DipConstruction out{
      SyntheticInstance{PointPairs(std::move(p), std::move(q)), truth, {}, NoiseParams{}}, 0.0};
  out.instance.inlier_set.resize(n_in);
  std::iota(out.instance.inlier_set.begin(), out.instance.inlier_set.end(), 0);
  out.instance.params.d = d;
  out.instance.params.n_inliers = n_in;
  out.instance.params.n_outliers = n_outliers;
  out.instance.params.seed = seed;
  if (affine) {
    out.certified_slack = std::min(axis_mass * (1.0 - outlier_mass),
                                   static_cast<double>(copies * d - n_outliers));
  } else {
    out.certified_slack = axis_mass * (2.0 - outlier_mass);
  }
  return out;
}

RecoveryErrors RecoveryMetrics(const RigidMotion& estimate, const RigidMotion& truth) {
  if (estimate.rotation.rows() != truth.rotation.rows() ||
      estimate.translation.size() != truth.translation.size()) {
    throw DimensionError("recovery metrics: dimension mismatch");
  }
  RecoveryErrors e;
  e.rot_err = SpectralNorm(estimate.rotation - truth.rotation);
  const double t_norm = truth.translation.norm();
  const double diff = (estimate.translation - truth.translation).norm();
  e.trans_err = t_norm > 0 ? diff / t_norm : diff;
  return e;
}

RecoveryErrors RecoveryMetrics(const AlignmentResult& result, const RigidMotion& truth) {
  return RecoveryMetrics(result.motion, truth);
}

}  // namespace srp
