#include "srp/objectives.h"

#include <algorithm>
#include <cmath>

#include <Eigen/SVD>

namespace srp {
namespace {

void CheckSquare(const Matrix& a, const PointPairs& pts, const char* where) {
  if (a.rows() != pts.dim() || a.cols() != pts.dim()) {
    throw DimensionError(std::string(where) + ": matrix is " + std::to_string(a.rows()) + "x" +
                         std::to_string(a.cols()) + ", points have dimension " +
                         std::to_string(pts.dim()));
  }
}

void CheckVector(const Vector& v, int d, const char* where) {
  if (v.size() != d) {
    throw DimensionError(std::string(where) + ": vector of length " + std::to_string(v.size()) +
                         ", expected " + std::to_string(d));
  }
}

}  // namespace

NormPower ParseNormPower(std::string_view text) {
  if (text == "1") return NormPower::kOne;
  if (text == "2") return NormPower::kTwo;
  if (text == "inf" || text == "Inf" || text == "INF") return NormPower::kInf;
  throw std::invalid_argument("norm power must be one of 1, 2, inf; got '" + std::string(text) +
                              "'");
}

std::string ToString(NormPower p) {
  switch (p) {
    case NormPower::kOne: return "1";
    case NormPower::kTwo: return "2";
    case NormPower::kInf: return "inf";
  }
  return "?";
}

PointPairs::PointPairs(Matrix p, Matrix q) : p_(std::move(p)), q_(std::move(q)) {
  if (p_.rows() != q_.rows() || p_.cols() != q_.cols()) {
    throw DimensionError("point pairs: P is " + std::to_string(p_.rows()) + "x" +
                         std::to_string(p_.cols()) + " but Q is " + std::to_string(q_.rows()) +
                         "x" + std::to_string(q_.cols()));
  }
  if (p_.cols() < 1 || p_.rows() < 1) throw DataError("point pairs: need n >= 1 and d >= 1");
  if (!p_.allFinite() || !q_.allFinite()) throw DataError("point pairs: non-finite coordinate");
}

PointPairs PointPairs::Select(const std::vector<int>& indices) const {
  Matrix p(dim(), static_cast<Eigen::Index>(indices.size()));
  Matrix q(dim(), static_cast<Eigen::Index>(indices.size()));
  for (size_t k = 0; k < indices.size(); ++k) {
    p.col(k) = p_.col(indices[k]);
    q.col(k) = q_.col(indices[k]);
  }
  return PointPairs(std::move(p), std::move(q));
}

RigidMotion RigidMotion::Identity(int d) { return {Matrix::Identity(d, d), Vector::Zero(d)}; }

bool RigidMotion::IsOrthogonal(double tol) const {
  const auto d = rotation.rows();
  return rotation.cols() == d &&
         (rotation.transpose() * rotation - Matrix::Identity(d, d)).norm() <= tol;
}

CovariancePair CovariancePair::FromPools(const Matrix& pool_p, const Matrix& pool_q) {
  if (pool_p.rows() != pool_q.rows()) {
    throw DimensionError("covariance: pools have different dimensions");
  }
  if (pool_p.cols() == 0 || pool_q.cols() == 0) throw DataError("covariance: empty pool");
  CovariancePair c;
  c.cov_p = pool_p * pool_p.transpose() / static_cast<double>(pool_p.cols());
  c.cov_q = pool_q * pool_q.transpose() / static_cast<double>(pool_q.cols());
  c.sigma = Eigen::JacobiSVD<Matrix>(c.cov_p).singularValues();
  c.tau = Eigen::JacobiSVD<Matrix>(c.cov_q).singularValues();
  return c;
}

double PowerMean(double x, double y, NormPower p) {
  switch (p) {
    case NormPower::kOne: return 0.5 * (x + y);
    case NormPower::kTwo: return std::sqrt(0.5 * (x * x + y * y));
    case NormPower::kInf: return std::max(x, y);
  }
  return 0.0;
}

double EnergyRobust(const RigidMotion& m, const PointPairs& pts) {
  CheckSquare(m.rotation, pts, "energy_robust");
  CheckVector(m.translation, pts.dim(), "energy_robust");
  return ((m.rotation * pts.p() - pts.q()).colwise() + m.translation).colwise().norm().sum();
}

double EnergyProcrustes(const RigidMotion& m, const PointPairs& pts) {
  CheckSquare(m.rotation, pts, "energy_procrustes");
  CheckVector(m.translation, pts.dim(), "energy_procrustes");
  return ((m.rotation * pts.p() - pts.q()).colwise() + m.translation).squaredNorm();
}

double EnergyRelaxedRigid(const Matrix& a, const Vector& t, const Vector& s,
                          const PointPairs& pts, NormPower p) {
  CheckSquare(a, pts, "energy_relaxed");
  CheckVector(t, pts.dim(), "energy_relaxed");
  CheckVector(s, pts.dim(), "energy_relaxed");
  const Eigen::RowVectorXd fwd = ((a * pts.p() - pts.q()).colwise() + t).colwise().norm();
  const Eigen::RowVectorXd bwd =
      ((a.transpose() * pts.q() - pts.p()).colwise() + s).colwise().norm();
  double total = 0.0;
  for (int i = 0; i < pts.size(); ++i) total += PowerMean(fwd(i), bwd(i), p);
  return total;
}

double EnergyRelaxedOrth(const Matrix& a, const PointPairs& pts, NormPower p) {
  const Vector zero = Vector::Zero(pts.dim());
  return EnergyRelaxedRigid(a, zero, zero, pts, p);
}

double EnergyTranslated(const Matrix& a, const Vector& p0, const Vector& q0,
                        const PointPairs& pts, NormPower p) {
  CheckVector(p0, pts.dim(), "energy_translated");
  CheckVector(q0, pts.dim(), "energy_translated");
  const PointPairs shifted(pts.p().colwise() - p0, pts.q().colwise() - q0);
  return EnergyRelaxedOrth(a, shifted, p);
}

double EnergyNonSym(const Matrix& a, const Vector& t, const PointPairs& pts) {
  CheckSquare(a, pts, "energy_nonsym");
  CheckVector(t, pts.dim(), "energy_nonsym");
  return ((a * pts.p() - pts.q()).colwise() + t).colwise().norm().sum();
}

double CovarianceEnergy(const Matrix& a, const CovariancePair& cov) {
  if (a.rows() != cov.cov_p.rows() || a.cols() != cov.cov_p.cols() ||
      cov.cov_q.rows() != a.rows() || cov.cov_q.cols() != a.cols()) {
    throw DimensionError("covariance_energy: dimension mismatch");
  }
  return (a * cov.cov_p - cov.cov_q * a).norm();
}

}  // namespace srp
