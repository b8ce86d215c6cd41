#include "srp/numerics.h"

#include <cmath>
#include <limits>

#include <Eigen/QR>
#include <Eigen/SVD>

namespace srp {
namespace {

// Iterates closer than this to a data point are treated as sitting on it.
constexpr double kAnchorRadius = 1e-12;

struct WeiszfeldState {
  Vector numerator;    // sum of x_j / |x_j - y| over non-anchor points
  double denominator;  // sum of 1 / |x_j - y|
  Vector pull;         // sum of (x_j - y) / |x_j - y|
  int anchored;        // points within kAnchorRadius of y
};

WeiszfeldState Accumulate(const Matrix& points, const Vector& y) {
  WeiszfeldState s{Vector::Zero(y.size()), 0.0, Vector::Zero(y.size()), 0};
  for (Eigen::Index j = 0; j < points.cols(); ++j) {
    const Vector diff = points.col(j) - y;
    const double dist = diff.norm();
    if (dist <= kAnchorRadius) {
      ++s.anchored;
      continue;
    }
    s.numerator += points.col(j) / dist;
    s.denominator += 1.0 / dist;
    s.pull += diff / dist;
  }
  return s;
}

}  // namespace

bool AllFinite(const Matrix& m) { return m.allFinite(); }

SvdResult Svd(const Matrix& a) {
  if (a.rows() != a.cols()) {
    throw DimensionError("svd: expected a square matrix, got " + std::to_string(a.rows()) +
                         "x" + std::to_string(a.cols()));
  }
  if (!a.allFinite()) throw DataError("svd: non-finite entries");
  // Two-sided Jacobi for small inputs (convergence threshold at machine
  // precision), divide-and-conquer above 16 columns.
  Eigen::BDCSVD<Matrix> svd(a, Eigen::ComputeFullU | Eigen::ComputeFullV);
  return {svd.matrixU(), svd.singularValues(), svd.matrixV()};
}

Matrix ProjectOrthogonal(const Matrix& a) {
  const SvdResult svd = Svd(a);
  return svd.u * svd.v.transpose();
}

Matrix RandomOrthogonal(int d, Rng& rng) {
  if (d < 1) throw DimensionError("random_orthogonal: dimension must be >= 1");
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix g(d, d);
  for (int j = 0; j < d; ++j)
    for (int i = 0; i < d; ++i) g(i, j) = normal(rng);
  Eigen::HouseholderQR<Matrix> qr(g);
  Matrix q = qr.householderQ();
  const Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int k = 0; k < d; ++k) {
    if (r(k, k) < 0) q.col(k) = -q.col(k);
  }
  return q;
}

double SpectralNorm(const Matrix& a) {
  if (a.size() == 0) return 0.0;
  Eigen::JacobiSVD<Matrix> svd(a);
  return svd.singularValues()(0);
}

double SumOfDistances(const Matrix& points, const Vector& v) {
  return (points.colwise() - v).colwise().norm().sum();
}

Vector GeometricMedian(const Matrix& points, double tol, int max_iter) {
  if (points.cols() == 0) throw DataError("geometric_median: empty point list");
  if (!(tol > 0)) throw std::invalid_argument("geometric_median: tol must be positive");
  if (!points.allFinite()) throw DataError("geometric_median: non-finite point");
  if (points.cols() == 1) return points.col(0);

  Vector y = points.rowwise().mean();
  double f = SumOfDistances(points, y);
  for (int iter = 0; iter < max_iter && f > 0; ++iter) {
    const WeiszfeldState s = Accumulate(points, y);
    if (s.denominator == 0.0) break;  // every point coincides with y
    const Vector t = s.numerator / s.denominator;
    Vector next;
    if (s.anchored == 0) {
      next = t;
    } else {
      const double r = s.pull.norm();
      if (r <= s.anchored) break;  // y is a data point satisfying 0 in the subdifferential
      const double keep = s.anchored / r;
      next = (1.0 - keep) * t + keep * y;
    }
    const double f_next = SumOfDistances(points, next);
    if (f_next > f) break;
    const bool small_step = f - f_next <= tol * f;
    y = next;
    f = f_next;
    if (small_step) break;
  }

  // Anchor test at the closest data point.
  Eigen::Index nearest = 0;
  (points.colwise() - y).colwise().squaredNorm().minCoeff(&nearest);
  const Vector anchor = points.col(nearest);
  const WeiszfeldState s = Accumulate(points, anchor);
  if (s.pull.norm() <= s.anchored || SumOfDistances(points, anchor) <= f) return anchor;
  return y;
}

}  // namespace srp
