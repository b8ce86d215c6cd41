// Dense linear-algebra helpers shared by every other module.
#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

#include <Eigen/Core>

namespace srp {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// All stochastic routines take the caller's generator; a fixed 64-bit seed
// makes every experiment replayable.
using Rng = std::mt19937_64;

// Shapes that do not fit together.
class DimensionError : public std::invalid_argument {
 public:
  explicit DimensionError(const std::string& what) : std::invalid_argument(what) {}
};

// Input data that cannot be used (non-finite entries, empty sets, ...).
class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

bool AllFinite(const Matrix& m);

struct SvdResult {
  Matrix u;
  Vector singular_values;  // nonincreasing, >= 0
  Matrix v;
};

// Full SVD of a square matrix, a = u * diag(singular_values) * v^T.
SvdResult Svd(const Matrix& a);

// Nearest orthogonal matrix in Frobenius norm, U V^T. No determinant
// correction: the result lies in O(d), not necessarily SO(d).
Matrix ProjectOrthogonal(const Matrix& a);

// Haar-distributed element of O(d).
Matrix RandomOrthogonal(int d, Rng& rng);

double SpectralNorm(const Matrix& a);

// Sum of Euclidean distances from v to the columns of points.
double SumOfDistances(const Matrix& points, const Vector& v);

/// Minimizer of the sum of distances to the columns of `points` (d x m).
///
/// Weiszfeld iteration with the Vardi-Zhang correction, so iterates that land
/// on a data point either stop there (when the point satisfies the
/// subgradient optimality condition) or step off it. On exit the nearest data
/// point is tested the same way, which makes majority points exact.
/// `tol` is a relative tolerance on the objective.
Vector GeometricMedian(const Matrix& points, double tol = 1e-10, int max_iter = 10000);

}  // namespace srp
