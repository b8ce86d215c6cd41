// Energy functions of the robust Procrustes family and their convex
// relaxations. Everything here is a pure evaluator.
#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "srp/numerics.h"

namespace srp {

// Norm power of the symmetrized relaxation. Only the three powers with a
// second-order-cone form are supported.
enum class NormPower { kOne, kTwo, kInf };

NormPower ParseNormPower(std::string_view text);  // "1", "2", "inf"
std::string ToString(NormPower p);

// Ordered correspondences p_i <-> q_i stored as the columns of two d x n
// matrices.
class PointPairs {
 public:
  PointPairs(Matrix p, Matrix q);

  int dim() const { return static_cast<int>(p_.rows()); }
  int size() const { return static_cast<int>(p_.cols()); }
  const Matrix& p() const { return p_; }
  const Matrix& q() const { return q_; }

  // Subset of the pairs, in the given order.
  PointPairs Select(const std::vector<int>& indices) const;

 private:
  Matrix p_;
  Matrix q_;
};

struct RigidMotion {
  Matrix rotation;
  Vector translation;

  static RigidMotion Identity(int d);
  bool IsOrthogonal(double tol = 1e-8) const;
};

// Candidate (A, t, s) of the relaxation together with its objective value.
struct RelaxedSolution {
  Matrix a;
  Vector t;
  Vector s;
  double objective = 0.0;
  NormPower p = NormPower::kTwo;
};

// Non-centered second-moment matrices of two unpaired pools and their
// singular values.
struct CovariancePair {
  Matrix cov_p;
  Matrix cov_q;
  Vector sigma;
  Vector tau;

  // cov(X) = X X^T / n_X for each pool (columns are points).
  static CovariancePair FromPools(const Matrix& pool_p, const Matrix& pool_q);
};

// sum_i |R p_i - q_i + t|
double EnergyRobust(const RigidMotion& m, const PointPairs& pts);

// sum_i |R p_i - q_i + t|^2
double EnergyProcrustes(const RigidMotion& m, const PointPairs& pts);

// sum_i M_p(|A p_i - q_i|, |A^T q_i - p_i|), where M_p is the power mean
// ((x^p + y^p) / 2)^(1/p) and M_inf = max.
double EnergyRelaxedOrth(const Matrix& a, const PointPairs& pts, NormPower p);

// Same with the forward residual shifted by t and the backward one by s.
double EnergyRelaxedRigid(const Matrix& a, const Vector& t, const Vector& s,
                          const PointPairs& pts, NormPower p);

// EnergyRelaxedOrth on the pairs (p_i - p0, q_i - q0).
double EnergyTranslated(const Matrix& a, const Vector& p0, const Vector& q0,
                        const PointPairs& pts, NormPower p);

// Non-symmetrized relaxation, sum_i |A p_i + t - q_i|.
double EnergyNonSym(const Matrix& a, const Vector& t, const PointPairs& pts);

// |A cov_p - cov_q A|_F
double CovarianceEnergy(const Matrix& a, const CovariancePair& cov);

// Power mean of two nonnegative numbers.
double PowerMean(double x, double y, NormPower p);

}  // namespace srp
