// Synthetic instances with known ground truth, dominance-of-inliers (DIP)
// checks, and recovery error metrics.
#pragma once

#include <cstdint>
#include <vector>

#include "srp/alignment.h"

namespace srp {

struct NoiseParams {
  double sigma = 0.0;    // relative noise strength, E|xi|^2 = sigma^2
  double sigma_t = 0.0;  // translation size, E|t0|^2 = sigma_t^2
  int n_inliers = 0;
  int n_outliers = 0;
  int d = 3;
  std::uint64_t seed = 0;

  void Validate() const;
};

struct SyntheticInstance {
  PointPairs pts;
  RigidMotion truth;
  std::vector<int> inlier_set;  // sorted column indices
  NoiseParams params;
};

/// Draws R0 Haar on O(d), t0 with N(0, sigma_t / sqrt(d)) coordinates, and
/// p_i with N(0, 1 / sqrt(d)) coordinates. Inliers come first:
/// q_i = R0 p_i + t0 + xi_i with N(0, sigma / sqrt(d)) noise coordinates.
/// Outlier q_i has N(0, sqrt(1 + sigma_t^2 + sigma^2) / sqrt(d)) coordinates,
/// so E|q_i|^2 is the same for every pair. The second argument of N(., .)
/// is a standard deviation.
SyntheticInstance GenerateInstance(const NoiseParams& params);

struct SemisupervisedInstance {
  PointPairs pts;        // n inlier pairs followed by n_out mismatched pool pairs
  Matrix unpaired_p;     // d x n_tilde
  Matrix unpaired_q;     // d x n_tilde, columns in random order
  RigidMotion truth;     // zero translation
  std::vector<int> inlier_set;
};

// Inlier pairs and the two pools follow the model above with sigma_t = 0.
// Each outlier pair joins pool point i with pool point j != i.
SemisupervisedInstance GenerateSemisupervised(int d, int n, int n_tilde, int n_out, double sigma,
                                              std::uint64_t seed);

struct DipReport {
  bool holds_sampled = false;   // min_margin > 0
  double min_margin = 0.0;      // smallest inlier-minus-outlier sum observed
  Vector worst_direction;       // u at the minimum
  double worst_offset = 0.0;    // alpha at the minimum (affine check only)
  int probes = 0;
};

// min over the P and Q sides of sum_{I} |<u, x_i> + alpha| - sum_{I^C} |<u, x_i> + alpha|.
double DipMargin(const PointPairs& pts, const std::vector<int>& inlier_set, const Vector& u,
                 double alpha = 0.0);

/// Linear DIP over unit vectors u: coordinate axes, `probes` random
/// directions, then `refine_steps` projected subgradient steps from the worst
/// probe. A nonpositive minimum certifies a violation; a positive one is
/// sampled evidence only.
DipReport CheckLinearDip(const PointPairs& pts, const std::vector<int>& inlier_set, int probes,
                         int refine_steps, std::uint64_t seed);

// Affine DIP over unit (u, alpha) in R^{d+1}; always includes (0, 1), whose
// margin is |I| - |I^C|.
DipReport CheckAffineDip(const PointPairs& pts, const std::vector<int>& inlier_set, int probes,
                         int refine_steps, std::uint64_t seed);

struct DipConstruction {
  SyntheticInstance instance;
  // Positive exactly when the construction satisfies its sufficient
  // condition for the (linear or affine) DIP.
  double certified_slack = 0.0;
};

/// Instance with hand-certifiable DIP: inliers are `copies` replicas of
/// +-scale * e_k for every axis k, and the outliers carry a fraction
/// `outlier_mass` < 1 of the per-axis inlier mass copies * scale. The
/// affine variant adds a translation and needs n_outliers < copies * d.
DipConstruction ConstructDipInstance(int d, int copies, double scale, int n_outliers,
                                     double outlier_mass, bool affine, std::uint64_t seed);

struct RecoveryErrors {
  double rot_err = 0.0;    // spectral norm of R - R0
  double trans_err = 0.0;  // |t - t0| / |t0|, or |t| when t0 = 0
};

RecoveryErrors RecoveryMetrics(const RigidMotion& estimate, const RigidMotion& truth);
RecoveryErrors RecoveryMetrics(const AlignmentResult& result, const RigidMotion& truth);

}  // namespace srp
