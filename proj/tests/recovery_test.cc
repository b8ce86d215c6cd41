#include <algorithm>
#include <cmath>

#include <gtest/gtest.h>

#include "oracles.h"
#include "srp/alignment.h"
#include "srp/recovery.h"

namespace srp {
namespace {

NoiseParams Params(int d, int n_in, int n_out, double sigma, double sigma_t, std::uint64_t seed) {
  NoiseParams np;
  np.d = d;
  np.n_inliers = n_in;
  np.n_outliers = n_out;
  np.sigma = sigma;
  np.sigma_t = sigma_t;
  np.seed = seed;
  return np;
}

TEST(GenerateInstance, NoiselessInliersAreExact) {
  const SyntheticInstance inst = GenerateInstance(Params(5, 30, 12, 0.0, 0.0, 1));
  EXPECT_EQ(inst.pts.size(), 42);
  ASSERT_EQ(inst.inlier_set.size(), 30u);
  EXPECT_TRUE(inst.truth.IsOrthogonal(1e-10));
  EXPECT_EQ(inst.truth.translation, Vector(Vector::Zero(5)));
  for (int i : inst.inlier_set) {
    EXPECT_LE((inst.truth.rotation * inst.pts.p().col(i) - inst.pts.q().col(i)).norm(), 1e-12);
  }
  const SyntheticInstance moved = GenerateInstance(Params(5, 30, 0, 0.0, 0.4, 1));
  for (int i : moved.inlier_set) {
    EXPECT_LE((moved.truth.rotation * moved.pts.p().col(i) + moved.truth.translation -
               moved.pts.q().col(i))
                  .norm(),
              1e-12);
  }
}

TEST(GenerateInstance, SameSeedSameInstance) {
  const SyntheticInstance a = GenerateInstance(Params(4, 10, 5, 0.1, 0.3, 9));
  const SyntheticInstance b = GenerateInstance(Params(4, 10, 5, 0.1, 0.3, 9));
  const SyntheticInstance c = GenerateInstance(Params(4, 10, 5, 0.1, 0.3, 10));
  EXPECT_EQ(a.pts.p(), b.pts.p());
  EXPECT_EQ(a.pts.q(), b.pts.q());
  EXPECT_NE(a.pts.q(), c.pts.q());
}

TEST(GenerateInstance, Validation) {
  EXPECT_THROW(GenerateInstance(Params(3, 0, 0, 0, 0, 1)), std::invalid_argument);
  EXPECT_THROW(GenerateInstance(Params(0, 3, 0, 0, 0, 1)), std::invalid_argument);
  EXPECT_THROW(GenerateInstance(Params(3, 3, 0, -1, 0, 1)), std::invalid_argument);
}

TEST(GenerateInstance, SecondMoments) {
  const double sigma = 0.02, sigma_t = 0.3;
  // Points, noise and outliers: one instance with 10^4 of each.
  const SyntheticInstance inst = GenerateInstance(Params(7, 10000, 10000, sigma, sigma_t, 2));
  double p2 = 0, xi2 = 0, q2 = 0;
  for (int i = 0; i < 10000; ++i) {
    p2 += inst.pts.p().col(i).squaredNorm();
    xi2 += (inst.truth.rotation * inst.pts.p().col(i) + inst.truth.translation - inst.pts.q().col(i))
               .squaredNorm();
    q2 += inst.pts.q().col(10000 + i).squaredNorm();
  }
  EXPECT_NEAR(p2 / 1e4, 1.0, 0.05);
  EXPECT_NEAR(xi2 / 1e4, sigma * sigma, 0.05 * sigma * sigma);
  EXPECT_NEAR(q2 / 1e4, 1 + sigma_t * sigma_t + sigma * sigma,
              0.05 * (1 + sigma_t * sigma_t + sigma * sigma));
  // Translations: 10^4 instances.
  double t2 = 0;
  for (int k = 0; k < 10000; ++k) {
    t2 += GenerateInstance(Params(7, 1, 0, sigma, sigma_t, 1000 + k)).truth.translation.squaredNorm();
  }
  EXPECT_NEAR(t2 / 1e4, sigma_t * sigma_t, 0.05 * sigma_t * sigma_t);
}

TEST(GenerateSemisupervised, ShapesAndPermutation) {
  const SemisupervisedInstance large = GenerateSemisupervised(30, 16, 100, 20, 0.01, 3);
  EXPECT_EQ(large.pts.dim(), 30);
  EXPECT_EQ(large.pts.size(), 36);
  EXPECT_EQ(large.unpaired_p.rows(), 30);
  EXPECT_EQ(large.unpaired_p.cols(), 100);
  EXPECT_EQ(large.unpaired_q.cols(), 100);
  EXPECT_EQ(large.truth.translation, Vector(Vector::Zero(30)));

  const SemisupervisedInstance clean = GenerateSemisupervised(5, 6, 40, 10, 0.0, 4);
  const Matrix mapped = clean.truth.rotation * clean.unpaired_p;
  std::vector<bool> used(40, false);
  for (int j = 0; j < 40; ++j) {
    int match = -1;
    for (int k = 0; k < 40; ++k) {
      if (!used[k] && (clean.unpaired_q.col(j) - mapped.col(k)).norm() <= 1e-9) match = k;
    }
    ASSERT_GE(match, 0) << "column " << j << " of the Q pool has no preimage";
    used[match] = true;
  }
  EXPECT_NE(clean.unpaired_q, mapped);  // actually reordered

  for (int i : clean.inlier_set) {
    EXPECT_LE((clean.truth.rotation * clean.pts.p().col(i) - clean.pts.q().col(i)).norm(), 1e-12);
  }
  // Mismatched pairs join distinct pool points.
  for (int k = 6; k < 16; ++k) {
    EXPECT_GT((clean.truth.rotation * clean.pts.p().col(k) - clean.pts.q().col(k)).norm(), 1e-6);
  }
  const SemisupervisedInstance none = GenerateSemisupervised(4, 8, 20, 0, 0.0, 5);
  EXPECT_EQ(none.pts.size(), 8);
  EXPECT_THROW(GenerateSemisupervised(4, 8, 20, 21, 0.0, 5), std::invalid_argument);
}

TEST(DipMargin, HomogeneousAndCounting) {
  Rng rng(6);
  const SyntheticInstance inst = GenerateInstance(Params(3, 20, 5, 0.0, 0.0, 7));
  const Vector u = oracle::GaussianVector(3, rng);
  EXPECT_NEAR(DipMargin(inst.pts, inst.inlier_set, 2.0 * u), 2.0 * DipMargin(inst.pts, inst.inlier_set, u),
              1e-12);
  EXPECT_NEAR(DipMargin(inst.pts, inst.inlier_set, Vector::Zero(3), 1.0), 20 - 5, 1e-12);
}

TEST(CheckLinearDip, NoOutliersHolds) {
  const SyntheticInstance inst = GenerateInstance(Params(4, 30, 0, 0.0, 0.0, 8));
  const DipReport rep = CheckLinearDip(inst.pts, inst.inlier_set, 200, 50, 1);
  EXPECT_TRUE(rep.holds_sampled);
  EXPECT_GT(rep.min_margin, 0);
  EXPECT_EQ(rep.holds_sampled, rep.min_margin > 0);
  EXPECT_NEAR(rep.worst_direction.norm(), 1.0, 1e-12);
}

TEST(CheckLinearDip, AxisMassFlip) {
  // Inliers +-c e_k, `copies` of each; one outlier along e_0 opposing the
  // inlier mass. Along u = e_0 the margin is 2 * copies * c - |outlier|.
  const int d = 3, copies = 2;
  const double c = 1.0;
  auto build = [&](double outlier) {
    Matrix p(d, 2 * copies * d + 1);
    int col = 0;
    for (int k = 0; k < d; ++k)
      for (int s : {1, -1})
        for (int r = 0; r < copies; ++r) p.col(col++) = s * c * Vector::Unit(d, k);
    p.col(col) = -outlier * Vector::Unit(d, 0);
    return PointPairs(p, p);
  };
  std::vector<int> inliers(2 * copies * d);
  for (int i = 0; i < static_cast<int>(inliers.size()); ++i) inliers[i] = i;

  const DipReport holds = CheckLinearDip(build(3.0), inliers, 500, 100, 2);
  EXPECT_TRUE(holds.holds_sampled);
  EXPECT_NEAR(holds.min_margin, 2 * copies * c - 3.0, 1e-6);

  const DipReport fails = CheckLinearDip(build(5.0), inliers, 500, 100, 2);
  EXPECT_FALSE(fails.holds_sampled);
  EXPECT_LE(fails.min_margin, 2 * copies * c - 5.0 + 1e-9);
  // The witness certifies the violation.
  EXPECT_LE(DipMargin(build(5.0), inliers, fails.worst_direction), 0.0);
}

TEST(CheckAffineDip, CountingProbe) {
  const SyntheticInstance ok = GenerateInstance(Params(3, 10, 0, 0.0, 0.3, 9));
  EXPECT_TRUE(CheckAffineDip(ok.pts, ok.inlier_set, 200, 50, 1).holds_sampled);

  const SyntheticInstance bad = GenerateInstance(Params(3, 10, 10, 0.0, 0.3, 9));
  const DipReport rep = CheckAffineDip(bad.pts, bad.inlier_set, 200, 50, 1);
  EXPECT_FALSE(rep.holds_sampled);
  EXPECT_LE(rep.min_margin, 0.0);
  const double norm = std::sqrt(rep.worst_direction.squaredNorm() + rep.worst_offset * rep.worst_offset);
  EXPECT_NEAR(norm, 1.0, 1e-12);
}

TEST(ConstructDipInstance, CertifiedAndChecked) {
  for (bool affine : {false, true}) {
    for (int d : {2, 5}) {
      const DipConstruction c = ConstructDipInstance(d, 4, 1.0, 3, 0.6, affine, 10 + d);
      EXPECT_GT(c.certified_slack, 0.0);
      const SyntheticInstance& inst = c.instance;
      for (int i : inst.inlier_set) {
        EXPECT_LE((inst.truth.rotation * inst.pts.p().col(i) + inst.truth.translation -
                   inst.pts.q().col(i))
                      .norm(),
                  1e-12);
      }
      const DipReport rep = affine ? CheckAffineDip(inst.pts, inst.inlier_set, 2000, 200, 3)
                                   : CheckLinearDip(inst.pts, inst.inlier_set, 2000, 200, 3);
      EXPECT_TRUE(rep.holds_sampled);
    }
  }
  // Outlier mass beyond the inlier mass loses the certificate.
  EXPECT_LE(ConstructDipInstance(3, 2, 1.0, 2, 2.5, false, 1).certified_slack, 0.0);
  EXPECT_LE(ConstructDipInstance(3, 2, 1.0, 8, 0.5, true, 1).certified_slack, 0.0);
}

TEST(RecoveryTheorem, ExactOnDipInstances) {
  for (bool affine : {false, true}) {
    for (NormPower p : {NormPower::kOne, NormPower::kTwo, NormPower::kInf}) {
      const DipConstruction c = ConstructDipInstance(3, 3, 1.0, 4, 0.5, affine, 20);
      ASSERT_GT(c.certified_slack, 0.0);
      SolverConfig cfg;
      cfg.p = p;
      cfg.use_translations = affine;
      const AlignmentResult r = affine ? SrpRigid(c.instance.pts, cfg) : SrpOrth(c.instance.pts, cfg);
      const RecoveryErrors e = RecoveryMetrics(r, c.instance.truth);
      EXPECT_LE(e.rot_err, 1e-6) << ToString(p) << (affine ? " rigid" : " orth");
      if (affine) {
        EXPECT_LE(e.trans_err, 1e-6) << ToString(p);
      }
    }
  }
}

TEST(RecoveryMetrics, Examples) {
  Rng rng(11);
  const Matrix r0 = RandomOrthogonal(4, rng);
  const Vector t0 = oracle::GaussianVector(4, rng);
  const RecoveryErrors same = RecoveryMetrics(RigidMotion{r0, t0}, RigidMotion{r0, t0});
  EXPECT_EQ(same.rot_err, 0.0);
  EXPECT_EQ(same.trans_err, 0.0);

  EXPECT_NEAR(RecoveryMetrics(RigidMotion{-r0, t0}, RigidMotion{r0, t0}).rot_err, 2.0, 1e-12);

  const Matrix r1 = RandomOrthogonal(4, rng);
  const Vector t1 = oracle::GaussianVector(4, rng);
  const RecoveryErrors e = RecoveryMetrics(RigidMotion{r1, t1}, RigidMotion{r0, t0});
  EXPECT_NEAR(e.rot_err, oracle::PowerIterationNorm(r1 - r0), 1e-10);
  EXPECT_NEAR(e.trans_err, (t1 - t0).norm() / t0.norm(), 1e-12);

  const RecoveryErrors zero_t = RecoveryMetrics(RigidMotion{r1, t1}, RigidMotion{r0, Vector::Zero(4)});
  EXPECT_NEAR(zero_t.trans_err, t1.norm(), 1e-12);
  EXPECT_THROW(RecoveryMetrics(RigidMotion{r1, t1}, RigidMotion{Matrix::Identity(3, 3), Vector::Zero(3)}),
               DimensionError);
}

}  // namespace
}  // namespace srp
