#include <algorithm>
#include <cmath>

#include "srp/solvers.h"

namespace srp {

double SubgradientOracle(const RelaxedProblem& problem, int budget, std::uint64_t seed) {
  constexpr int kEpochs = 40;
  constexpr double kShrink = 0.5;

  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector x(problem.num_variables());
  for (Eigen::Index i = 0; i < x.size(); ++i) x(i) = normal(rng);

  Vector best_x = x;
  double best = problem.Value(x);
  const int epoch_len = std::max(1, budget / kEpochs);
  // First epoch can travel about twice the distance from the start to the
  // origin plus the data scale.
  double c = (x.norm() + problem.ResidualScale() * std::sqrt(problem.dim()) + 1.0) /
             std::sqrt(static_cast<double>(epoch_len));

  int used = 0;
  while (used < budget) {
    x = best_x;
    for (int k = 1; k <= epoch_len && used < budget; ++k, ++used) {
      const Vector g = problem.Subgradient(x);
      const double gn = g.norm();
      if (gn == 0.0) return problem.Value(x);  // 0 is a subgradient: optimal
      x -= (c / std::sqrt(static_cast<double>(k))) * (g / gn);
      const double f = problem.Value(x);
      if (f < best) {
        best = f;
        best_x = x;
      }
    }
    c *= kShrink;
  }
  return best;
}

}  // namespace srp
