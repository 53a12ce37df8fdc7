#pragma once

#include <algorithm>
#include <numeric>
#include <vector>

#include "emdoa/common.hpp"

namespace emdoa {

/// Source-to-truth association. permutation[k] is the estimate index assigned
/// to truth slot k; errors are signed (estimate - truth), in degrees.
struct MatchResult {
  std::vector<Index> permutation;
  VectorXd errors_deg;
};

/// Exhaustive minimum-sum-of-squares assignment. Source counts are small
/// (M <= 4 in practice), so all M! permutations are scanned.
inline MatchResult match_and_error(const VectorXd& estimate_deg, const VectorXd& truth_deg) {
  require(estimate_deg.size() == truth_deg.size(), "estimate and truth must have equal length");
  require(truth_deg.size() >= 1, "matching needs at least one source");
  const Index m = truth_deg.size();
  std::vector<Index> perm(m);
  std::iota(perm.begin(), perm.end(), Index{0});
  std::vector<Index> best = perm;
  double best_cost = std::numeric_limits<double>::infinity();
  do {
    double cost = 0.0;
    for (Index k = 0; k < m; ++k) {
      const double e = estimate_deg[perm[k]] - truth_deg[k];
      cost += e * e;
    }
    if (cost < best_cost) {
      best_cost = cost;
      best = perm;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));

  MatchResult out;
  out.permutation = std::move(best);
  out.errors_deg.resize(m);
  for (Index k = 0; k < m; ++k) out.errors_deg[k] = estimate_deg[out.permutation[k]] - truth_deg[k];
  return out;
}

/// A trial is "wanted" when every matched absolute error is within the radius
/// (inclusive).
inline bool classify_wanted(const VectorXd& estimate_deg, const VectorXd& truth_deg,
                            double radius_deg = 5.0) {
  require(radius_deg > 0.0, "wanted radius must be positive");
  return match_and_error(estimate_deg, truth_deg).errors_deg.cwiseAbs().maxCoeff() <= radius_deg;
}

/// RMSE pooled over trials and sources: sqrt of the mean squared matched error.
inline double pooled_rmse(const std::vector<VectorXd>& errors_deg) {
  require(!errors_deg.empty(), "RMSE needs at least one trial");
  const Index m = errors_deg.front().size();
  double sum = 0.0;
  for (const VectorXd& e : errors_deg) {
    require(e.size() == m, "trials must have a consistent source count");
    sum += e.squaredNorm();
  }
  return std::sqrt(sum / (static_cast<double>(errors_deg.size()) * static_cast<double>(m)));
}

inline VectorXd per_source_rmse(const std::vector<VectorXd>& errors_deg) {
  require(!errors_deg.empty(), "RMSE needs at least one trial");
  const Index m = errors_deg.front().size();
  VectorXd sum = VectorXd::Zero(m);
  for (const VectorXd& e : errors_deg) {
    require(e.size() == m, "trials must have a consistent source count");
    sum += e.cwiseAbs2();
  }
  return (sum / static_cast<double>(errors_deg.size())).cwiseSqrt();
}

}  // namespace emdoa
