#pragma once

#include "emdoa/array.hpp"
#include "emdoa/common.hpp"

namespace emdoa {

/// Constants of the damped gradient ascent. The first four are the published
/// values of the procedure; the caps bound pathological flat-gradient inputs
/// that would otherwise loop forever.
struct LineSearchConfig {
  double step_fraction = 0.1;
  double armijo = 0.3;
  double halving = 0.5;
  double gradient_tol = 1e-3;
  int max_steps = 500;
  int max_halvings = 60;
};

/// One whitened DOA subproblem: maximize h(theta) = d~(theta)^H R~ d~(theta)
/// over (0, pi), where d~(theta) = diag(w)^{-1/2} d(theta).
struct SearchProblem {
  MatrixXcd r_tilde;
  VectorXd whitening;
  double seed_angle = 0.0;
};

struct SearchResult {
  double angle = 0.0;
  double value = 0.0;
  double gradient = 0.0;
  int steps = 0;
  bool converged = false;
};

namespace detail {

inline VectorXcd whitened_steering(const SearchProblem& p, double theta) {
  return steering_vector(theta, static_cast<int>(p.whitening.size()))
      .cwiseQuotient(p.whitening.cwiseSqrt().cast<cxd>());
}

inline double objective_only(const SearchProblem& p, double theta) {
  VectorXcd d = whitened_steering(p, theta);
  return std::real(d.dot(p.r_tilde * d));
}

}  // namespace detail

/// Returns (h, h') at theta. h is real because R~ is Hermitian;
/// h'(theta) = 2 Re{ d~'(theta)^H R~ d~(theta) }.
inline std::pair<double, double> objective_and_gradient(const SearchProblem& p, double theta) {
  require(p.whitening.size() == p.r_tilde.rows(), "whitening length must match R~");
  VectorXcd scale = p.whitening.cwiseSqrt().cast<cxd>();
  const int n = static_cast<int>(p.whitening.size());
  VectorXcd d = steering_vector(theta, n).cwiseQuotient(scale);
  VectorXcd dp = steering_derivative(theta, n).cwiseQuotient(scale);
  VectorXcd rd = p.r_tilde * d;
  const double h = std::real(d.dot(rd));
  const double hp = 2.0 * std::real(dp.dot(rd));
  return {h, hp};
}

/// Damped gradient ascent with backtracking. The trial step is sized so the
/// first candidate moves exactly a step_fraction of the distance to the
/// nearer domain boundary in the ascent direction, which keeps every iterate
/// inside (0, pi). Backtracking halves the step until the Armijo condition
/// h(theta + t h') >= h(theta) + armijo * t * h'^2 holds.
///
/// Accepted steps strictly increase h, so the returned angle never scores
/// below the seed. A run that exhausts max_steps or a backtrack that exhausts
/// max_halvings (or underflows to a zero step) returns the current iterate
/// with converged = false.
inline SearchResult ascend(const SearchProblem& p, const LineSearchConfig& cfg = {}) {
  if (!(p.seed_angle > 0.0 && p.seed_angle < kPi))
    throw std::domain_error("search seed outside the open interval (0, pi)");
  double theta = p.seed_angle;
  auto [h, hp] = objective_and_gradient(p, theta);

  int steps = 0;
  while (std::abs(hp) > cfg.gradient_tol) {
    if (steps >= cfg.max_steps) return {theta, h, hp, steps, false};
    double t = cfg.step_fraction * ((hp > 0.0) ? (kPi - theta) / hp : -theta / hp);
    bool accepted = false;
    for (int halvings = 0; halvings <= cfg.max_halvings; ++halvings) {
      const double cand = theta + t * hp;
      if (cand == theta) break;
      if (detail::objective_only(p, cand) >= h + cfg.armijo * t * hp * hp) {
        theta = cand;
        accepted = true;
        break;
      }
      t *= cfg.halving;
    }
    if (!accepted) return {theta, h, hp, steps, false};
    std::tie(h, hp) = objective_and_gradient(p, theta);
    ++steps;
  }
  return {theta, h, hp, steps, true};
}

}  // namespace emdoa
