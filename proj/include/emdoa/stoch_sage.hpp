#pragma once

#include <chrono>
#include <utility>
#include <vector>

#include "emdoa/array.hpp"
#include "emdoa/likelihood.hpp"
#include "emdoa/line_search.hpp"
#include "emdoa/record.hpp"

namespace emdoa {

/// State of the stochastic-model estimators. alpha is the fixed noise split
/// across source components (unit sum); only the simultaneous variant uses it.
struct StochSageState {
  VectorXd theta;
  VectorXd p;
  VectorXd sigma;
  VectorXd alpha;
};

enum class StochVariant { simultaneous, sequential };

inline void check_stoch_state(const StochSageState& s, Index n_sensors) {
  check_doa(s.theta);
  check_powers(s.p);
  check_noise(s.sigma);
  require(s.sigma.size() == n_sensors, "noise profile must have N entries");
  require(s.p.size() == s.theta.size(), "power vector must match the DOA count");
  require(s.alpha.size() == s.theta.size(), "alpha must match the DOA count");
  if (!(s.alpha.array() > 0.0).all())
    throw std::domain_error("alpha entries must be strictly positive");
  if (std::abs(s.alpha.sum() - 1.0) > 1e-9)
    throw std::domain_error("alpha must sum to one");
}

inline VectorXd uniform_alpha(Index m) {
  return VectorXd::Constant(m, 1.0 / static_cast<double>(m));
}

/// Conditional second moments produced by the E-steps. r_m holds per-source
/// conditional covariances; p_hat and r_z belong to the shared additional
/// E-step over the waveform/noise decomposition.
struct StochEStepCache {
  std::vector<MatrixXcd> r_m;
  VectorXd p_hat;
  MatrixXcd r_z;
};

namespace detail {

/// E[x x^H | v] for jointly Gaussian zero-mean blocks with
/// cov(x) = c_x, cov(x, v) = c_x, cov(v) = c_v: the per-source components and
/// the noise block all have this structure (cross-covariance equals own).
inline MatrixXcd conditional_second_moment(const MatrixXcd& c_x,
                                           const Eigen::LLT<MatrixXcd>& c_v_llt,
                                           const MatrixXcd& r_v) {
  MatrixXcd y = c_v_llt.solve(c_x);
  MatrixXcd r = y.adjoint() * r_v * y + c_x - y.adjoint() * c_x;
  return hermitize(r);
}

inline MatrixXcd whiten(const MatrixXcd& r, const VectorXd& sigma) {
  VectorXd inv_sqrt = sigma.cwiseSqrt().cwiseInverse();
  return hermitize(inv_sqrt.asDiagonal() * r * inv_sqrt.asDiagonal());
}

/// Conditional mean power of waveform m given the snapshots:
/// p_hat = q^H R_v q + p (1 - d^H q) with q = H_v^{-1} d p. Analytically
/// nonnegative; clamped against rounding.
inline double conditional_power(const VectorXcd& d, double p,
                                const Eigen::LLT<MatrixXcd>& h_llt, const MatrixXcd& r_v) {
  if (p == 0.0) return 0.0;
  VectorXcd q = h_llt.solve(d) * p;
  const double quad = std::real(q.dot(r_v * q));
  const double shrink = p * (1.0 - std::real(d.dot(q)));
  return std::max(quad + shrink, 0.0);
}

}  // namespace detail

/// Simultaneous-variant E-step: conditional covariance of every source
/// component g_m ~ CN(0, H_m) with H_m = p_m d d^H + alpha_m diag(sigma),
/// given v ~ CN(0, H_v), H_v = sum H_m.
inline StochEStepCache stoch_e_step_simultaneous(const StochSageState& s,
                                                 const MatrixXcd& r_v) {
  check_stoch_state(s, r_v.rows());
  const int n = static_cast<int>(r_v.rows());
  const Index m_count = s.theta.size();
  MatrixXcd sigma_mat = s.sigma.asDiagonal().toDenseMatrix().cast<cxd>();

  std::vector<MatrixXcd> h_m(m_count);
  MatrixXcd h_v = MatrixXcd::Zero(n, n);
  for (Index m = 0; m < m_count; ++m) {
    VectorXcd d = steering_vector(s.theta[m], n);
    h_m[m] = s.p[m] * (d * d.adjoint()) + s.alpha[m] * sigma_mat;
    h_v += h_m[m];
  }
  auto llt = hpd_factor(hermitize(h_v));

  StochEStepCache cache;
  cache.r_m.resize(m_count);
  for (Index m = 0; m < m_count; ++m)
    cache.r_m[m] = detail::conditional_second_moment(h_m[m], llt, r_v);
  return cache;
}

/// Simultaneous-variant M-step: per source, ascend the whitened quadratic
/// form and update the power by the clamped closed form. A source whose power
/// clamps to zero keeps its previous angle (the objective no longer depends
/// on it); a later iteration can revive it.
inline std::pair<VectorXd, VectorXd> stoch_m_step_simultaneous(
    const StochEStepCache& cache, const StochSageState& s, const LineSearchConfig& search) {
  check_stoch_state(s, s.sigma.size());
  const Index m_count = s.theta.size();
  const double q = s.sigma.cwiseInverse().sum();
  VectorXd theta_new = s.theta;
  VectorXd p_new(m_count);
  for (Index m = 0; m < m_count; ++m) {
    SearchProblem prob{detail::whiten(cache.r_m[m], s.sigma), s.sigma, s.theta[m]};
    SearchResult res = ascend(prob, search);
    const double p = (res.value / q - s.alpha[m]) / q;
    if (p > 0.0) {
      theta_new[m] = res.angle;
      p_new[m] = p;
    } else {
      p_new[m] = 0.0;
    }
  }
  return {std::move(theta_new), std::move(p_new)};
}

/// Conditional mean powers of all waveforms given the snapshots, under the
/// waveform/noise decomposition at the given state.
inline VectorXd stoch_conditional_powers(const StochSageState& s, const MatrixXcd& r_v) {
  check_stoch_state(s, r_v.rows());
  const int n = static_cast<int>(r_v.rows());
  auto llt = hpd_factor(signal_covariance(s.theta, s.p, s.sigma));
  VectorXd p_hat(s.theta.size());
  for (Index m = 0; m < s.theta.size(); ++m)
    p_hat[m] = detail::conditional_power(steering_vector(s.theta[m], n), s.p[m], llt, r_v);
  return p_hat;
}

/// Shared additional E-step over the waveform/noise decomposition, evaluated
/// at (theta, p) = freshly updated estimates and sigma = previous profile.
inline StochEStepCache stoch_additional_e_step(const StochSageState& s,
                                               const MatrixXcd& r_v) {
  check_stoch_state(s, r_v.rows());
  MatrixXcd sigma_mat = s.sigma.asDiagonal().toDenseMatrix().cast<cxd>();
  auto llt = hpd_factor(signal_covariance(s.theta, s.p, s.sigma));

  StochEStepCache cache;
  cache.p_hat = stoch_conditional_powers(s, r_v);
  cache.r_z = detail::conditional_second_moment(sigma_mat, llt, r_v);
  return cache;
}

/// Shared additional M-step: powers take their conditional means; each noise
/// entry takes the conditional noise covariance diagonal, falling back to the
/// zeta blend whenever that lands non-positive so the profile stays valid.
inline std::pair<VectorXd, VectorXd> stoch_additional_em_steps(const StochSageState& s,
                                                               const MatrixXcd& r_v,
                                                               double zeta) {
  require(zeta > 0.0 && zeta <= 1.0, "zeta must lie in (0, 1]");
  StochEStepCache cache = stoch_additional_e_step(s, r_v);
  VectorXd sigma_new(s.sigma.size());
  for (Index n = 0; n < s.sigma.size(); ++n) {
    const double val = std::real(cache.r_z(n, n));
    sigma_new[n] = (val > 0.0) ? val : zeta * s.sigma[n] + (1.0 - zeta) * val;
    if (!(sigma_new[n] > 0.0))
      throw std::runtime_error("noise update lost positivity despite the zeta blend");
  }
  return {std::move(cache.p_hat), std::move(sigma_new)};
}

/// Conditional covariance of the augmented component of cycle i under the
/// sequential decomposition, where the component absorbs all sensor noise.
inline MatrixXcd stoch_cycle_e_step(const StochSageState& s, const MatrixXcd& r_v, Index i) {
  check_stoch_state(s, r_v.rows());
  require(i >= 0 && i < s.theta.size(), "cycle index out of range");
  const int n = static_cast<int>(r_v.rows());
  MatrixXcd sigma_mat = s.sigma.asDiagonal().toDenseMatrix().cast<cxd>();
  auto llt = hpd_factor(signal_covariance(s.theta, s.p, s.sigma));
  VectorXcd d_i = steering_vector(s.theta[i], n);
  MatrixXcd h_i = s.p[i] * (d_i * d_i.adjoint()) + sigma_mat;
  return detail::conditional_second_moment(hermitize(h_i), llt, r_v);
}

/// One cycle of the sequential variant: refresh the other sources' powers
/// from their conditional means, then re-estimate (theta_i, p_i) with all
/// noise allocated to source i. sigma is held fixed through the cycles.
inline StochSageState stoch_cycle_sequential(const StochSageState& s, const MatrixXcd& r_v,
                                             Index i, const LineSearchConfig& search) {
  check_stoch_state(s, r_v.rows());
  require(i >= 0 && i < s.theta.size(), "cycle index out of range");

  VectorXd refreshed = stoch_conditional_powers(s, r_v);
  StochSageState out = s;
  for (Index m = 0; m < s.theta.size(); ++m)
    if (m != i) out.p[m] = refreshed[m];

  MatrixXcd r_i = stoch_cycle_e_step(s, r_v, i);
  SearchProblem prob{detail::whiten(r_i, s.sigma), s.sigma, s.theta[i]};
  SearchResult res = ascend(prob, search);
  const double q = s.sigma.cwiseInverse().sum();
  const double p_i = (res.value / q - 1.0) / q;
  if (p_i > 0.0) {
    out.theta[i] = res.angle;
    out.p[i] = p_i;
  } else {
    out.p[i] = 0.0;
  }
  return out;
}

/// Full run of either stochastic variant: DOA/power updates (simultaneous or
/// sequential), then the shared noise/power refinement, until the DOA change
/// drops below tolerance. The debug trace holds the within-iteration
/// likelihood milestones evaluated at the previous noise profile.
inline TrialRecord stoch_sage_run(const MatrixXcd& v, const StochSageState& init,
                                  StochVariant variant, const AlgorithmConfig& config) {
  check_algorithm_config(config);
  check_stoch_state(init, v.rows());
  const auto start = std::chrono::steady_clock::now();
  const double tol = deg2rad(config.tolerance_deg);
  const int t = static_cast<int>(v.cols());
  const Index m_count = init.theta.size();
  MatrixXcd r_v = sample_covariance(v);

  StochSageState state = init;
  TrialRecord rec;
  rec.llf_trace.push_back(stoch_llf({state.theta, state.p, state.sigma}, r_v, t));
  rec.theta_trace_deg.push_back(rad2deg(state.theta));

  for (int b = 1; b <= config.max_iterations; ++b) {
    VectorXd theta_prev = state.theta;
    if (variant == StochVariant::simultaneous) {
      StochEStepCache cache = stoch_e_step_simultaneous(state, r_v);
      auto [theta_new, p_new] = stoch_m_step_simultaneous(cache, state, config.search);
      state.theta = std::move(theta_new);
      state.p = std::move(p_new);
      rec.cycle_llf_debug.push_back(stoch_llf({state.theta, state.p, state.sigma}, r_v, t));
    } else {
      for (Index i = 0; i < m_count; ++i) {
        state = stoch_cycle_sequential(state, r_v, i, config.search);
        rec.cycle_llf_debug.push_back(stoch_llf({state.theta, state.p, state.sigma}, r_v, t));
      }
    }
    auto [p_new, sigma_new] = stoch_additional_em_steps(state, r_v, config.zeta);
    state.p = std::move(p_new);
    state.sigma = std::move(sigma_new);

    rec.llf_trace.push_back(stoch_llf({state.theta, state.p, state.sigma}, r_v, t));
    rec.theta_trace_deg.push_back(rad2deg(state.theta));
    rec.iterations = b;
    if ((state.theta - theta_prev).norm() <= tol) {
      rec.converged = true;
      break;
    }
  }

  rec.final_theta_deg = rad2deg(state.theta);
  rec.final_sigma = state.sigma;
  rec.final_p = state.p;
  rec.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return rec;
}

}  // namespace emdoa
