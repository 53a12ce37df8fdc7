#pragma once

#include <chrono>

#include "emdoa/array.hpp"
#include "emdoa/likelihood.hpp"
#include "emdoa/line_search.hpp"
#include "emdoa/record.hpp"

namespace emdoa {

/// State of the sequential deterministic estimator. Unlike the GEM split,
/// the full noise profile travels with the state; each cycle temporarily
/// allocates all of it to one source.
struct DetSageState {
  VectorXd theta;
  MatrixXcd f;
  VectorXd sigma;
};

inline void check_sage_state(const DetSageState& s, Index n_sensors) {
  check_doa(s.theta);
  check_noise(s.sigma);
  require(s.sigma.size() == n_sensors, "noise profile must have N entries");
  require(s.f.rows() == s.theta.size(), "waveform rows must match the DOA count");
}

/// Conditional mean of source i's augmented component: its own fit plus the
/// whole current residual. The conditional covariance is exactly zero, so no
/// c-term exists for this decomposition.
inline MatrixXcd sage_e_step(const DetSageState& s, const MatrixXcd& v, Index i) {
  check_sage_state(s, v.rows());
  require(i >= 0 && i < s.theta.size(), "cycle index out of range");
  MatrixXcd g = steering_vector(s.theta[i], static_cast<int>(v.rows())) * s.f.row(i);
  g += v - steering_matrix(s.theta, v.rows()) * s.f;
  return g;
}

/// One cycle's maximization: whiten by the full current profile, ascend the
/// quadratic form for theta_i, matched-filter f_i with q = sum_n 1/sigma_n,
/// then damp the noise toward the per-sensor mean squared residual.
inline DetSageState sage_cm_steps(const MatrixXcd& g_i, const DetSageState& s, Index i,
                                  double gamma, const LineSearchConfig& search) {
  require(gamma > 0.0 && gamma <= 1.0, "gamma must lie in (0, 1]");
  check_sage_state(s, g_i.rows());
  require(i >= 0 && i < s.theta.size(), "cycle index out of range");
  const Index n = g_i.rows();
  const double t = static_cast<double>(g_i.cols());

  VectorXcd scale = s.sigma.cwiseSqrt().cast<cxd>();
  MatrixXcd g_t = scale.cwiseInverse().asDiagonal() * g_i;
  MatrixXcd r_tilde = hermitize((g_t * g_t.adjoint()) / t);
  SearchResult res = ascend({std::move(r_tilde), s.sigma, s.theta[i]}, search);

  const double q = s.sigma.cwiseInverse().sum();
  VectorXcd d_t = steering_vector(res.angle, static_cast<int>(n)).cwiseQuotient(scale);

  DetSageState out = s;
  out.theta[i] = res.angle;
  out.f.row(i) = (d_t.adjoint() * g_t) / q;
  MatrixXcd resid = g_i - steering_vector(res.angle, static_cast<int>(n)) * out.f.row(i);
  VectorXd d = resid.array().abs2().rowwise().sum() / t;
  out.sigma = gamma * s.sigma + (1.0 - gamma) * d;
  return out;
}

/// Full sequential run: cycles 1..M per iteration, each reusing the noise
/// profile left by the previous cycle. The per-iteration trace holds the
/// incomplete-data LLF after the last cycle; per-cycle values go to the debug
/// trace.
inline TrialRecord sage_run(const MatrixXcd& v, const DetSageState& init,
                            const AlgorithmConfig& config) {
  check_algorithm_config(config);
  check_sage_state(init, v.rows());
  require(init.f.cols() == v.cols(), "waveform columns must match the snapshot count");
  const auto start = std::chrono::steady_clock::now();
  const double tol = deg2rad(config.tolerance_deg);
  const Index m_count = init.theta.size();

  DetSageState state = init;
  TrialRecord rec;
  auto llf_now = [&]() { return det_llf({state.theta, state.f, state.sigma}, v); };
  rec.llf_trace.push_back(llf_now());
  rec.theta_trace_deg.push_back(rad2deg(state.theta));

  for (int b = 1; b <= config.max_iterations; ++b) {
    VectorXd theta_prev = state.theta;
    for (Index i = 0; i < m_count; ++i) {
      MatrixXcd g = sage_e_step(state, v, i);
      state = sage_cm_steps(g, state, i, config.gamma, config.search);
      rec.cycle_llf_debug.push_back(llf_now());
    }
    rec.llf_trace.push_back(rec.cycle_llf_debug.back());
    rec.theta_trace_deg.push_back(rad2deg(state.theta));
    rec.iterations = b;
    if ((state.theta - theta_prev).norm() <= tol) {
      rec.converged = true;
      break;
    }
  }

  rec.final_theta_deg = rad2deg(state.theta);
  rec.final_sigma = state.sigma;
  rec.final_f = state.f;
  rec.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return rec;
}

}  // namespace emdoa
