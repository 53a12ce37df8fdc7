#pragma once

#include <chrono>
#include <vector>

#include "emdoa/array.hpp"
#include "emdoa/likelihood.hpp"
#include "emdoa/line_search.hpp"
#include "emdoa/record.hpp"

namespace emdoa {

/// State of the per-source EM decomposition for the deterministic model. The
/// noise is split across sources: omega(n, m) is source m's share of sensor
/// n's variance, and the physical profile is the row sum.
struct DetGemState {
  VectorXd theta;
  MatrixXcd f;
  MatrixXd omega;
};

inline void check_gem_state(const DetGemState& s, Index n_sensors) {
  check_doa(s.theta);
  require(s.f.rows() == s.theta.size(), "waveform rows must match the DOA count");
  require(s.omega.rows() == n_sensors && s.omega.cols() == s.theta.size(),
          "noise split must be N x M");
  if (!(s.omega.array() > 0.0).all())
    throw std::domain_error("noise split entries must be strictly positive");
}

/// Conditional moments of the per-source components given the snapshots.
/// g[m] is the conditional mean of source m's component; c(n, m) is the
/// diagonal of its conditional covariance (time-invariant).
struct DetEStepCache {
  std::vector<MatrixXcd> g;
  MatrixXd c;
};

inline DetEStepCache gem_e_step(const DetGemState& s, const MatrixXcd& v) {
  check_gem_state(s, v.rows());
  const Index m_count = s.theta.size();
  VectorXd sigma = s.omega.rowwise().sum();
  MatrixXcd resid = v - steering_matrix(s.theta, v.rows()) * s.f;
  DetEStepCache cache;
  cache.g.resize(m_count);
  cache.c.resize(v.rows(), m_count);
  for (Index m = 0; m < m_count; ++m) {
    VectorXd ratio = s.omega.col(m).cwiseQuotient(sigma);
    cache.g[m] = steering_vector(s.theta[m], static_cast<int>(v.rows())) * s.f.row(m);
    cache.g[m].noalias() += ratio.asDiagonal() * resid;
    cache.c.col(m) = s.omega.col(m).array() * (1.0 - ratio.array());
  }
  return cache;
}

/// Per-source DOA and waveform update. Each source is whitened by its own
/// noise share, the DOA ascends the whitened quadratic form from its previous
/// value, and the waveform is the matched filter output scaled by
/// q_m = sum_n 1/omega(n, m).
inline std::pair<VectorXd, MatrixXcd> gem_cm_step1(const DetEStepCache& cache,
                                                   const DetGemState& s,
                                                   const LineSearchConfig& search) {
  const Index m_count = s.theta.size();
  const Index n = s.omega.rows();
  const double t = static_cast<double>(s.f.cols());
  VectorXd theta_new(m_count);
  MatrixXcd f_new(m_count, s.f.cols());
  for (Index m = 0; m < m_count; ++m) {
    VectorXd w = s.omega.col(m);
    VectorXcd scale = w.cwiseSqrt().cast<cxd>();
    MatrixXcd g_t = scale.cwiseInverse().asDiagonal() * cache.g[m];
    MatrixXcd r_tilde = hermitize((g_t * g_t.adjoint()) / t);
    SearchResult res = ascend({std::move(r_tilde), w, s.theta[m]}, search);
    theta_new[m] = res.angle;
    const double q = w.cwiseInverse().sum();
    VectorXcd d_t =
        steering_vector(theta_new[m], static_cast<int>(n)).cwiseQuotient(scale);
    f_new.row(m) = (d_t.adjoint() * g_t) / q;
  }
  return {std::move(theta_new), std::move(f_new)};
}

/// Damped per-source noise update: blends the previous split with the
/// conditional second moment c + d, where d is the per-sensor mean squared
/// residual of the freshly updated fit.
inline MatrixXd gem_cm_step2(const DetEStepCache& cache, const VectorXd& theta_new,
                             const MatrixXcd& f_new, const DetGemState& s, double beta) {
  require(beta >= 0.0 && beta <= 1.0, "beta must lie in [0, 1]");
  const Index m_count = s.theta.size();
  const Index n = s.omega.rows();
  const double t = static_cast<double>(f_new.cols());
  MatrixXd omega_new(n, m_count);
  for (Index m = 0; m < m_count; ++m) {
    MatrixXcd resid =
        cache.g[m] - steering_vector(theta_new[m], static_cast<int>(n)) * f_new.row(m);
    VectorXd d = resid.array().abs2().rowwise().sum() / t;
    omega_new.col(m) =
        beta * s.omega.col(m) + (1.0 - beta) * (cache.c.col(m) + d);
  }
  return omega_new;
}

/// Full GEM run: E-step, DOA/waveform update, damped noise update, repeated
/// until the DOA change drops below tolerance or the cap is hit.
inline TrialRecord gem_run(const MatrixXcd& v, const DetGemState& init,
                           const AlgorithmConfig& config) {
  check_algorithm_config(config);
  check_gem_state(init, v.rows());
  require(init.f.cols() == v.cols(), "waveform columns must match the snapshot count");
  const auto start = std::chrono::steady_clock::now();
  const double tol = deg2rad(config.tolerance_deg);

  DetGemState state = init;
  TrialRecord rec;
  auto record_point = [&]() {
    rec.llf_trace.push_back(det_llf({state.theta, state.f, state.omega.rowwise().sum()}, v));
    rec.theta_trace_deg.push_back(rad2deg(state.theta));
  };
  record_point();

  for (int b = 1; b <= config.max_iterations; ++b) {
    DetEStepCache cache = gem_e_step(state, v);
    auto [theta_new, f_new] = gem_cm_step1(cache, state, config.search);
    MatrixXd omega_new = gem_cm_step2(cache, theta_new, f_new, state, config.beta);
    const double delta = (theta_new - state.theta).norm();
    state.theta = std::move(theta_new);
    state.f = std::move(f_new);
    state.omega = std::move(omega_new);
    record_point();
    rec.iterations = b;
    if (delta <= tol) {
      rec.converged = true;
      break;
    }
  }

  rec.final_theta_deg = rad2deg(state.theta);
  rec.final_sigma = state.omega.rowwise().sum();
  rec.final_f = state.f;
  rec.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return rec;
}

}  // namespace emdoa
