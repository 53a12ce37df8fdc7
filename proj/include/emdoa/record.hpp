#pragma once

#include <vector>

#include "emdoa/common.hpp"
#include "emdoa/line_search.hpp"

namespace emdoa {

/// Tuning knobs shared by all four estimators. beta damps the GEM per-source
/// noise update, gamma the SAGE full-noise update, zeta the stochastic noise
/// fallback. Convergence is declared on the euclidean DOA change.
struct AlgorithmConfig {
  double beta = 0.5;
  double gamma = 0.9;
  double zeta = 0.5;
  double tolerance_deg = 1e-3;
  int max_iterations = 2000;
  LineSearchConfig search{};
};

inline void check_algorithm_config(const AlgorithmConfig& c) {
  require(c.beta >= 0.0 && c.beta <= 1.0, "beta must lie in [0, 1]");
  require(c.gamma > 0.0 && c.gamma <= 1.0, "gamma must lie in (0, 1]");
  require(c.zeta > 0.0 && c.zeta <= 1.0, "zeta must lie in (0, 1]");
  require(c.tolerance_deg > 0.0, "tolerance must be positive");
  require(c.max_iterations >= 1, "iteration cap must be >= 1");
}

/// Everything one estimator run leaves behind. Index 0 of the traces is the
/// initial point, so a run of b iterations stores b+1 entries.
struct TrialRecord {
  std::vector<double> llf_trace;
  std::vector<VectorXd> theta_trace_deg;
  std::vector<double> cycle_llf_debug;
  VectorXd final_theta_deg;
  VectorXd final_sigma;
  VectorXd final_p;
  MatrixXcd final_f;
  int iterations = 0;
  bool converged = false;
  double wall_seconds = 0.0;
};

}  // namespace emdoa
