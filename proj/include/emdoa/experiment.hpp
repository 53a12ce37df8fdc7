#pragma once

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "emdoa/array.hpp"
#include "emdoa/crlb.hpp"
#include "emdoa/det_gem.hpp"
#include "emdoa/det_sage.hpp"
#include "emdoa/match.hpp"
#include "emdoa/parallel.hpp"
#include "emdoa/stoch_sage.hpp"

namespace emdoa {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class Algo { det_gem, det_sage, stoch_sage_a, stoch_sage_b };

inline const char* algo_name(Algo a) {
  switch (a) {
    case Algo::det_gem: return "det-gem";
    case Algo::det_sage: return "det-sage";
    case Algo::stoch_sage_a: return "stoch-sage-A";
    default: return "stoch-sage-B";
  }
}

inline Algo algo_from_name(const std::string& name) {
  for (Algo a : {Algo::det_gem, Algo::det_sage, Algo::stoch_sage_a, Algo::stoch_sage_b})
    if (name == algo_name(a)) return a;
  throw ConfigError("algorithms: unknown name '" + name +
                    "' (expected det-gem, det-sage, stoch-sage-A, or stoch-sage-B)");
}

enum class SweepAxis { none, snapshots, power };

struct Scenario {
  int n_sensors = 0;
  VectorXd theta_deg;
  VectorXd sigma;
  std::string model;
  int snapshots = 0;
  VectorXd powers;
  VectorXd alpha;
  bool fixed_f = true;
};

/// Initial point shared by every algorithm in the run. omega_value <= 0 means
/// "sigma_value / M", which keeps the per-source noise split summing to the
/// initial profile.
struct InitSpec {
  VectorXd theta_deg;
  double f_value = 1.0;
  double omega_value = 0.0;
  VectorXd powers;
  double sigma_value = 1.0;
};

struct ExperimentConfig {
  Scenario scenario;
  std::vector<Algo> algorithms;
  AlgorithmConfig tuning;
  InitSpec init;
  int trials = 0;
  std::uint64_t master_seed = 0;
  SweepAxis axis = SweepAxis::none;
  std::vector<double> sweep_values;
  double wanted_radius_deg = 5.0;
};

namespace detail {

inline void require_cfg(bool ok, const std::string& msg) {
  if (!ok) throw ConfigError(msg);
}

/// Reads a numeric array field; a bare number broadcasts to `expect` entries.
inline VectorXd vec_field(const nlohmann::json& j, const std::string& path, Index expect) {
  if (j.is_number()) {
    require_cfg(expect >= 0, path + ": array required");
    return VectorXd::Constant(expect, j.get<double>());
  }
  require_cfg(j.is_array() && !j.empty(), path + ": expected a number or a non-empty array");
  VectorXd out(static_cast<Index>(j.size()));
  for (Index i = 0; i < out.size(); ++i) {
    require_cfg(j[static_cast<size_t>(i)].is_number(), path + ": entries must be numbers");
    out[i] = j[static_cast<size_t>(i)].get<double>();
  }
  if (expect >= 0)
    require_cfg(out.size() == expect,
                path + ": expected " + std::to_string(expect) + " entries, got " +
                    std::to_string(out.size()));
  return out;
}

inline std::string fmt_num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

}  // namespace detail

inline ExperimentConfig parse_experiment_config(const std::string& text) {
  using detail::require_cfg;
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }

  ExperimentConfig cfg;
  try {
    const auto& sc = j.at("scenario");
    cfg.scenario.n_sensors = sc.at("n_sensors").get<int>();
    require_cfg(cfg.scenario.n_sensors >= 1, "scenario.n_sensors must be >= 1");
    cfg.scenario.theta_deg = detail::vec_field(sc.at("theta_deg"), "scenario.theta_deg", -1);
    const Index m = cfg.scenario.theta_deg.size();
    require_cfg((cfg.scenario.theta_deg.array() > 0.0).all() &&
                    (cfg.scenario.theta_deg.array() < 180.0).all(),
                "scenario.theta_deg entries must lie strictly inside (0, 180)");
    cfg.scenario.sigma = detail::vec_field(sc.at("sigma"), "scenario.sigma", cfg.scenario.n_sensors);
    require_cfg((cfg.scenario.sigma.array() > 0.0).all(), "scenario.sigma must be positive");
    cfg.scenario.model = sc.at("model").get<std::string>();
    require_cfg(cfg.scenario.model == "deterministic" || cfg.scenario.model == "stochastic",
                "scenario.model must be 'deterministic' or 'stochastic'");
    cfg.scenario.snapshots = sc.at("snapshots").get<int>();
    require_cfg(cfg.scenario.snapshots >= 1, "scenario.snapshots must be >= 1");
    cfg.scenario.powers = sc.contains("powers")
                              ? detail::vec_field(sc.at("powers"), "scenario.powers", m)
                              : VectorXd::Ones(m);
    require_cfg((cfg.scenario.powers.array() > 0.0).all(), "scenario.powers must be positive");
    cfg.scenario.alpha = sc.contains("alpha")
                             ? detail::vec_field(sc.at("alpha"), "scenario.alpha", m)
                             : uniform_alpha(m);
    require_cfg((cfg.scenario.alpha.array() > 0.0).all() &&
                    std::abs(cfg.scenario.alpha.sum() - 1.0) <= 1e-9,
                "scenario.alpha must be positive and sum to 1");
    cfg.scenario.fixed_f = sc.value("fixed_f", true);

    require_cfg(j.contains("algorithms") && j.at("algorithms").is_array() &&
                    !j.at("algorithms").empty(),
                "algorithms must be a non-empty array");
    for (const auto& a : j.at("algorithms"))
      cfg.algorithms.push_back(algo_from_name(a.get<std::string>()));

    if (j.contains("tuning")) {
      const auto& tu = j.at("tuning");
      cfg.tuning.beta = tu.value("beta", cfg.tuning.beta);
      cfg.tuning.gamma = tu.value("gamma", cfg.tuning.gamma);
      cfg.tuning.zeta = tu.value("zeta", cfg.tuning.zeta);
      cfg.tuning.tolerance_deg = tu.value("tolerance_deg", cfg.tuning.tolerance_deg);
      cfg.tuning.max_iterations = tu.value("max_iterations", cfg.tuning.max_iterations);
    }
    try {
      check_algorithm_config(cfg.tuning);
    } catch (const std::exception& e) {
      throw ConfigError(std::string("tuning: ") + e.what());
    }

    const auto& in = j.at("init");
    cfg.init.theta_deg = detail::vec_field(in.at("theta_deg"), "init.theta_deg", m);
    require_cfg((cfg.init.theta_deg.array() > 0.0).all() &&
                    (cfg.init.theta_deg.array() < 180.0).all(),
                "init.theta_deg entries must lie strictly inside (0, 180)");
    cfg.init.f_value = in.value("f_value", 1.0);
    cfg.init.omega_value = in.value("omega_value", 0.0);
    cfg.init.powers = in.contains("powers") ? detail::vec_field(in.at("powers"), "init.powers", m)
                                            : VectorXd::Ones(m);
    require_cfg((cfg.init.powers.array() >= 0.0).all(), "init.powers must be nonnegative");
    cfg.init.sigma_value = in.value("sigma_value", 1.0);
    require_cfg(cfg.init.sigma_value > 0.0, "init.sigma_value must be positive");

    cfg.trials = j.at("trials").get<int>();
    require_cfg(cfg.trials >= 1, "trials must be >= 1");
    cfg.master_seed = j.at("master_seed").get<std::uint64_t>();

    if (j.contains("sweep")) {
      const auto& sw = j.at("sweep");
      const std::string axis = sw.value("axis", "none");
      if (axis == "none") {
        cfg.axis = SweepAxis::none;
      } else if (axis == "snapshots") {
        cfg.axis = SweepAxis::snapshots;
      } else if (axis == "power") {
        cfg.axis = SweepAxis::power;
      } else {
        throw ConfigError("sweep.axis must be 'none', 'snapshots', or 'power'");
      }
      if (cfg.axis != SweepAxis::none) {
        require_cfg(sw.contains("values") && sw.at("values").is_array() &&
                        !sw.at("values").empty(),
                    "sweep.values must be a non-empty array");
        for (const auto& v : sw.at("values")) {
          const double val = v.get<double>();
          require_cfg(val > 0.0, "sweep.values must be positive");
          if (cfg.axis == SweepAxis::snapshots)
            require_cfg(val == std::floor(val), "sweep.values must be whole snapshot counts");
          cfg.sweep_values.push_back(val);
        }
      }
    }
    cfg.wanted_radius_deg = j.value("wanted_radius_deg", 5.0);
    require_cfg(cfg.wanted_radius_deg > 0.0, "wanted_radius_deg must be positive");
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config field error: ") + e.what());
  }
  return cfg;
}

inline ExperimentConfig load_experiment_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_experiment_config(buf.str());
}

/// One sweep point with the scenario fields it overrides. For deterministic
/// scenarios waveforms holds the dedicated-seed draw used by every trial when
/// fixed_f is set, and as the bound's representative waveforms otherwise.
struct SweepPointSpec {
  Index index = 0;
  double value = 0.0;
  int snapshots = 0;
  VectorXd powers;
  MatrixXcd waveforms;
};

inline Index sweep_point_count(const ExperimentConfig& cfg) {
  return cfg.axis == SweepAxis::none ? 1 : static_cast<Index>(cfg.sweep_values.size());
}

inline SweepPointSpec resolve_sweep_point(const ExperimentConfig& cfg, Index si) {
  require(si >= 0 && si < sweep_point_count(cfg), "sweep index out of range");
  SweepPointSpec spec;
  spec.index = si;
  spec.snapshots = cfg.scenario.snapshots;
  spec.powers = cfg.scenario.powers;
  switch (cfg.axis) {
    case SweepAxis::none:
      spec.value = static_cast<double>(cfg.scenario.snapshots);
      break;
    case SweepAxis::snapshots:
      spec.value = cfg.sweep_values[static_cast<size_t>(si)];
      spec.snapshots = static_cast<int>(spec.value);
      break;
    case SweepAxis::power:
      spec.value = cfg.sweep_values[static_cast<size_t>(si)];
      spec.powers = VectorXd::Constant(cfg.scenario.theta_deg.size(), spec.value);
      break;
  }
  if (cfg.scenario.model == "deterministic")
    spec.waveforms = draw_source_signals(spec.powers, spec.snapshots,
                                         derive_seed(cfg.master_seed, (1ULL << 40) + si));
  return spec;
}

/// Samples shared by every algorithm within a trial. Seeds derive from the
/// master seed and a global trial index, so any trial is reproducible in
/// isolation.
inline MatrixXcd generate_trial_samples(const ExperimentConfig& cfg, const SweepPointSpec& spec,
                                        Index trial) {
  const std::uint64_t gidx =
      static_cast<std::uint64_t>(spec.index) * static_cast<std::uint64_t>(cfg.trials) +
      static_cast<std::uint64_t>(trial);
  VectorXd theta = deg2rad(cfg.scenario.theta_deg);
  if (cfg.scenario.model == "stochastic")
    return generate_stochastic_snapshots(theta, spec.powers, cfg.scenario.sigma, spec.snapshots,
                                         derive_seed(cfg.master_seed, gidx));
  MatrixXcd f = cfg.scenario.fixed_f
                    ? spec.waveforms
                    : draw_source_signals(spec.powers, spec.snapshots,
                                          derive_seed(cfg.master_seed, (1ULL << 41) + gidx));
  return generate_deterministic_snapshots(theta, f, cfg.scenario.sigma,
                                          derive_seed(cfg.master_seed, gidx));
}

inline TrialRecord run_algorithm(const ExperimentConfig& cfg, Algo algo, const MatrixXcd& v) {
  const Index m = cfg.scenario.theta_deg.size();
  const Index n = cfg.scenario.n_sensors;
  VectorXd theta0 = deg2rad(cfg.init.theta_deg);
  const double omega0 =
      cfg.init.omega_value > 0.0 ? cfg.init.omega_value
                                 : cfg.init.sigma_value / static_cast<double>(m);
  switch (algo) {
    case Algo::det_gem: {
      DetGemState s{theta0, MatrixXcd::Constant(m, v.cols(), cxd(cfg.init.f_value, 0.0)),
                    MatrixXd::Constant(n, m, omega0)};
      return gem_run(v, s, cfg.tuning);
    }
    case Algo::det_sage: {
      DetSageState s{theta0, MatrixXcd::Constant(m, v.cols(), cxd(cfg.init.f_value, 0.0)),
                     VectorXd::Constant(n, cfg.init.sigma_value)};
      return sage_run(v, s, cfg.tuning);
    }
    case Algo::stoch_sage_a:
    case Algo::stoch_sage_b: {
      StochSageState s{theta0, cfg.init.powers, VectorXd::Constant(n, cfg.init.sigma_value),
                       cfg.scenario.alpha};
      return stoch_sage_run(v, s,
                            algo == Algo::stoch_sage_a ? StochVariant::simultaneous
                                                       : StochVariant::sequential,
                            cfg.tuning);
    }
  }
  throw std::logic_error("unreachable algorithm case");
}

struct TrialOutcome {
  Index sweep_index = 0;
  double sweep_value = 0.0;
  Index trial = 0;
  Algo algo = Algo::det_gem;
  TrialRecord record;
  VectorXd errors_deg;
  bool wanted = false;
};

struct RmseRow {
  double sweep_value = 0.0;
  Algo algo = Algo::det_gem;
  double rmse_deg = 0.0;
  double crlb_sqrt_deg = 0.0;
  Index trials_used = 0;
  double rmse_all_deg = 0.0;
  Index wanted_count = 0;
  double mean_iterations = 0.0;
};

struct ExperimentResult {
  std::vector<TrialOutcome> outcomes;
  std::vector<RmseRow> rmse;
};

/// Pooled square-root bound in degrees for one sweep point, from the model the
/// samples were generated under.
inline double sweep_crlb_sqrt_deg(const ExperimentConfig& cfg, const SweepPointSpec& spec) {
  VectorXd theta = deg2rad(cfg.scenario.theta_deg);
  VectorXd bound = cfg.scenario.model == "stochastic"
                       ? stoch_crlb(theta, spec.powers, cfg.scenario.sigma, spec.snapshots)
                       : det_crlb(theta, spec.waveforms, cfg.scenario.sigma);
  return rad2deg(std::sqrt(bound.mean()));
}

inline ExperimentResult run_experiment(const ExperimentConfig& cfg, unsigned threads = 0) {
  const Index points = sweep_point_count(cfg);
  const Index n_algos = static_cast<Index>(cfg.algorithms.size());
  const Index trials = cfg.trials;

  ExperimentResult result;
  result.outcomes.resize(static_cast<size_t>(points * trials * n_algos));

  for (Index si = 0; si < points; ++si) {
    SweepPointSpec spec = resolve_sweep_point(cfg, si);
    parallel_for(
        trials,
        [&](Index trial) {
          MatrixXcd v = generate_trial_samples(cfg, spec, trial);
          for (Index ai = 0; ai < n_algos; ++ai) {
            TrialOutcome& out =
                result.outcomes[static_cast<size_t>((si * trials + trial) * n_algos + ai)];
            out.sweep_index = si;
            out.sweep_value = spec.value;
            out.trial = si * trials + trial;
            out.algo = cfg.algorithms[static_cast<size_t>(ai)];
            out.record = run_algorithm(cfg, out.algo, v);
            out.errors_deg =
                match_and_error(out.record.final_theta_deg, cfg.scenario.theta_deg).errors_deg;
            out.wanted = out.errors_deg.cwiseAbs().maxCoeff() <= cfg.wanted_radius_deg;
          }
        },
        threads);

    const double crlb_sqrt = sweep_crlb_sqrt_deg(cfg, spec);
    for (Index ai = 0; ai < n_algos; ++ai) {
      RmseRow row;
      row.sweep_value = spec.value;
      row.algo = cfg.algorithms[static_cast<size_t>(ai)];
      row.crlb_sqrt_deg = crlb_sqrt;
      std::vector<VectorXd> converged_errors, all_errors;
      long iter_sum = 0;
      for (Index trial = 0; trial < trials; ++trial) {
        const TrialOutcome& out =
            result.outcomes[static_cast<size_t>((si * trials + trial) * n_algos + ai)];
        all_errors.push_back(out.errors_deg);
        if (out.record.converged) converged_errors.push_back(out.errors_deg);
        row.wanted_count += out.wanted ? 1 : 0;
        iter_sum += out.record.iterations;
      }
      row.trials_used = static_cast<Index>(converged_errors.size());
      row.rmse_deg = converged_errors.empty() ? std::nan("") : pooled_rmse(converged_errors);
      row.rmse_all_deg = pooled_rmse(all_errors);
      row.mean_iterations = static_cast<double>(iter_sum) / static_cast<double>(trials);
      result.rmse.push_back(std::move(row));
    }
  }
  return result;
}

inline std::ofstream open_output(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write output file: " + path);
  return out;
}

/// trace.csv: iteration, llf, theta_1_deg, ... (row 0 is the initial point).
inline void write_trace_csv(const std::string& path, const TrialRecord& rec) {
  std::ofstream out = open_output(path);
  const Index m = rec.final_theta_deg.size();
  out << "iteration,llf";
  for (Index k = 0; k < m; ++k) out << ",theta_" << (k + 1) << "_deg";
  out << "\n";
  for (size_t row = 0; row < rec.llf_trace.size(); ++row) {
    out << row << "," << detail::fmt_num(rec.llf_trace[row]);
    for (Index k = 0; k < m; ++k) out << "," << detail::fmt_num(rec.theta_trace_deg[row][k]);
    out << "\n";
  }
}

/// scatter.csv: trial, algo, theta_hat_*_deg, wanted (one row per run).
inline void write_scatter_csv(const std::string& path, const ExperimentResult& result, Index m) {
  std::ofstream out = open_output(path);
  out << "trial,algo";
  for (Index k = 0; k < m; ++k) out << ",theta_hat_" << (k + 1) << "_deg";
  out << ",wanted\n";
  for (const TrialOutcome& o : result.outcomes) {
    out << o.trial << "," << algo_name(o.algo);
    for (Index k = 0; k < m; ++k) out << "," << detail::fmt_num(o.record.final_theta_deg[k]);
    out << "," << (o.wanted ? 1 : 0) << "\n";
  }
}

/// rmse.csv: converged-only RMSE plus the all-trials column, one row per
/// sweep point per algorithm.
inline void write_rmse_csv(const std::string& path, const ExperimentResult& result) {
  std::ofstream out = open_output(path);
  out << "sweep_value,algo,rmse_deg,crlb_sqrt_deg,trials_used,rmse_all_deg\n";
  for (const RmseRow& r : result.rmse)
    out << detail::fmt_num(r.sweep_value) << "," << algo_name(r.algo) << ","
        << detail::fmt_num(r.rmse_deg) << "," << detail::fmt_num(r.crlb_sqrt_deg) << ","
        << r.trials_used << "," << detail::fmt_num(r.rmse_all_deg) << "\n";
}

/// samples.csv: one row per snapshot with interleaved re/im sensor columns.
inline void write_snapshots_csv(const std::string& path, const MatrixXcd& v) {
  std::ofstream out = open_output(path);
  out << "snapshot";
  for (Index nn = 0; nn < v.rows(); ++nn) out << ",re_" << (nn + 1) << ",im_" << (nn + 1);
  out << "\n";
  for (Index t = 0; t < v.cols(); ++t) {
    out << t;
    for (Index nn = 0; nn < v.rows(); ++nn)
      out << "," << detail::fmt_num(v(nn, t).real()) << "," << detail::fmt_num(v(nn, t).imag());
    out << "\n";
  }
}

}  // namespace emdoa
