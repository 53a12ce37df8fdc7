// doacli: command line front end for the DOA estimation library.
//
//   simulate    draw one trial's snapshot block and write it as CSV
//   estimate    run one estimator on one trial and dump its trace
//   scatter     run every trial and write per-run estimates
//   rmse-sweep  run the full experiment and write the RMSE table
//   crlb        print the square-root bound per sweep point
//
// Exit codes: 0 ok, 2 bad configuration or usage, 3 a trial failed to
// converge under --strict, 1 unexpected failure.

#include <cstdio>
#include <exception>
#include <string>

#include "CLI11.hpp"

#include "emdoa/experiment.hpp"

namespace {

using namespace emdoa;

void print_record_summary(const TrialRecord& rec) {
  std::printf("iterations=%d converged=%s llf=%.6f\n", rec.iterations,
              rec.converged ? "yes" : "no", rec.llf_trace.back());
  for (Index k = 0; k < rec.final_theta_deg.size(); ++k)
    std::printf("theta_%ld_deg=%.6f\n", static_cast<long>(k + 1), rec.final_theta_deg[k]);
}

void print_result_summary(const ExperimentConfig& cfg, const ExperimentResult& res) {
  std::printf("%12s  %-14s %12s %12s %12s  %9s %10s\n", "sweep_value", "algo", "rmse_deg",
              "rmse_all_deg", "crlb_sqrt", "wanted", "mean_iter");
  for (const RmseRow& r : res.rmse)
    std::printf("%12g  %-14s %12.6g %12.6g %12.6g  %4ld/%-4d %10.2f\n", r.sweep_value,
                algo_name(r.algo), r.rmse_deg, r.rmse_all_deg, r.crlb_sqrt_deg,
                static_cast<long>(r.wanted_count), cfg.trials, r.mean_iterations);
}

int count_non_converged(const ExperimentResult& res) {
  int n = 0;
  for (const TrialOutcome& o : res.outcomes)
    if (!o.record.converged) ++n;
  return n;
}

int finish_strict(const ExperimentResult& res, bool strict) {
  const int bad = count_non_converged(res);
  if (bad > 0)
    std::fprintf(stderr, "%d run(s) hit the iteration cap without converging\n", bad);
  return (strict && bad > 0) ? 3 : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"maximum likelihood DOA estimation under nonuniform sensor noise"};
  app.require_subcommand(1);

  std::string config_path, out_path, algo_str;
  int trial = 0;
  int sweep_index = 0;
  unsigned threads = 0;
  bool strict = false;

  auto add_common = [&](CLI::App* sub, bool needs_out) {
    sub->add_option("--config", config_path, "experiment config (JSON)")->required();
    auto* o = sub->add_option("--out", out_path, "output CSV path");
    if (needs_out) o->required();
  };

  CLI::App* sim = app.add_subcommand("simulate", "write one trial's snapshots as CSV");
  add_common(sim, true);
  sim->add_option("--trial", trial, "trial index within the sweep point");
  sim->add_option("--sweep-index", sweep_index, "sweep point index");

  CLI::App* est = app.add_subcommand("estimate", "run one estimator on one trial");
  add_common(est, false);
  est->add_option("--algo", algo_str, "det-gem | det-sage | stoch-sage-A | stoch-sage-B");
  est->add_option("--trial", trial, "trial index within the sweep point");
  est->add_option("--sweep-index", sweep_index, "sweep point index");

  CLI::App* sca = app.add_subcommand("scatter", "run all trials, write per-run estimates");
  add_common(sca, true);
  sca->add_option("--threads", threads, "worker threads (0 = auto)");
  sca->add_flag("--strict", strict, "exit 3 if any run fails to converge");

  CLI::App* rms = app.add_subcommand("rmse-sweep", "run all trials, write the RMSE table");
  add_common(rms, true);
  rms->add_option("--threads", threads, "worker threads (0 = auto)");
  rms->add_flag("--strict", strict, "exit 3 if any run fails to converge");

  CLI::App* crb = app.add_subcommand("crlb", "print the bound per sweep point");
  crb->add_option("--config", config_path, "experiment config (JSON)")->required();
  crb->add_option("--out", out_path, "optional CSV path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    ExperimentConfig cfg = load_experiment_config(config_path);

    if (sim->parsed()) {
      if (sweep_index < 0 || sweep_index >= sweep_point_count(cfg))
        throw ConfigError("--sweep-index out of range");
      if (trial < 0 || trial >= cfg.trials) throw ConfigError("--trial out of range");
      SweepPointSpec spec = resolve_sweep_point(cfg, sweep_index);
      MatrixXcd v = generate_trial_samples(cfg, spec, trial);
      write_snapshots_csv(out_path, v);
      std::printf("wrote %ld snapshots of %ld sensors to %s\n", static_cast<long>(v.cols()),
                  static_cast<long>(v.rows()), out_path.c_str());
      return 0;
    }

    if (est->parsed()) {
      if (sweep_index < 0 || sweep_index >= sweep_point_count(cfg))
        throw ConfigError("--sweep-index out of range");
      if (trial < 0 || trial >= cfg.trials) throw ConfigError("--trial out of range");
      const Algo algo = algo_str.empty() ? cfg.algorithms.front() : algo_from_name(algo_str);
      SweepPointSpec spec = resolve_sweep_point(cfg, sweep_index);
      MatrixXcd v = generate_trial_samples(cfg, spec, trial);
      TrialRecord rec = run_algorithm(cfg, algo, v);
      std::printf("algo=%s trial=%d sweep_value=%g\n", algo_name(algo), trial, spec.value);
      print_record_summary(rec);
      if (!out_path.empty()) write_trace_csv(out_path, rec);
      return rec.converged ? 0 : (strict ? 3 : 0);
    }

    if (crb->parsed()) {
      std::string csv = "sweep_value,crlb_sqrt_deg\n";
      for (Index si = 0; si < sweep_point_count(cfg); ++si) {
        SweepPointSpec spec = resolve_sweep_point(cfg, si);
        const double b = sweep_crlb_sqrt_deg(cfg, spec);
        std::printf("sweep_value=%g crlb_sqrt_deg=%.10g\n", spec.value, b);
        csv += detail::fmt_num(spec.value) + "," + detail::fmt_num(b) + "\n";
      }
      if (!out_path.empty()) {
        std::ofstream out = open_output(out_path);
        out << csv;
      }
      return 0;
    }

    ExperimentResult res = run_experiment(cfg, threads);
    if (sca->parsed())
      write_scatter_csv(out_path, res, cfg.scenario.theta_deg.size());
    else
      write_rmse_csv(out_path, res);
    print_result_summary(cfg, res);
    return finish_strict(res, strict);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
