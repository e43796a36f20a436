#include "bode/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <vector>

#include "bode/engine.hpp"
#include "bode/io.hpp"
#include "bode/parallel.hpp"
#include "bode/rng.hpp"

namespace bode {

namespace {

namespace fs = std::filesystem;

struct CommonOpts {
  std::string config_path;
  std::string problem;
  std::string out_dir = ".";
  std::string acquisition;
  std::uint64_t seed = 0;
  bool seed_given = false;
  int budget = 0;
  double timeout = 0.0;
  bool serial = false;
};

io::LoadedConfig resolve_config(const CommonOpts& opt) {
  io::LoadedConfig cfg;
  if (!opt.config_path.empty()) {
    cfg = io::load_config_file(opt.config_path);
  } else if (!opt.problem.empty()) {
    cfg.problem = make_builtin_problem(opt.problem);
    cfg.engine.n_initial = cfg.problem.default_n_initial;
    cfg.engine.n_max = cfg.problem.default_n_max;
  } else {
    throw contract_error("either --config or --problem is required");
  }
  if (!opt.problem.empty() && !opt.config_path.empty() && cfg.problem.name != opt.problem)
    throw contract_error("--problem conflicts with the problem in --config");
  if (!opt.acquisition.empty())
    cfg.engine.acquisition = acquisition_from_string(opt.acquisition);
  if (opt.seed_given) cfg.engine.master_seed = opt.seed;
  if (opt.budget > 0) cfg.engine.n_max = opt.budget;
  if (opt.timeout > 0.0 && cfg.problem.external) cfg.problem.external->timeout_s = opt.timeout;
  cfg.engine.validate();
  return cfg;
}

int finish_run(const Problem& problem, const RunRecord& record, const std::string& out_dir,
               const std::string& stem) {
  fs::create_directories(out_dir);
  io::write_trace_csv(out_dir + "/" + stem + "trace.csv", record);
  io::write_summary_json(out_dir + "/" + stem + "summary.json", problem, record);
  if (record.termination == "evaluation_failure" || record.termination == "degenerate_sampling") {
    std::fprintf(stderr, "run aborted (%s): %s\n", record.termination.c_str(),
                 record.error_message.c_str());
    return 2;
  }
  if (record.final_belief) {
    std::printf("%s: n=%d, termination=%s, qoi_mean=%.8g, qoi_sd=%.4g\n",
                problem.name.c_str(), static_cast<int>(record.final_Y_raw.size()),
                record.termination.c_str(), record.final_belief->qoi_mean,
                std::sqrt(std::max(0.0, record.final_belief->qoi_variance)));
  }
  return 0;
}

int cmd_run(const CommonOpts& opt) {
  const io::LoadedConfig cfg = resolve_config(opt);
  const RunRecord record = run(cfg.problem, cfg.engine);
  return finish_run(cfg.problem, record, opt.out_dir, "");
}

int cmd_oracle(const CommonOpts& opt) {
  const io::LoadedConfig cfg = resolve_config(opt);
  OracleBudget budget;
  if (opt.seed_given) budget.seed = opt.seed;
  const OracleResult res = true_qoi_oracle(cfg.problem, budget);
  std::printf("%.10g +/- %.3g%s\n", res.value, res.error_estimate,
              res.converged ? "" : " (budget exhausted, partial)");
  if (opt.out_dir != ".") {
    fs::create_directories(opt.out_dir);
    nlohmann::json j = {{"problem", cfg.problem.name},
                        {"value", res.value},
                        {"error_estimate", res.error_estimate},
                        {"converged", res.converged},
                        {"n_evals", res.n_evals}};
    std::ofstream(opt.out_dir + "/oracle_" + cfg.problem.name + ".json") << j.dump(2) << '\n';
  }
  return res.converged ? 0 : 2;
}

// Beliefs indexed by the number of observations they condition on: the
// record for iteration i holds the belief over the first n_initial + i - 1
// points; the summary's final belief covers all of them.
std::map<int, std::pair<double, double>> belief_by_n(const RunRecord& record) {
  std::map<int, std::pair<double, double>> out;
  const int n0 = static_cast<int>(record.initial_Y_raw.size());
  for (const IterationRecord& it : record.iterations)
    out[n0 + it.index - 1] = {it.qoi_mean, it.qoi_variance};
  if (record.final_belief)
    out[static_cast<int>(record.final_Y_raw.size())] = {record.final_belief->qoi_mean,
                                                        record.final_belief->qoi_variance};
  return out;
}

int cmd_compare(const CommonOpts& opt, int n_seeds) {
  io::LoadedConfig cfg = resolve_config(opt);
  const OracleResult oracle = true_qoi_oracle(cfg.problem);
  std::printf("oracle Q = %.10g +/- %.3g\n", oracle.value, oracle.error_estimate);

  fs::create_directories(opt.out_dir);
  std::map<std::string, std::map<int, std::vector<std::pair<double, double>>>> agg;
  for (const AcquisitionRule rule : {AcquisitionRule::ekld, AcquisitionRule::us}) {
    for (int s = 0; s < n_seeds; ++s) {
      EngineConfig ec = cfg.engine;
      ec.acquisition = rule;
      ec.master_seed = rng::derive_seed(cfg.engine.master_seed, rng::kCompare, s);
      const RunRecord record = run(cfg.problem, ec);
      const std::string stem =
          to_string(rule) + "_seed" + std::to_string(s) + "_";
      io::write_trace_csv(opt.out_dir + "/" + stem + "trace.csv", record);
      io::write_summary_json(opt.out_dir + "/" + stem + "summary.json", cfg.problem, record);
      if (record.termination != "budget" && record.termination != "ekld_threshold") {
        std::fprintf(stderr, "compare: %s seed %d aborted: %s\n", to_string(rule).c_str(), s,
                     record.error_message.c_str());
        return 2;
      }
      for (const auto& [n, belief] : belief_by_n(record))
        agg[to_string(rule)][n].push_back(belief);
    }
  }

  const std::string path = opt.out_dir + "/compare_" + cfg.problem.name + ".csv";
  std::ofstream out(path);
  out << "n_obs,acquisition,mean_abs_error,mean_qoi_sd,n_runs\n";
  for (const auto& [rule, by_n] : agg) {
    for (const auto& [n, beliefs] : by_n) {
      double err = 0.0, sd = 0.0;
      for (const auto& [mean, var] : beliefs) {
        err += std::abs(mean - oracle.value);
        sd += std::sqrt(std::max(0.0, var));
      }
      err /= static_cast<double>(beliefs.size());
      sd /= static_cast<double>(beliefs.size());
      char line[160];
      std::snprintf(line, sizeof(line), "%d,%s,%.17g,%.17g,%zu\n", n, rule.c_str(), err, sd,
                    beliefs.size());
      out << line;
    }
  }
  std::printf("wrote %s\n", path.c_str());
  return 0;
}

int cmd_bench(const CommonOpts& opt) {
  for (const char* name : {"f1", "f2", "f3", "f4"}) {
    CommonOpts o = opt;
    o.problem = name;
    o.config_path.clear();
    const io::LoadedConfig cfg = resolve_config(o);
    std::printf("[bench] %s: n_initial=%d, n_max=%d\n", name, cfg.engine.n_initial,
                cfg.engine.n_max);
    const RunRecord record = run(cfg.problem, cfg.engine);
    const int rc = finish_run(cfg.problem, record, opt.out_dir + "/" + name, "");
    if (rc != 0) return rc;
  }
  return 0;
}

}  // namespace

int cli_main(int argc, const char* const* argv) {
  CLI::App app{"Sequential Bayesian design of experiments for estimating the expectation "
               "of a black-box function"};
  app.require_subcommand(1);

  CommonOpts opt;
  int n_seeds = 5;

  const auto add_common = [&](CLI::App* sub, bool with_acq) {
    sub->add_option("--config", opt.config_path, "JSON config file");
    sub->add_option("--problem", opt.problem, "built-in problem name (f1,f2,f3,f3_paper,f4)");
    sub->add_option("--out", opt.out_dir, "output directory");
    sub->add_option("--seed", opt.seed, "master seed")->each([&](const std::string&) {
      opt.seed_given = true;
    });
    sub->add_option("--budget", opt.budget, "total experiment budget (n_max)");
    sub->add_option("--timeout", opt.timeout, "external evaluation timeout in seconds");
    sub->add_flag("--serial", opt.serial, "disable the OpenMP execution path");
    if (with_acq)
      sub->add_option("--acquisition", opt.acquisition, "ekld|us|random");
  };

  CLI::App* run_cmd = app.add_subcommand("run", "execute one sequential design run");
  add_common(run_cmd, true);
  CLI::App* oracle_cmd = app.add_subcommand("oracle", "estimate the true QoI independently");
  add_common(oracle_cmd, false);
  CLI::App* compare_cmd =
      app.add_subcommand("compare", "run ekld and us over a seed list and aggregate errors");
  add_common(compare_cmd, false);
  compare_cmd->add_option("--seeds", n_seeds, "number of paired seeds");
  CLI::App* bench_cmd =
      app.add_subcommand("bench", "run every built-in problem at its published budget");
  add_common(bench_cmd, true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  if (opt.serial) exec::set_mode(exec::Mode::serial);

  try {
    if (run_cmd->parsed()) return cmd_run(opt);
    if (oracle_cmd->parsed()) return cmd_oracle(opt);
    if (compare_cmd->parsed()) return cmd_compare(opt, n_seeds);
    if (bench_cmd->parsed()) return cmd_bench(opt);
  } catch (const contract_error& e) {
    std::fprintf(stderr, "configuration error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 1;
}

}  // namespace bode
