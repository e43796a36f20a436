#include "bode/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace bode::io {

using nlohmann::json;

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void require(bool cond, const std::string& msg) {
  if (!cond) throw contract_error("config: " + msg);
}

}  // namespace

void write_trace_csv(const std::string& path, const RunRecord& record) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  const int d = static_cast<int>(record.initial_X_unit.cols());
  out << "iteration";
  for (int j = 1; j <= d; ++j) out << ",x_" << j;
  out << ",y_raw,qoi_mean,qoi_sd,max_mean_ekld,acceptance_rate,elapsed_s\n";
  for (const IterationRecord& it : record.iterations) {
    out << it.index;
    for (int j = 0; j < d; ++j) out << ',' << fmt(it.x_raw[j]);
    out << ',' << fmt(it.y_raw) << ',' << fmt(it.qoi_mean) << ','
        << fmt(std::sqrt(std::max(0.0, it.qoi_variance))) << ',' << fmt(it.max_mean_ekld)
        << ',' << fmt(it.diag.acceptance_rate) << ',' << fmt(it.elapsed_s) << '\n';
  }
}

void write_summary_json(const std::string& path, const Problem& problem,
                        const RunRecord& record) {
  json j;
  j["problem"] = problem.name;
  j["termination"] = record.termination;
  if (!record.error_message.empty()) j["error"] = record.error_message;
  j["n_initial"] = static_cast<int>(record.initial_Y_raw.size());
  j["n_final"] = static_cast<int>(record.final_Y_raw.size());
  j["iterations"] = record.iterations.size();
  j["total_elapsed_s"] = record.total_elapsed_s;
  if (record.final_belief) {
    j["final_qoi"] = {{"mean", record.final_belief->qoi_mean},
                      {"variance", record.final_belief->qoi_variance},
                      {"sd", std::sqrt(std::max(0.0, record.final_belief->qoi_variance))},
                      {"acceptance_rate", record.final_belief->acceptance_rate}};
  }
  if (problem.reference_qoi) {
    j["reference_qoi"] = {{"value", problem.reference_qoi->value},
                          {"provenance", problem.reference_qoi->provenance}};
  }
  j["config"] = echo_config(problem, record.config);
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << j.dump(2) << '\n';
}

json echo_config(const Problem& problem, const EngineConfig& config) {
  json j;
  const bool is_builtin = !problem.external;
  bool is_stock = false;
  if (is_builtin) {
    for (const std::string& n : builtin_problem_names())
      if (n == problem.name) is_stock = true;
  }
  if (is_stock) {
    j["problem"] = problem.name;
  } else {
    json p;
    p["name"] = problem.name;
    json dom = json::array();
    for (const auto& [lo, hi] : problem.domain) dom.push_back({lo, hi});
    p["domain"] = dom;
    if (problem.external) {
      p["command"] = problem.external->argv;
      p["timeout_s"] = problem.external->timeout_s;
    }
    j["problem"] = p;
  }
  j["input_density"] = "uniform";
  j["acquisition"] = to_string(config.acquisition);
  j["n_initial"] = config.n_initial;
  j["n_max"] = config.n_max;
  if (config.ekld_stop_threshold)
    j["ekld_stop_threshold"] = *config.ekld_stop_threshold;
  j["noise_var"] = config.noise_var;
  j["seed"] = config.master_seed;
  j["warm_burn_in"] = config.warm_burn_in;
  // Zero-valued fields mean "resolve from the problem dimension"; they are
  // echoed as configured so a fed-back config replays identically.
  j["mcmc"] = {{"n_walkers", config.mcmc.n_walkers}, {"n_steps", config.mcmc.n_steps},
               {"burn_in", config.mcmc.burn_in},     {"thin", config.mcmc.thin},
               {"target_samples", config.mcmc.target_samples},
               {"stretch_a", config.mcmc.stretch_a}};
  j["bgo"] = {{"t_init", config.bgo.t_init},
              {"t_max", config.bgo.t_max},
              {"n_candidates", config.bgo.n_candidates},
              {"tol", config.bgo.tol}};
  j["prior"] = {{"lengthscale_rate", config.prior.lengthscale_rate},
                {"s2_shape", config.prior.s2_shape},
                {"s2_rate", config.prior.s2_rate}};
  return j;
}

LoadedConfig parse_config(const json& j) {
  require(j.is_object(), "top level must be an object");
  static const std::vector<std::string> known = {
      "problem", "input_density", "acquisition",  "n_initial", "n_max",
      "ekld_stop_threshold", "noise_var", "seed", "warm_burn_in", "mcmc", "bgo", "prior"};
  for (const auto& [key, _] : j.items()) {
    bool ok = false;
    for (const std::string& k : known) ok = ok || k == key;
    require(ok, "unknown key \"" + key + "\"");
  }

  if (j.contains("input_density"))
    require(j["input_density"] == "uniform",
            "only the uniform input density is supported; the closed-form integrals assume "
            "the uniform hypercube");

  LoadedConfig out;
  require(j.contains("problem"), "missing \"problem\"");
  const json& pj = j["problem"];
  if (pj.is_string()) {
    out.problem = make_builtin_problem(pj.get<std::string>());
  } else {
    require(pj.is_object(), "\"problem\" must be a name or an object");
    Problem p;
    p.name = pj.value("name", std::string("external"));
    require(pj.contains("domain"), "external problem needs a \"domain\"");
    for (const auto& pair : pj["domain"]) {
      require(pair.is_array() && pair.size() == 2, "domain entries are [lower, upper] pairs");
      p.domain.emplace_back(pair[0].get<double>(), pair[1].get<double>());
    }
    if (pj.contains("command")) {
      ExternalCommand cmd;
      cmd.argv = pj["command"].get<std::vector<std::string>>();
      cmd.timeout_s = pj.value("timeout_s", 3600.0);
      p.external = cmd;
    } else if (pj.contains("builtin")) {
      const Problem base = make_builtin_problem(pj["builtin"].get<std::string>());
      require(static_cast<int>(p.domain.size()) == base.dim(),
              "domain dimension does not match the named builtin");
      p.builtin = base.builtin;
      p.reference_qoi = base.reference_qoi;
    } else {
      require(false, "problem object needs \"command\" or \"builtin\"");
    }
    p.default_n_initial = pj.value("n_initial", 3);
    p.default_n_max = pj.value("n_max", 20);
    out.problem = p;
  }
  out.problem.validate();

  EngineConfig& c = out.engine;
  c.acquisition = acquisition_from_string(j.value("acquisition", std::string("ekld")));
  c.n_initial = j.value("n_initial", out.problem.default_n_initial);
  c.n_max = j.value("n_max", out.problem.default_n_max);
  if (j.contains("ekld_stop_threshold") && !j["ekld_stop_threshold"].is_null())
    c.ekld_stop_threshold = j["ekld_stop_threshold"].get<double>();
  c.noise_var = j.value("noise_var", 1e-6);
  c.master_seed = j.value("seed", 0ULL);
  c.warm_burn_in = j.value("warm_burn_in", 50);
  if (j.contains("mcmc")) {
    const json& m = j["mcmc"];
    c.mcmc.n_walkers = m.value("n_walkers", 0);
    c.mcmc.n_steps = m.value("n_steps", 500);
    c.mcmc.burn_in = m.value("burn_in", 250);
    c.mcmc.thin = m.value("thin", 0);
    c.mcmc.target_samples = m.value("target_samples", 100);
    c.mcmc.stretch_a = m.value("stretch_a", 2.0);
  }
  if (j.contains("bgo")) {
    const json& b = j["bgo"];
    c.bgo.t_init = b.value("t_init", 0);
    c.bgo.t_max = b.value("t_max", 20);
    c.bgo.n_candidates = b.value("n_candidates", 0);
    c.bgo.tol = b.value("tol", 1e-4);
  }
  if (j.contains("prior")) {
    const json& p = j["prior"];
    c.prior.lengthscale_rate = p.value("lengthscale_rate", 1.0);
    c.prior.s2_shape = p.value("s2_shape", 2.0);
    c.prior.s2_rate = p.value("s2_rate", 1.0);
  }
  c.validate();
  return out;
}

LoadedConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw contract_error("config: cannot open " + path);
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw contract_error(std::string("config: ") + e.what());
  }
  return parse_config(j);
}

}  // namespace bode::io
