#include "bode/engine.hpp"

#include <chrono>
#include <cmath>
#include <limits>

#include "bode/parallel.hpp"
#include "bode/rng.hpp"

namespace bode {

std::string to_string(AcquisitionRule a) {
  switch (a) {
    case AcquisitionRule::ekld: return "ekld";
    case AcquisitionRule::us: return "us";
    case AcquisitionRule::random: return "random";
  }
  return "ekld";
}

AcquisitionRule acquisition_from_string(const std::string& s) {
  if (s == "ekld") return AcquisitionRule::ekld;
  if (s == "us") return AcquisitionRule::us;
  if (s == "random") return AcquisitionRule::random;
  throw contract_error("unknown acquisition rule: " + s + " (expected ekld|us|random)");
}

void EngineConfig::validate() const {
  if (n_initial < 1 || n_initial >= n_max)
    throw contract_error("EngineConfig: need 1 <= n_initial < n_max");
  if (!(noise_var >= 0.0)) throw contract_error("EngineConfig: noise_var must be non-negative");
  prior.validate();
}

Matrix initial_design(int n_initial, int d, std::uint64_t seed) {
  if (n_initial < 1) throw contract_error("initial_design: n_initial must be >= 1");
  return lhs(n_initial, d, seed);
}

std::pair<double, double> marginal_qoi_belief(const std::vector<QoiBelief>& beliefs) {
  if (beliefs.empty()) throw contract_error("marginal_qoi_belief: empty ensemble");
  const double inv = 1.0 / static_cast<double>(beliefs.size());
  double mean = 0.0;
  for (const QoiBelief& b : beliefs) mean += b.mu1;
  mean *= inv;
  double var = 0.0;
  for (const QoiBelief& b : beliefs) {
    const double d = b.mu1 - mean;
    var += b.sigma1_sq + d * d;
  }
  var *= inv;
  return {mean, var};
}

std::optional<std::string> stopping_check(const RunRecord& record, const EngineConfig& config) {
  const int n = static_cast<int>(record.initial_Y_raw.size()) +
                static_cast<int>(record.iterations.size());
  if (n >= config.n_max) return "budget";
  if (config.ekld_stop_threshold && !record.iterations.empty()) {
    const double last = record.iterations.back().max_mean_ekld;
    if (std::isfinite(last) && last < *config.ekld_stop_threshold) return "ekld_threshold";
    if (std::isinf(*config.ekld_stop_threshold)) return "ekld_threshold";
  }
  return std::nullopt;
}

namespace {

struct BeliefSnapshot {
  double mean_raw;
  double var_raw;
  double acceptance_rate;
  long sigma2_clamps;
  long belief_saturated;
  long variance_clamps;
};

// Sample the hyper-posterior for the current data, condition one GP state per
// draw, and reduce the ensemble belief to raw output units.
struct EnsembleState {
  ThetaEnsemble ensemble;
  std::vector<GPState> states;
  std::vector<QoiContext> contexts;
  BeliefSnapshot belief;
};

EnsembleState build_ensemble(const Dataset& data, const EngineConfig& config,
                             const McmcSettings& mcmc, const std::optional<Matrix>& warm,
                             bool* retried) {
  EnsembleState es;
  try {
    es.ensemble = sample_posterior(data, config.prior, mcmc, warm, config.noise_var);
  } catch (const degenerate_sampling_error&) {
    McmcSettings retry = mcmc;
    retry.seed = rng::derive_seed(mcmc.seed, 0x9d5f, 1);
    es.ensemble = sample_posterior(data, config.prior, retry, warm, config.noise_var);
    if (retried) *retried = true;
  }

  const std::size_t S = es.ensemble.samples.size();
  es.states.resize(S);
  exec::parallel_for(static_cast<std::ptrdiff_t>(S), [&](std::ptrdiff_t s) {
    es.states[s] = condition(data, es.ensemble.samples[s]);
  });
  es.contexts.reserve(S);
  for (const GPState& st : es.states) es.contexts.emplace_back(st);

  std::vector<QoiBelief> beliefs(S);
  for (std::size_t s = 0; s < S; ++s) beliefs[s] = es.contexts[s].belief();
  const auto [mean_std, var_std] = marginal_qoi_belief(beliefs);
  const Standardizer& sc = data.standardizer;
  es.belief.mean_raw = sc.to_raw(mean_std);
  es.belief.var_raw = sc.var_to_raw(var_std);
  es.belief.acceptance_rate = es.ensemble.acceptance_rate;
  es.belief.sigma2_clamps = 0;
  es.belief.belief_saturated = 0;
  es.belief.variance_clamps = 0;
  return es;
}

void harvest_diagnostics(const EnsembleState& es, IterationDiagnostics* diag) {
  for (const QoiContext& c : es.contexts) {
    diag->sigma2_clamps += c.diagnostics()->sigma2_clamps.load(std::memory_order_relaxed);
    diag->belief_saturated += c.diagnostics()->belief_saturated.load(std::memory_order_relaxed);
  }
  for (const GPState& s : es.states)
    diag->variance_clamps += s.diag->variance_clamps.load(std::memory_order_relaxed);
}

bool duplicates_row(const Matrix& X, const Vector& x) {
  for (Eigen::Index i = 0; i < X.rows(); ++i)
    if ((X.row(i).transpose() - x).cwiseAbs().maxCoeff() == 0.0) return true;
  return false;
}

}  // namespace

RunRecord run(const Problem& problem, const EngineConfig& config) {
  problem.validate();
  config.validate();
  const auto t_run0 = std::chrono::steady_clock::now();
  const int d = problem.dim();

  RunRecord record;
  record.config = config;
  record.problem_name = problem.name;

  // Initial design and observations.
  Matrix X = initial_design(config.n_initial, d,
                            rng::derive_seed(config.master_seed, rng::kInitialDesign));
  Vector y_raw(config.n_initial);
  try {
    for (int i = 0; i < config.n_initial; ++i)
      y_raw[i] = problem.evaluate(problem.to_raw(X.row(i)));
  } catch (const evaluation_error& e) {
    record.termination = "evaluation_failure";
    record.error_message = e.what();
    record.initial_X_unit = X;
    record.initial_Y_raw = Vector();
    return record;
  }
  record.initial_X_unit = X;
  record.initial_Y_raw = y_raw;

  std::optional<Matrix> warm;
  int iteration = 0;
  for (;;) {
    if (auto reason = stopping_check(record, config)) {
      record.termination = *reason;
      break;
    }
    ++iteration;
    const auto t0 = std::chrono::steady_clock::now();

    const Dataset data = Dataset::from_raw(X, y_raw);
    McmcSettings mcmc = config.mcmc;
    mcmc.seed = rng::derive_seed(config.master_seed, rng::kMcmc, iteration);
    if (warm) mcmc.burn_in = config.warm_burn_in;

    IterationRecord rec;
    rec.index = iteration;
    EnsembleState es;
    try {
      es = build_ensemble(data, config, mcmc, warm, &rec.diag.mcmc_retried);
    } catch (const degenerate_sampling_error& e) {
      record.termination = "degenerate_sampling";
      record.error_message = e.what();
      break;
    }
    warm = es.ensemble.last_walker_state;

    rec.qoi_mean = es.belief.mean_raw;
    rec.qoi_variance = es.belief.var_raw;
    rec.diag.acceptance_rate = es.ensemble.acceptance_rate;

    // Choose the next design.
    Vector x_next(d);
    rec.max_mean_ekld = std::numeric_limits<double>::quiet_NaN();
    switch (config.acquisition) {
      case AcquisitionRule::ekld: {
        BgoSettings bgo = config.bgo;
        bgo.seed = rng::derive_seed(config.master_seed, rng::kBgo, iteration);
        const std::span<const QoiContext> ctxs(es.contexts);
        const auto objective = [&](const Vector& x) { return ekld(ctxs, x).mean_gain; };
        const BgoResult res = maximize_ekld(objective, d, bgo);
        x_next = res.x;
        rec.max_mean_ekld = res.g;
        break;
      }
      case AcquisitionRule::us: {
        const int nc = config.bgo.resolved(d).n_candidates;
        x_next = us_next(std::span<const GPState>(es.states), nc,
                         rng::derive_seed(config.master_seed, rng::kUs, iteration));
        break;
      }
      case AcquisitionRule::random: {
        rng::Rng r(rng::derive_seed(config.master_seed, rng::kRandomAcq, iteration));
        for (int j = 0; j < d; ++j) x_next[j] = r.uniform01();
        break;
      }
    }

    // Never duplicate an existing row exactly; nudge in a random in-domain
    // direction instead.
    if (duplicates_row(X, x_next)) {
      rng::Rng r(rng::derive_seed(config.master_seed, rng::kPerturb, iteration));
      for (int j = 0; j < d; ++j) {
        double v = x_next[j] + (r.uniform01() < 0.5 ? -1e-6 : 1e-6);
        if (v < 0.0) v = x_next[j] + 1e-6;
        if (v > 1.0) v = x_next[j] - 1e-6;
        x_next[j] = v;
      }
      rec.diag.perturbed_duplicate = true;
    }

    double y_next;
    try {
      y_next = problem.evaluate(problem.to_raw(x_next));
    } catch (const evaluation_error& e) {
      record.termination = "evaluation_failure";
      record.error_message = e.what();
      break;
    }

    X.conservativeResize(X.rows() + 1, Eigen::NoChange);
    X.row(X.rows() - 1) = x_next;
    y_raw.conservativeResize(y_raw.size() + 1);
    y_raw[y_raw.size() - 1] = y_next;

    rec.x_unit = x_next;
    rec.x_raw = problem.to_raw(x_next);
    rec.y_raw = y_next;
    harvest_diagnostics(es, &rec.diag);
    rec.elapsed_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    record.iterations.push_back(std::move(rec));
  }

  record.final_X_unit = X;
  record.final_Y_raw = y_raw;

  // Belief conditioned on everything observed, for the run summary.
  if (record.termination == "budget" || record.termination == "ekld_threshold") {
    const Dataset data = Dataset::from_raw(X, y_raw);
    McmcSettings mcmc = config.mcmc;
    mcmc.seed = rng::derive_seed(config.master_seed, rng::kMcmc, iteration + 1);
    if (warm) mcmc.burn_in = config.warm_burn_in;
    try {
      const EnsembleState es = build_ensemble(data, config, mcmc, warm, nullptr);
      record.final_belief =
          FinalBelief{es.belief.mean_raw, es.belief.var_raw, es.belief.acceptance_rate};
    } catch (const degenerate_sampling_error& e) {
      record.termination = "degenerate_sampling";
      record.error_message = e.what();
    }
  }

  record.total_elapsed_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_run0).count();
  return record;
}

}  // namespace bode
