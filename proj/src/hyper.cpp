#include "bode/hyper.hpp"

#include <cmath>
#include <limits>

#include "bode/parallel.hpp"

namespace bode {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();
}

void PriorSpec::validate() const {
  if (!(lengthscale_rate > 0.0) || !(s2_shape > 0.0) || !(s2_rate > 0.0))
    throw contract_error("PriorSpec: all fields must be positive");
}

McmcSettings McmcSettings::resolved(int theta_dim) const {
  McmcSettings r = *this;
  if (r.n_walkers == 0) {
    r.n_walkers = std::max(6, 2 * theta_dim);
    if (r.n_walkers % 2 != 0) ++r.n_walkers;
  }
  if (r.thin == 0) {
    const int kept = std::max(1, r.n_steps - r.burn_in);
    const long total = static_cast<long>(kept) * r.n_walkers;
    r.thin = std::max(1, static_cast<int>(total / std::max(1, r.target_samples)));
  }
  return r;
}

void McmcSettings::validate(int theta_dim) const {
  if (n_walkers < 2 * theta_dim || n_walkers % 2 != 0)
    throw contract_error("McmcSettings: n_walkers must be even and >= 2*dim(theta)");
  if (n_steps <= burn_in) throw contract_error("McmcSettings: n_steps must exceed burn_in");
  if (thin < 1) throw contract_error("McmcSettings: thin must be >= 1");
  if (!(stretch_a > 1.0)) throw contract_error("McmcSettings: stretch_a must exceed 1");
}

double log_prior(const HyperSample& theta, const PriorSpec& prior) {
  const double s2 = theta.kernel.s2;
  if (!(s2 > 0.0)) return kNegInf;
  for (Eigen::Index j = 0; j < theta.kernel.lengthscales.size(); ++j)
    if (!(theta.kernel.lengthscales[j] > 0.0)) return kNegInf;

  double lp = 0.0;
  for (Eigen::Index j = 0; j < theta.kernel.lengthscales.size(); ++j)
    lp += std::log(prior.lengthscale_rate) - prior.lengthscale_rate * theta.kernel.lengthscales[j];
  lp += prior.s2_shape * std::log(prior.s2_rate) - std::lgamma(prior.s2_shape) +
        (prior.s2_shape - 1.0) * std::log(s2) - prior.s2_rate * s2;
  return lp;
}

double log_posterior(const HyperSample& theta, const Dataset& dataset, const PriorSpec& prior) {
  const double lp = log_prior(theta, prior);
  if (!std::isfinite(lp)) return kNegInf;
  try {
    return lp + log_marginal_likelihood(dataset, theta);
  } catch (const singular_covariance_error&) {
    return kNegInf;
  }
}

StretchResult stretch_sample(const std::function<double(const Vector&)>& log_density,
                             const Matrix& initial_walkers, int n_steps, int burn_in,
                             int thin, double stretch_a, rng::Rng& rng) {
  const int W = static_cast<int>(initial_walkers.rows());
  const int D = static_cast<int>(initial_walkers.cols());
  if (W < 2 || W % 2 != 0) throw contract_error("stretch_sample: need an even walker count >= 2");
  const int half = W / 2;

  Matrix walkers = initial_walkers;
  Vector logp(W);
  exec::parallel_for(W, [&](std::ptrdiff_t w) { logp[w] = log_density(walkers.row(w)); });

  const int kept_steps = (n_steps - burn_in + thin - 1) / thin;
  Matrix samples(static_cast<Eigen::Index>(kept_steps) * W, D);
  long accepted = 0;
  Eigen::Index out = 0;

  // Scratch for one half-step: draws are generated serially, the density
  // evaluations (the expensive part) run in parallel.
  std::vector<int> partner(half);
  Vector zs(half), log_u(half);
  Matrix proposals(half, D);
  Vector prop_logp(half);

  for (int step = 0; step < n_steps; ++step) {
    for (int side = 0; side < 2; ++side) {
      const int base = side * half;
      const int other = (1 - side) * half;
      for (int k = 0; k < half; ++k) {
        partner[k] = other + static_cast<int>(rng.below(static_cast<std::uint64_t>(half)));
        const double u = rng.uniform01();
        const double g = (stretch_a - 1.0) * u + 1.0;
        zs[k] = g * g / stretch_a;
        double ua = rng.uniform01();
        while (ua <= 0.0) ua = rng.uniform01();
        log_u[k] = std::log(ua);
        proposals.row(k) =
            walkers.row(partner[k]) + zs[k] * (walkers.row(base + k) - walkers.row(partner[k]));
      }
      exec::parallel_for(half, [&](std::ptrdiff_t k) { prop_logp[k] = log_density(proposals.row(k)); });
      for (int k = 0; k < half; ++k) {
        const double log_accept =
            (D - 1) * std::log(zs[k]) + prop_logp[k] - logp[base + k];
        if (log_u[k] < log_accept) {
          walkers.row(base + k) = proposals.row(k);
          logp[base + k] = prop_logp[k];
          ++accepted;
        }
      }
    }
    if (step >= burn_in && (step - burn_in) % thin == 0) {
      samples.middleRows(out, W) = walkers;
      out += W;
    }
  }

  StretchResult result;
  result.samples = samples.topRows(out);
  result.last_walker_state = walkers;
  result.acceptance_rate =
      static_cast<double>(accepted) / (static_cast<double>(n_steps) * W);
  return result;
}

ThetaEnsemble sample_posterior(const Dataset& dataset, const PriorSpec& prior,
                               const McmcSettings& settings,
                               const std::optional<Matrix>& warm_start, double noise_var) {
  prior.validate();
  if (dataset.n() < 1) throw contract_error("sample_posterior: empty dataset");
  const int d = dataset.dim();
  const int D = d + 1;  // log s2 followed by log lengthscales
  const McmcSettings cfg = settings.resolved(D);
  cfg.validate(D);
  if (warm_start && (warm_start->rows() != cfg.n_walkers || warm_start->cols() != D))
    throw contract_error("sample_posterior: warm_start shape mismatch");

  const auto theta_of = [&](const Vector& eta) {
    HyperSample t;
    t.kernel.s2 = std::exp(eta[0]);
    t.kernel.lengthscales.resize(d);
    for (int j = 0; j < d; ++j) t.kernel.lengthscales[j] = std::exp(eta[j + 1]);
    t.noise_var = noise_var;
    return t;
  };

  // Target in eta = log(theta) space: prior * likelihood * |d theta / d eta|,
  // the Jacobian being exp(sum eta).
  const auto log_target = [&](const Vector& eta) -> double {
    if (!eta.allFinite()) return kNegInf;
    for (int j = 0; j < D; ++j)
      if (eta[j] < -40.0 || eta[j] > 40.0) return kNegInf;
    const HyperSample t = theta_of(eta);
    const double lp = log_posterior(t, dataset, prior);
    if (!std::isfinite(lp)) return kNegInf;
    return lp + eta.sum();
  };

  rng::Rng rng(cfg.seed);
  Matrix init(cfg.n_walkers, D);
  if (warm_start) {
    init = *warm_start;
  } else {
    for (int w = 0; w < cfg.n_walkers; ++w) {
      for (int attempt = 0; attempt < 50; ++attempt) {
        init(w, 0) = std::log(rng.gamma(prior.s2_shape, prior.s2_rate));
        for (int j = 0; j < d; ++j)
          init(w, j + 1) = std::log(rng.exponential(prior.lengthscale_rate));
        if (std::isfinite(log_target(init.row(w)))) break;
      }
    }
  }

  const StretchResult res = stretch_sample(log_target, init, cfg.n_steps, cfg.burn_in,
                                           cfg.thin, cfg.stretch_a, rng);
  if (res.acceptance_rate < 0.01)
    throw degenerate_sampling_error(
        "sample_posterior: ensemble stuck (acceptance " +
            std::to_string(res.acceptance_rate) + " over " + std::to_string(cfg.n_steps) +
            " steps, " + std::to_string(cfg.n_walkers) + " walkers)",
        res.acceptance_rate);

  ThetaEnsemble ens;
  ens.samples.reserve(static_cast<std::size_t>(res.samples.rows()));
  for (Eigen::Index i = 0; i < res.samples.rows(); ++i)
    ens.samples.push_back(theta_of(res.samples.row(i)));
  ens.last_walker_state = res.last_walker_state;
  ens.acceptance_rate = res.acceptance_rate;
  return ens;
}

}  // namespace bode
