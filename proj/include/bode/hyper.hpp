#ifndef BODE_HYPER_HPP
#define BODE_HYPER_HPP

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "bode/gp.hpp"
#include "bode/rng.hpp"
#include "bode/types.hpp"

namespace bode {

/// Independent priors on the kernel hyperparameters: Exponential(rate) on
/// each lengthscale, Gamma(shape, rate) on the signal variance.
struct PriorSpec {
  double lengthscale_rate = 1.0;
  double s2_shape = 2.0;
  double s2_rate = 1.0;

  void validate() const;
};

/// Stretch-move ensemble settings. Zero n_walkers / thin means "resolve from
/// the problem dimension and the target sample count".
struct McmcSettings {
  int n_walkers = 0;        // auto: max(6, 2*(d+1)) rounded up to even
  int n_steps = 500;
  int burn_in = 250;
  int thin = 0;             // auto: aim for ~target_samples flattened draws
  int target_samples = 100;
  double stretch_a = 2.0;
  std::uint64_t seed = 0;

  /// Fill in the automatic fields for hyperparameter dimension D = d + 1.
  McmcSettings resolved(int theta_dim) const;
  void validate(int theta_dim) const;
};

/// Flattened posterior draws plus the final walker positions (log-parameter
/// space) for warm-starting the next round.
struct ThetaEnsemble {
  std::vector<HyperSample> samples;
  Matrix last_walker_state;   // n_walkers x (d+1)
  double acceptance_rate = 0.0;
};

/// Log prior density of theta; -inf for any non-positive parameter. The
/// noise variance is a fixed constant and carries no prior term.
double log_prior(const HyperSample& theta, const PriorSpec& prior);

/// log_prior + log marginal likelihood (unnormalized). Singular covariances
/// map to -inf so the sampler simply rejects them.
double log_posterior(const HyperSample& theta, const Dataset& dataset, const PriorSpec& prior);

/// Goodman-Weare stretch move over an arbitrary log density, advancing the
/// two half-ensembles alternately (proposals within one half are independent
/// and evaluated in parallel). Acceptance uses the z^(D-1) Jacobian factor.
struct StretchResult {
  Matrix samples;             // S x D, flattened kept draws
  Matrix last_walker_state;   // W x D
  double acceptance_rate;
};

StretchResult stretch_sample(const std::function<double(const Vector&)>& log_density,
                             const Matrix& initial_walkers, int n_steps, int burn_in,
                             int thin, double stretch_a, rng::Rng& rng);

/// Sample the hyperparameter posterior in log-parameter space (with the
/// change-of-variables Jacobian), returning positive-parameter draws.
/// Throws degenerate_sampling_error when the acceptance rate drops below 1%.
ThetaEnsemble sample_posterior(const Dataset& dataset, const PriorSpec& prior,
                               const McmcSettings& settings,
                               const std::optional<Matrix>& warm_start = std::nullopt,
                               double noise_var = 1e-6);

}  // namespace bode

#endif
