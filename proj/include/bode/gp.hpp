#ifndef BODE_GP_HPP
#define BODE_GP_HPP

#include <atomic>
#include <memory>

#include "bode/kernel.hpp"
#include "bode/types.hpp"

namespace bode {

/// One draw of the GP hyperparameters. The observation-noise variance is a
/// fixed constant, never inferred (1e-6 in standardized-output space unless
/// configured otherwise).
struct HyperSample {
  KernelParams kernel;
  double noise_var = 1e-6;
};

/// Affine map between raw and standardized output space.
struct Standardizer {
  double mean = 0.0;
  double scale = 1.0;

  double to_std(double raw) const { return (raw - mean) / scale; }
  double to_raw(double std) const { return std * scale + mean; }
  double var_to_raw(double var_std) const { return var_std * scale * scale; }

  /// Zero-mean / unit-variance over the given raw outputs. Falls back to
  /// scale 1 when the outputs are (near-)constant so the map stays invertible.
  static Standardizer fit(const Eigen::Ref<const Vector>& y_raw);
};

/// Observed designs (rows in the closed unit hypercube) and standardized
/// outputs, with the map back to raw units.
struct Dataset {
  Matrix X;       // n x d
  Vector Y;       // standardized outputs
  Standardizer standardizer;

  int n() const { return static_cast<int>(X.rows()); }
  int dim() const { return static_cast<int>(X.cols()); }

  static Dataset from_raw(Matrix X, const Eigen::Ref<const Vector>& y_raw);
  static Dataset from_standardized(Matrix X, Vector y_std,
                                   Standardizer s = Standardizer{});
};

/// Counters updated during prediction; shared so that copies of a state keep
/// reporting into the same place.
struct GpDiagnostics {
  std::atomic<long> variance_clamps{0};
  std::atomic<long> out_of_domain_evals{0};
};

/// A dataset conditioned on one hyperparameter draw: Cholesky factor of
/// K_n + noise*I (plus any jitter), and the weight vector alpha solving
/// (K_n + noise*I) alpha = Y. Immutable after construction; concurrent
/// read-only prediction is safe.
struct GPState {
  Dataset dataset;
  HyperSample theta;
  Matrix chol;        // lower triangular
  Vector alpha;
  double jitter_used = 0.0;
  std::shared_ptr<GpDiagnostics> diag = std::make_shared<GpDiagnostics>();

  /// Solve L z = b with the stored factor.
  Vector solve_lower(const Eigen::Ref<const Vector>& b) const;
  /// Solve (K + noise*I + jitter*I) z = b.
  Vector solve(const Eigen::Ref<const Vector>& b) const;
};

struct Prediction {
  double mean;
  double variance;
};

/// Factorize K_n + noise*I, escalating diagonal jitter from 1e-10*s2 to
/// 1e-4*s2 in powers of ten if the factorization fails.
GPState condition(const Dataset& dataset, const HyperSample& theta);

/// Posterior mean and variance at x (standardized output space). Variance is
/// clamped at zero; evaluation outside the unit hypercube is permitted but
/// counted in diagnostics.
Prediction predict(const GPState& state, const Eigen::Ref<const Vector>& x);

/// Posterior covariance k_n(x, x2).
double posterior_cross_cov(const GPState& state, const Eigen::Ref<const Vector>& x,
                           const Eigen::Ref<const Vector>& x2);

/// log N(Y | 0, K_n + noise*I), evaluated through the factorization.
double log_marginal_likelihood(const Dataset& dataset, const HyperSample& theta);
double log_marginal_likelihood(const GPState& state);

}  // namespace bode

#endif
