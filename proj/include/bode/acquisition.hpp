#ifndef BODE_ACQUISITION_HPP
#define BODE_ACQUISITION_HPP

#include <cstdint>
#include <functional>
#include <span>

#include "bode/gp.hpp"
#include "bode/types.hpp"

namespace bode {

/// Inner-loop Bayesian global optimization settings. Zero t_init /
/// n_candidates means "resolve from the dimension". tol is the relative
/// early-stop factor: the loop stops once the best AEI score drops below
/// tol * (largest objective value seen so far + 1e-12).
struct BgoSettings {
  int t_init = 0;        // auto: max(5, 2d)
  int t_max = 20;        // total objective evaluations
  int n_candidates = 0;  // auto: 200d
  double tol = 1e-4;
  std::uint64_t seed = 0;

  BgoSettings resolved(int dim) const;
  void validate() const;
};

/// Latin hypercube design: n rows in [0,1]^d, one sample per stratum and
/// dimension, uniform within each stratum.
Matrix lhs(int n, int d, std::uint64_t seed);

/// Maximum-likelihood GP surrogate of the acquisition surface. Fitted on
/// standardized values; predictions are returned in the original units.
struct InnerSurrogate {
  Matrix designs;
  Vector values;
  Standardizer standardizer;
  KernelParams kernel;    // in standardized units
  double noise_var = 0.0; // fitted, floored at 1e-8
  Matrix chol;
  Vector alpha;

  Prediction predict_at(const Eigen::Ref<const Vector>& x) const;
  /// Predictive sd in original units, epistemic part only.
  double noise_sd() const;
};

/// Fit by maximizing the log marginal likelihood with Nelder-Mead from
/// multistart draws (lengthscales log-uniform in [0.01, 3]). Throws
/// degenerate_fit_error when every restart fails to factorize.
InnerSurrogate fit_inner_surrogate(const Eigen::Ref<const Matrix>& designs,
                                   const Eigen::Ref<const Vector>& values,
                                   std::uint64_t seed = 0);

/// Augmented expected improvement (maximization form) of each candidate row:
/// EI against the effective best mu(x**) with x** maximizing mu - sd over the
/// evaluated designs, discounted by 1 - noise_sd / sqrt(s^2(x) + noise_sd^2).
Vector aei(const InnerSurrogate& surrogate, const Eigen::Ref<const Matrix>& candidates);

struct BgoResult {
  Vector x;               // evaluated design with the largest observed value
  double g = 0.0;         // that value
  int n_evals = 0;
  bool degenerate_fit = false;
  bool early_stopped = false;
};

/// Algorithm: evaluate the objective at t_init uniform points, then loop
/// fit -> LHS candidates -> argmax AEI -> early stop or evaluate, up to t_max
/// evaluations. A degenerate surrogate fit downgrades the remaining
/// iterations to random search.
BgoResult maximize_ekld(const std::function<double(const Vector&)>& objective, int dim,
                        const BgoSettings& settings);

/// Uncertainty-sampling baseline: argmax of the ensemble-averaged predictive
/// variance over an LHS candidate set.
Vector us_next(std::span<const GPState> states, int n_candidates, std::uint64_t seed);

}  // namespace bode

#endif
