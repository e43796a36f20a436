#ifndef BODE_QOI_HPP
#define BODE_QOI_HPP

#include <atomic>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "bode/gp.hpp"
#include "bode/types.hpp"

namespace bode {

/// Belief about Q = integral of f over the unit hypercube under the uniform
/// density, conditioned on one hyperparameter draw.
struct QoiBelief {
  double mu1 = 0.0;
  double sigma1_sq = 0.0;
};

/// Moments of the belief after a hypothetical observation (x, y). sigma2_sq
/// never exceeds the parent sigma1_sq; denom = sigma_n^2(x) + noise.
struct HypotheticalMoments {
  double mu2 = 0.0;
  double sigma2_sq = 0.0;
  double nu = 0.0;
  double denom = 0.0;
};

struct EkldValue {
  double mean_gain = 0.0;
  std::optional<std::vector<double>> per_theta;
};

struct QoiDiagnostics {
  std::atomic<long> sigma2_clamps{0};
  std::atomic<long> belief_saturated{0};
};

/// epsilon(x) = integral of k(x, t) over the unit hypercube.
double epsilon_at(const Eigen::Ref<const Vector>& x, const KernelParams& params);

/// sigma0^2 = double integral of k over the unit hypercube (prior variance of Q).
double sigma0_sq(const KernelParams& params);

/// Per-state cache: epsilon vector over the observed designs, the solve
/// against the covariance, and the current belief. Every candidate reuses
/// these, so one EKLD evaluation costs O(n^2) instead of O(n^3).
/// The referenced GPState must outlive the context.
class QoiContext {
 public:
  explicit QoiContext(const GPState& state);

  const GPState& state() const { return *state_; }
  const Vector& epsilon_n() const { return eps_; }
  double sigma0() const { return sigma0_; }
  QoiBelief belief() const { return {mu1_, sigma1_sq_}; }
  double variance_floor() const;
  std::shared_ptr<QoiDiagnostics> diagnostics() const { return diag_; }

 private:
  const GPState* state_;
  Vector eps_;       // epsilon(x_i) over observed designs
  Vector weights_;   // (K + noise I)^{-1} epsilon_n
  double sigma0_;
  double mu1_;
  double sigma1_sq_;
  std::shared_ptr<QoiDiagnostics> diag_ = std::make_shared<QoiDiagnostics>();

  friend double nu_at(const QoiContext&, const Eigen::Ref<const Vector>&);
};

/// mu1 = eps_n . alpha_n, sigma1^2 = sigma0^2 - eps_n . (K + noise I)^{-1} eps_n.
QoiBelief qoi_prior_moments(const GPState& state);
inline QoiBelief qoi_prior_moments(const QoiContext& ctx) { return ctx.belief(); }

/// nu(x) = epsilon(x) - eps_n . (K + noise I)^{-1} k_n(x): posterior
/// covariance between Q and the function value at x.
double nu_at(const QoiContext& ctx, const Eigen::Ref<const Vector>& x);
double nu_at(const GPState& state, const Eigen::Ref<const Vector>& x);

/// Rank-one update of the belief for a hypothetical observation.
HypotheticalMoments hypothetical_moments(const QoiContext& ctx,
                                         const Eigen::Ref<const Vector>& x, double y_hyp);
HypotheticalMoments hypothetical_moments(const GPState& state,
                                         const Eigen::Ref<const Vector>& x, double y_hyp);

/// KL(N(mu2, sigma2_sq) || N(mu1, sigma1_sq)); throws on non-positive variance.
double kld_gaussian(double mu1, double sigma1_sq, double mu2, double sigma2_sq);

/// Expected KL divergence with the hypothetical outcome integrated out
/// analytically against N(m_n(x), sigma_n^2(x) + noise). Returns 0 with a
/// "belief saturated" diagnostic when sigma1^2 sits at the variance floor.
double ekld_given_theta(const QoiContext& ctx, const Eigen::Ref<const Vector>& x);
double ekld_given_theta(const GPState& state, const Eigen::Ref<const Vector>& x);

/// Average of ekld_given_theta over a hyperparameter ensemble.
EkldValue ekld(std::span<const QoiContext> states, const Eigen::Ref<const Vector>& x,
               bool want_per_theta = false);
EkldValue ekld(std::span<const GPState> states, const Eigen::Ref<const Vector>& x,
               bool want_per_theta = false);

}  // namespace bode

#endif
