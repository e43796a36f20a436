#include "bode/qoi.hpp"

#include <cmath>

#include "bode/parallel.hpp"

namespace bode {

namespace {
constexpr double kSqrt2 = 1.4142135623730950488016887242097;
constexpr double kSqrtPi = 1.7724538509055160272981674833411;
constexpr double kHalfPi = 1.5707963267948966192313216916398;
}  // namespace

double epsilon_at(const Eigen::Ref<const Vector>& x, const KernelParams& params) {
  if (x.size() != params.lengthscales.size())
    throw contract_error("epsilon_at: dimension mismatch");
  double value = params.s2;
  for (Eigen::Index k = 0; k < x.size(); ++k) {
    const double l = params.lengthscales[k];
    value *= std::sqrt(kHalfPi) * l *
             (std::erf((1.0 - x[k]) / (kSqrt2 * l)) - std::erf(-x[k] / (kSqrt2 * l)));
  }
  return value;
}

double sigma0_sq(const KernelParams& params) {
  double value = params.s2;
  for (Eigen::Index k = 0; k < params.lengthscales.size(); ++k) {
    const double l = params.lengthscales[k];
    // expm1 keeps the bracket accurate when the lengthscale is large and the
    // two leading terms nearly cancel.
    const double bracket = std::expm1(-1.0 / (2.0 * l * l)) / kSqrtPi +
                           std::erf(1.0 / (kSqrt2 * l)) / (kSqrt2 * l);
    value *= 2.0 * l * l * kSqrtPi * bracket;
  }
  return value;
}

QoiContext::QoiContext(const GPState& state) : state_(&state) {
  const Eigen::Index n = state.dataset.X.rows();
  eps_.resize(n);
  for (Eigen::Index i = 0; i < n; ++i)
    eps_[i] = epsilon_at(state.dataset.X.row(i), state.theta.kernel);
  weights_ = state.solve(eps_);
  sigma0_ = sigma0_sq(state.theta.kernel);
  mu1_ = eps_.dot(state.alpha);
  sigma1_sq_ = std::max(0.0, sigma0_ - eps_.dot(weights_));
}

double QoiContext::variance_floor() const { return std::max(1e-12 * sigma0_, 1e-300); }

QoiBelief qoi_prior_moments(const GPState& state) { return QoiContext(state).belief(); }

double nu_at(const QoiContext& ctx, const Eigen::Ref<const Vector>& x) {
  const GPState& s = ctx.state();
  const Vector k = kernel_vector(s.dataset.X, x, s.theta.kernel);
  return epsilon_at(x, s.theta.kernel) - ctx.weights_.dot(k);
}

double nu_at(const GPState& state, const Eigen::Ref<const Vector>& x) {
  return nu_at(QoiContext(state), x);
}

HypotheticalMoments hypothetical_moments(const QoiContext& ctx,
                                         const Eigen::Ref<const Vector>& x, double y_hyp) {
  const GPState& s = ctx.state();
  const Prediction pred = predict(s, x);
  const double denom = pred.variance + s.theta.noise_var;
  if (!(denom > 0.0))
    throw contract_error("hypothetical_moments: predictive variance + noise must be positive");

  const QoiBelief b = ctx.belief();
  const double nu = nu_at(ctx, x);

  HypotheticalMoments m;
  m.nu = nu;
  m.denom = denom;
  m.mu2 = b.mu1 + nu * (y_hyp - pred.mean) / denom;
  const double raw = b.sigma1_sq - nu * nu / denom;
  const double floor = std::min(ctx.variance_floor(), b.sigma1_sq);
  m.sigma2_sq = raw < floor ? floor : raw;
  if (raw < floor) ctx.diagnostics()->sigma2_clamps.fetch_add(1, std::memory_order_relaxed);
  return m;
}

HypotheticalMoments hypothetical_moments(const GPState& state,
                                         const Eigen::Ref<const Vector>& x, double y_hyp) {
  return hypothetical_moments(QoiContext(state), x, y_hyp);
}

double kld_gaussian(double mu1, double sigma1_sq, double mu2, double sigma2_sq) {
  if (!(sigma1_sq > 0.0) || !(sigma2_sq > 0.0))
    throw contract_error("kld_gaussian: variances must be positive");
  const double d = mu2 - mu1;
  const double v = 0.5 * std::log(sigma1_sq / sigma2_sq) +
                   (sigma2_sq + d * d) / (2.0 * sigma1_sq) - 0.5;
  return v < 0.0 ? 0.0 : v;
}

double ekld_given_theta(const QoiContext& ctx, const Eigen::Ref<const Vector>& x) {
  const GPState& s = ctx.state();
  const QoiBelief b = ctx.belief();
  const double floor = ctx.variance_floor();
  if (b.sigma1_sq <= floor) {
    ctx.diagnostics()->belief_saturated.fetch_add(1, std::memory_order_relaxed);
    return 0.0;
  }

  const Prediction pred = predict(s, x);
  const double denom = pred.variance + s.theta.noise_var;
  if (!(denom > 0.0)) return 0.0;
  const double nu = nu_at(ctx, x);

  const double raw = b.sigma1_sq - nu * nu / denom;
  double sigma2_sq = raw;
  if (raw < floor) {
    sigma2_sq = floor;
    ctx.diagnostics()->sigma2_clamps.fetch_add(1, std::memory_order_relaxed);
  }

  const double g = 0.5 * std::log(b.sigma1_sq / sigma2_sq) +
                   0.5 * sigma2_sq / b.sigma1_sq - 0.5 +
                   0.5 * nu * nu / (b.sigma1_sq * denom);
  return g < 0.0 ? 0.0 : g;
}

double ekld_given_theta(const GPState& state, const Eigen::Ref<const Vector>& x) {
  return ekld_given_theta(QoiContext(state), x);
}

EkldValue ekld(std::span<const QoiContext> states, const Eigen::Ref<const Vector>& x,
               bool want_per_theta) {
  if (states.empty()) throw contract_error("ekld: need at least one state");
  const int n0 = states.front().state().dataset.n();
  for (const QoiContext& c : states)
    if (c.state().dataset.n() != n0)
      throw contract_error("ekld: states conditioned on different datasets");

  std::vector<double> values(states.size());
  exec::parallel_for(static_cast<std::ptrdiff_t>(states.size()),
                     [&](std::ptrdiff_t i) { values[i] = ekld_given_theta(states[i], x); });
  double sum = 0.0;
  for (double v : values) sum += v;

  EkldValue out;
  out.mean_gain = sum / static_cast<double>(states.size());
  if (want_per_theta) out.per_theta = std::move(values);
  return out;
}

EkldValue ekld(std::span<const GPState> states, const Eigen::Ref<const Vector>& x,
               bool want_per_theta) {
  std::vector<QoiContext> ctxs;
  ctxs.reserve(states.size());
  for (const GPState& s : states) ctxs.emplace_back(s);
  return ekld(std::span<const QoiContext>(ctxs), x, want_per_theta);
}

}  // namespace bode
