#include "bode/gp.hpp"

#include <cmath>

namespace bode {

Standardizer Standardizer::fit(const Eigen::Ref<const Vector>& y_raw) {
  Standardizer s;
  const Eigen::Index n = y_raw.size();
  if (n == 0) return s;
  s.mean = y_raw.mean();
  double ss = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double d = y_raw[i] - s.mean;
    ss += d * d;
  }
  const double sd = std::sqrt(ss / static_cast<double>(n));
  s.scale = sd > 1e-12 * std::max(1.0, std::abs(s.mean)) ? sd : 1.0;
  return s;
}

Dataset Dataset::from_raw(Matrix X, const Eigen::Ref<const Vector>& y_raw) {
  if (X.rows() != y_raw.size() || X.rows() < 1)
    throw contract_error("Dataset: X rows must match Y length, n >= 1");
  Dataset d;
  d.standardizer = Standardizer::fit(y_raw);
  d.X = std::move(X);
  d.Y.resize(y_raw.size());
  for (Eigen::Index i = 0; i < y_raw.size(); ++i) d.Y[i] = d.standardizer.to_std(y_raw[i]);
  return d;
}

Dataset Dataset::from_standardized(Matrix X, Vector y_std, Standardizer s) {
  if (X.rows() != y_std.size() || X.rows() < 1)
    throw contract_error("Dataset: X rows must match Y length, n >= 1");
  Dataset d;
  d.X = std::move(X);
  d.Y = std::move(y_std);
  d.standardizer = s;
  return d;
}

Vector GPState::solve_lower(const Eigen::Ref<const Vector>& b) const {
  return chol.triangularView<Eigen::Lower>().solve(b);
}

Vector GPState::solve(const Eigen::Ref<const Vector>& b) const {
  Vector z = chol.triangularView<Eigen::Lower>().solve(b);
  return chol.transpose().triangularView<Eigen::Upper>().solve(z);
}

GPState condition(const Dataset& dataset, const HyperSample& theta) {
  theta.kernel.validate();
  if (theta.noise_var < 0.0) throw contract_error("condition: noise_var must be non-negative");
  if (dataset.n() < 1) throw contract_error("condition: empty dataset");
  if (dataset.dim() != theta.kernel.dim())
    throw contract_error("condition: dataset/kernel dimension mismatch");

  const Eigen::Index n = dataset.X.rows();
  Matrix A = kernel_matrix(dataset.X, theta.kernel);
  A.diagonal().array() += theta.noise_var;

  GPState state;
  state.dataset = dataset;
  state.theta = theta;

  double jitter = 0.0;
  for (int attempt = 0; attempt <= 7; ++attempt) {
    Matrix B = A;
    if (attempt > 0) {
      jitter = 1e-10 * theta.kernel.s2 * std::pow(10.0, attempt - 1);
      B.diagonal().array() += jitter;
    }
    Eigen::LLT<Matrix> llt(B);
    if (llt.info() == Eigen::Success) {
      state.chol = llt.matrixL();
      state.jitter_used = attempt > 0 ? jitter : 0.0;
      state.alpha = state.solve(dataset.Y);
      if (state.alpha.allFinite()) return state;
    }
    if (attempt > 0 && jitter >= 1e-4 * theta.kernel.s2) break;
  }
  throw singular_covariance_error(
      "condition: covariance not positive definite at maximum jitter (" +
      std::to_string(n) + " points); duplicate designs with incompatible outputs "
      "or degenerate hyperparameters");
}

Prediction predict(const GPState& state, const Eigen::Ref<const Vector>& x) {
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    if (x[j] < 0.0 || x[j] > 1.0) {
      state.diag->out_of_domain_evals.fetch_add(1, std::memory_order_relaxed);
      break;
    }
  }
  const Vector k = kernel_vector(state.dataset.X, x, state.theta.kernel);
  const Vector v = state.solve_lower(k);
  double var = state.theta.kernel.s2 - v.squaredNorm();
  if (var < 0.0) {
    state.diag->variance_clamps.fetch_add(1, std::memory_order_relaxed);
    var = 0.0;
  }
  return {k.dot(state.alpha), var};
}

double posterior_cross_cov(const GPState& state, const Eigen::Ref<const Vector>& x,
                           const Eigen::Ref<const Vector>& x2) {
  const Vector v1 = state.solve_lower(kernel_vector(state.dataset.X, x, state.theta.kernel));
  const Vector v2 = state.solve_lower(kernel_vector(state.dataset.X, x2, state.theta.kernel));
  return kernel_eval(x, x2, state.theta.kernel) - v1.dot(v2);
}

double log_marginal_likelihood(const GPState& state) {
  const Eigen::Index n = state.dataset.Y.size();
  double log_det_half = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) log_det_half += std::log(state.chol(i, i));
  constexpr double kLog2Pi = 1.8378770664093454835606594728112;
  return -0.5 * state.dataset.Y.dot(state.alpha) - log_det_half -
         0.5 * static_cast<double>(n) * kLog2Pi;
}

double log_marginal_likelihood(const Dataset& dataset, const HyperSample& theta) {
  return log_marginal_likelihood(condition(dataset, theta));
}

}  // namespace bode
