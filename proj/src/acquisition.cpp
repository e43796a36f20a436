#include "bode/acquisition.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "bode/parallel.hpp"
#include "bode/rng.hpp"

namespace bode {

namespace {

constexpr double kInvSqrt2Pi = 0.3989422804014326779399460599344;

double normal_pdf(double z) { return kInvSqrt2Pi * std::exp(-0.5 * z * z); }
double normal_cdf(double z) { return 0.5 * std::erfc(-z / 1.4142135623730950488); }

// Nelder-Mead maximizer, good enough for a handful of smooth hyperparameters.
// Returns the best point found; `f` may return -inf for infeasible points.
Vector nelder_mead_max(const std::function<double(const Vector&)>& f, const Vector& start,
                       double step, int max_iter, double* best_value) {
  const int n = static_cast<int>(start.size());
  std::vector<Vector> simplex(n + 1, start);
  std::vector<double> value(n + 1);
  for (int i = 0; i < n; ++i) simplex[i + 1][i] += step;
  for (int i = 0; i <= n; ++i) value[i] = f(simplex[i]);

  std::vector<int> order(n + 1);
  for (int iter = 0; iter < max_iter; ++iter) {
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) { return value[a] > value[b]; });
    const int best = order[0], worst = order[n], second_worst = order[n - 1];
    if (std::isfinite(value[best]) && std::isfinite(value[worst]) &&
        value[best] - value[worst] < 1e-10 * (1.0 + std::abs(value[best])))
      break;

    Vector centroid = Vector::Zero(n);
    for (int i = 0; i <= n; ++i)
      if (i != worst) centroid += simplex[i];
    centroid /= n;

    const Vector reflected = centroid + (centroid - simplex[worst]);
    const double fr = f(reflected);
    if (fr > value[best]) {
      const Vector expanded = centroid + 2.0 * (centroid - simplex[worst]);
      const double fe = f(expanded);
      if (fe > fr) {
        simplex[worst] = expanded;
        value[worst] = fe;
      } else {
        simplex[worst] = reflected;
        value[worst] = fr;
      }
    } else if (fr > value[second_worst]) {
      simplex[worst] = reflected;
      value[worst] = fr;
    } else {
      const Vector contracted = centroid + 0.5 * (simplex[worst] - centroid);
      const double fc = f(contracted);
      if (fc > value[worst]) {
        simplex[worst] = contracted;
        value[worst] = fc;
      } else {
        for (int i = 0; i <= n; ++i) {
          if (i == best) continue;
          simplex[i] = simplex[best] + 0.5 * (simplex[i] - simplex[best]);
          value[i] = f(simplex[i]);
        }
      }
    }
  }
  int best = 0;
  for (int i = 1; i <= n; ++i)
    if (value[i] > value[best]) best = i;
  if (best_value) *best_value = value[best];
  return simplex[best];
}

}  // namespace

BgoSettings BgoSettings::resolved(int dim) const {
  BgoSettings r = *this;
  if (r.t_init == 0) r.t_init = std::max(5, 2 * dim);
  if (r.n_candidates == 0) r.n_candidates = 200 * dim;
  if (r.t_init > r.t_max) r.t_init = r.t_max;
  return r;
}

void BgoSettings::validate() const {
  if (t_init < 2) throw contract_error("BgoSettings: t_init must be >= 2");
  if (t_max < t_init) throw contract_error("BgoSettings: t_max must be >= t_init");
  if (n_candidates < 1) throw contract_error("BgoSettings: n_candidates must be >= 1");
  if (!(tol > 0.0)) throw contract_error("BgoSettings: tol must be positive");
}

Matrix lhs(int n, int d, std::uint64_t seed) {
  if (n < 1 || d < 1) throw contract_error("lhs: n and d must be >= 1");
  rng::Rng rng(seed);
  Matrix X(n, d);
  std::vector<int> perm(n);
  for (int j = 0; j < d; ++j) {
    std::iota(perm.begin(), perm.end(), 0);
    for (int i = n - 1; i > 0; --i)
      std::swap(perm[i], perm[rng.below(static_cast<std::uint64_t>(i + 1))]);
    for (int i = 0; i < n; ++i)
      X(i, j) = (perm[i] + rng.uniform01()) / static_cast<double>(n);
  }
  return X;
}

Prediction InnerSurrogate::predict_at(const Eigen::Ref<const Vector>& x) const {
  const Vector k = kernel_vector(designs, x, kernel);
  const Vector v = chol.triangularView<Eigen::Lower>().solve(k);
  const double mean_std = k.dot(alpha);
  const double var_std = std::max(0.0, kernel.s2 - v.squaredNorm());
  return {standardizer.to_raw(mean_std), standardizer.var_to_raw(var_std)};
}

double InnerSurrogate::noise_sd() const {
  return std::sqrt(noise_var) * standardizer.scale;
}

InnerSurrogate fit_inner_surrogate(const Eigen::Ref<const Matrix>& designs,
                                   const Eigen::Ref<const Vector>& values,
                                   std::uint64_t seed) {
  const int t = static_cast<int>(designs.rows());
  const int d = static_cast<int>(designs.cols());
  if (t < 2) throw contract_error("fit_inner_surrogate: need at least two points");
  if (!values.allFinite()) throw contract_error("fit_inner_surrogate: values must be finite");

  InnerSurrogate s;
  s.designs = designs;
  s.values = values;
  s.standardizer = Standardizer::fit(values);
  Vector y(t);
  for (int i = 0; i < t; ++i) y[i] = s.standardizer.to_std(values[i]);

  // Parameters eta = (log s2, log l_1.., log noise_var), bounded boxes.
  const auto unpack = [&](const Vector& eta, KernelParams& kp, double& noise) {
    kp.s2 = std::exp(eta[0]);
    kp.lengthscales.resize(d);
    for (int j = 0; j < d; ++j) kp.lengthscales[j] = std::exp(eta[1 + j]);
    noise = std::max(std::exp(eta[1 + d]), 1e-8);
  };
  const auto objective = [&](const Vector& eta) -> double {
    if (eta[0] < std::log(1e-12) || eta[0] > std::log(1e4)) return -1e300;
    for (int j = 0; j < d; ++j)
      if (eta[1 + j] < std::log(1e-3) || eta[1 + j] > std::log(30.0)) return -1e300;
    if (eta[1 + d] < std::log(1e-9) || eta[1 + d] > 0.0) return -1e300;
    KernelParams kp;
    double noise;
    unpack(eta, kp, noise);
    Matrix A = kernel_matrix(designs, kp);
    A.diagonal().array() += noise;
    Eigen::LLT<Matrix> llt(A);
    if (llt.info() != Eigen::Success) return -1e300;
    const Matrix L = llt.matrixL();
    const Vector alpha = llt.solve(y);
    double log_det_half = 0.0;
    for (int i = 0; i < t; ++i) log_det_half += std::log(L(i, i));
    return -0.5 * y.dot(alpha) - log_det_half;
  };

  rng::Rng rng(seed);
  Vector best_eta;
  double best_value = -std::numeric_limits<double>::infinity();
  constexpr int kRestarts = 5;
  for (int r = 0; r < kRestarts; ++r) {
    Vector eta(d + 2);
    eta[0] = rng.uniform(std::log(0.05), std::log(5.0));
    for (int j = 0; j < d; ++j) eta[1 + j] = rng.uniform(std::log(0.01), std::log(3.0));
    eta[1 + d] = rng.uniform(std::log(1e-8), std::log(1e-1));
    double value;
    const Vector opt = nelder_mead_max(objective, eta, 0.4, 60 * (d + 2), &value);
    if (value > best_value) {
      best_value = value;
      best_eta = opt;
    }
  }
  if (!std::isfinite(best_value) || best_value <= -1e299)
    throw degenerate_fit_error("fit_inner_surrogate: every restart failed to factorize");

  double noise;
  unpack(best_eta, s.kernel, noise);
  s.noise_var = noise;
  Matrix A = kernel_matrix(designs, s.kernel);
  A.diagonal().array() += s.noise_var;
  Eigen::LLT<Matrix> llt(A);
  if (llt.info() != Eigen::Success)
    throw degenerate_fit_error("fit_inner_surrogate: final factorization failed");
  s.chol = llt.matrixL();
  s.alpha = llt.solve(y);
  return s;
}

Vector aei(const InnerSurrogate& surrogate, const Eigen::Ref<const Matrix>& candidates) {
  // Effective best: evaluated design maximizing mu - sd.
  const int t = static_cast<int>(surrogate.designs.rows());
  double best_utility = -std::numeric_limits<double>::infinity();
  double mu_star = 0.0;
  for (int i = 0; i < t; ++i) {
    const Prediction p = surrogate.predict_at(surrogate.designs.row(i));
    const double u = p.mean - std::sqrt(p.variance);
    if (u > best_utility) {
      best_utility = u;
      mu_star = p.mean;
    }
  }

  const double noise_sd = surrogate.noise_sd();
  Vector scores(candidates.rows());
  exec::parallel_for(candidates.rows(), [&](std::ptrdiff_t i) {
    const Prediction p = surrogate.predict_at(candidates.row(i));
    const double sd = std::sqrt(p.variance);
    const double delta = p.mean - mu_star;
    double ei;
    if (sd > 0.0) {
      const double z = delta / sd;
      ei = delta * normal_cdf(z) + sd * normal_pdf(z);
    } else {
      ei = std::max(delta, 0.0);
    }
    double augment = 1.0;
    if (noise_sd > 0.0)
      augment = 1.0 - noise_sd / std::sqrt(p.variance + noise_sd * noise_sd);
    scores[i] = std::max(0.0, ei * augment);
  });
  return scores;
}

BgoResult maximize_ekld(const std::function<double(const Vector&)>& objective, int dim,
                        const BgoSettings& settings) {
  const BgoSettings cfg = settings.resolved(dim);
  cfg.validate();

  Matrix X(cfg.t_max, dim);
  Vector g(cfg.t_max);
  rng::Rng rng(rng::derive_seed(cfg.seed, rng::kBgo, 0));

  for (int i = 0; i < cfg.t_init; ++i)
    for (int j = 0; j < dim; ++j) X(i, j) = rng.uniform01();
  {
    // Seed evaluations are independent; run them through the parallel path.
    Vector seed_vals(cfg.t_init);
    exec::parallel_for(cfg.t_init, [&](std::ptrdiff_t i) { seed_vals[i] = objective(X.row(i)); });
    g.head(cfg.t_init) = seed_vals;
  }

  BgoResult result;
  int t = cfg.t_init;
  bool random_fallback = false;
  std::uint64_t round = 0;
  while (t < cfg.t_max) {
    Vector next(dim);
    if (!random_fallback) {
      try {
        const InnerSurrogate surrogate = fit_inner_surrogate(
            X.topRows(t), g.head(t), rng::derive_seed(cfg.seed, rng::kBgo, 100 + round));
        const Matrix candidates =
            lhs(cfg.n_candidates, dim, rng::derive_seed(cfg.seed, rng::kBgo, 200 + round));
        const Vector scores = aei(surrogate, candidates);
        Eigen::Index jmax = 0;
        for (Eigen::Index j = 1; j < scores.size(); ++j)
          if (scores[j] > scores[jmax]) jmax = j;  // ties: lowest index wins
        const double g_best = g.head(t).maxCoeff();
        if (scores[jmax] < cfg.tol * (g_best + 1e-12)) {
          result.early_stopped = true;
          break;
        }
        next = candidates.row(jmax);
      } catch (const degenerate_fit_error&) {
        random_fallback = true;
        result.degenerate_fit = true;
      }
    }
    if (random_fallback)
      for (int j = 0; j < dim; ++j) next[j] = rng.uniform01();

    X.row(t) = next;
    g[t] = objective(next);
    ++t;
    ++round;
  }

  Eigen::Index imax = 0;
  for (Eigen::Index i = 1; i < t; ++i)
    if (g[i] > g[imax]) imax = i;
  result.x = X.row(imax);
  result.g = g[imax];
  result.n_evals = t;
  return result;
}

Vector us_next(std::span<const GPState> states, int n_candidates, std::uint64_t seed) {
  if (states.empty()) throw contract_error("us_next: empty ensemble");
  const int d = states.front().dataset.dim();
  const Matrix candidates = lhs(n_candidates, d, seed);
  Vector var(candidates.rows());
  exec::parallel_for(candidates.rows(), [&](std::ptrdiff_t i) {
    double sum = 0.0;
    for (const GPState& s : states) sum += predict(s, candidates.row(i)).variance;
    var[i] = sum / static_cast<double>(states.size());
  });
  Eigen::Index imax = 0;
  for (Eigen::Index i = 1; i < var.size(); ++i)
    if (var[i] > var[imax]) imax = i;
  return candidates.row(imax);
}

}  // namespace bode
