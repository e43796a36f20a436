#include "bode/kernel.hpp"

#include <cmath>

#include "bode/parallel.hpp"

namespace bode {

void KernelParams::validate() const {
  if (!(s2 > 0.0)) throw contract_error("KernelParams: s2 must be positive");
  if (lengthscales.size() < 1) throw contract_error("KernelParams: need at least one lengthscale");
  for (Eigen::Index j = 0; j < lengthscales.size(); ++j)
    if (!(lengthscales[j] > 0.0)) throw contract_error("KernelParams: lengthscales must be positive");
}

double kernel_eval(const Eigen::Ref<const Vector>& x, const Eigen::Ref<const Vector>& x2,
                   const KernelParams& params) {
  if (x.size() != x2.size() || x.size() != params.lengthscales.size())
    throw contract_error("kernel_eval: dimension mismatch");
  double q = 0.0;
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    const double r = (x[j] - x2[j]) / params.lengthscales[j];
    q += r * r;
  }
  return params.s2 * std::exp(-0.5 * q);
}

Matrix kernel_matrix(const Eigen::Ref<const Matrix>& X, const KernelParams& params) {
  const Eigen::Index n = X.rows();
  if (n < 1) throw contract_error("kernel_matrix: need at least one row");
  if (X.cols() != params.lengthscales.size())
    throw contract_error("kernel_matrix: dimension mismatch");
  Matrix K(n, n);
  // Row-parallel over the lower triangle; mirrored afterwards.
  exec::parallel_for(n, [&](std::ptrdiff_t i) {
    K(i, i) = params.s2;
    for (Eigen::Index j = 0; j < i; ++j) {
      double q = 0.0;
      for (Eigen::Index k = 0; k < X.cols(); ++k) {
        const double r = (X(i, k) - X(j, k)) / params.lengthscales[k];
        q += r * r;
      }
      K(i, j) = params.s2 * std::exp(-0.5 * q);
    }
  });
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < i; ++j) K(j, i) = K(i, j);
  return K;
}

Vector kernel_vector(const Eigen::Ref<const Matrix>& X, const Eigen::Ref<const Vector>& x,
                     const KernelParams& params) {
  if (X.cols() != x.size() || x.size() != params.lengthscales.size())
    throw contract_error("kernel_vector: dimension mismatch");
  Vector k(X.rows());
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    double q = 0.0;
    for (Eigen::Index j = 0; j < x.size(); ++j) {
      const double r = (X(i, j) - x[j]) / params.lengthscales[j];
      q += r * r;
    }
    k[i] = params.s2 * std::exp(-0.5 * q);
  }
  return k;
}

}  // namespace bode
