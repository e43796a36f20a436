#ifndef BODE_KERNEL_HPP
#define BODE_KERNEL_HPP

#include "bode/types.hpp"

namespace bode {

/// Squared-exponential kernel hyperparameters: signal variance and one
/// lengthscale per input dimension (unit-hypercube coordinates).
struct KernelParams {
  double s2 = 1.0;
  Vector lengthscales;

  int dim() const { return static_cast<int>(lengthscales.size()); }
  void validate() const;
};

/// k(x, x') = s^2 exp(-1/2 sum_j (x_j - x'_j)^2 / l_j^2)
double kernel_eval(const Eigen::Ref<const Vector>& x, const Eigen::Ref<const Vector>& x2,
                   const KernelParams& params);

/// Symmetric n x n Gram matrix of the rows of X.
Matrix kernel_matrix(const Eigen::Ref<const Matrix>& X, const KernelParams& params);

/// Vector (k(x_1, x), ..., k(x_n, x)) for the rows of X.
Vector kernel_vector(const Eigen::Ref<const Matrix>& X, const Eigen::Ref<const Vector>& x,
                     const KernelParams& params);

}  // namespace bode

#endif
