#pragma once

#include "gpqn/linalg.hpp"

namespace gpqn {

/// Hyperparameters of the multivariate squared-exponential kernel
/// k(x, x') = sigma_sq * exp(-0.5 (x - x')^T V (x - x')).
struct SeKernelParams {
  double sigma_sq = 1.0;
  Matrix inv_lengthscale;  // V, symmetric positive definite

  static SeKernelParams isotropic(int n, double sigma_sq, double v) {
    return {sigma_sq, v * Matrix::Identity(n, n)};
  }
};

/// Kernel value. Symmetric in its arguments; lies in (0, sigma_sq].
double se_kernel(const Vector& x, const Vector& x_prime, const SeKernelParams& params);

/// Closed-form derivative blocks of the SE kernel.
///
/// order_x in {0, 1, 2} selects rows: value (1), gradient d/dx (n), or the
/// half-vectorised second derivative d^2/dx_i dx_j with i >= j (n(n+1)/2).
/// order_xp in {0, 1} selects columns: value (1) or gradient d/dx' (n).
/// The (2, *) rows follow the column-major lower-triangle vech ordering.
Matrix se_kernel_jet(const Vector& x, const Vector& x_prime, const SeKernelParams& params,
                     int order_x, int order_xp);

}  // namespace gpqn
