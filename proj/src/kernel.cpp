#include "gpqn/kernel.hpp"

#include <cmath>

namespace gpqn {

namespace {

void check_dims(const Vector& x, const Vector& x_prime, const SeKernelParams& params) {
  const auto n = x.size();
  if (x_prime.size() != n || params.inv_lengthscale.rows() != n ||
      params.inv_lengthscale.cols() != n) {
    throw std::invalid_argument("se_kernel: dimension mismatch between points and V");
  }
  if (params.sigma_sq <= 0.0) throw std::invalid_argument("se_kernel: sigma_sq must be > 0");
}

}  // namespace

double se_kernel(const Vector& x, const Vector& x_prime, const SeKernelParams& params) {
  check_dims(x, x_prime, params);
  Vector d = x - x_prime;
  return params.sigma_sq * std::exp(-0.5 * d.dot(params.inv_lengthscale * d));
}

Matrix se_kernel_jet(const Vector& x, const Vector& x_prime, const SeKernelParams& params,
                     int order_x, int order_xp) {
  check_dims(x, x_prime, params);
  if (order_x < 0 || order_x > 2 || order_xp < 0 || order_xp > 1) {
    throw std::invalid_argument("se_kernel_jet: unsupported order pair");
  }
  const int n = static_cast<int>(x.size());
  const Matrix& V = params.inv_lengthscale;
  const Vector d = x - x_prime;
  const Vector u = V * d;  // so that d k / dx = -u k, d k / dx' = +u k
  const double k = params.sigma_sq * std::exp(-0.5 * d.dot(u));

  if (order_x == 0 && order_xp == 0) {
    Matrix out(1, 1);
    out(0, 0) = k;
    return out;
  }
  if (order_x == 0 && order_xp == 1) return (k * u.transpose()).eval();
  if (order_x == 1 && order_xp == 0) return (-k * u).eval();
  if (order_x == 1 && order_xp == 1) return (k * (V - u * u.transpose())).eval();

  VechIndex idx(n);
  const int m = idx.vech_size();
  if (order_xp == 0) {
    // d^2 k / dx_i dx_j = (u_i u_j - V_ij) k, half-vectorised
    Matrix out(m, 1);
    for (int p = 0; p < m; ++p) {
      auto [i, j] = idx.pair(p);
      out(p, 0) = (u(i) * u(j) - V(i, j)) * k;
    }
    return out;
  }
  // d^3 k / dx_i dx_j dx'_l = (u_i u_j u_l - V_ij u_l - V_il u_j - V_jl u_i) k
  Matrix out(m, n);
  for (int p = 0; p < m; ++p) {
    auto [i, j] = idx.pair(p);
    for (int l = 0; l < n; ++l) {
      out(p, l) = (u(i) * u(j) * u(l) - V(i, j) * u(l) - V(i, l) * u(j) - V(j, l) * u(i)) * k;
    }
  }
  return out;
}

}  // namespace gpqn
