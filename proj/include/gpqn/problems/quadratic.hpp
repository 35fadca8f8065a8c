#pragma once

#include "gpqn/oracle.hpp"

namespace gpqn {

/// Scalar test problem f(x) = 2.5 (x - 5)^2 with additive Gaussian noise on
/// both the cost and the gradient.
class QuadraticOracle : public NoisyOracle {
 public:
  QuadraticOracle(double sigma_c, double sigma_g) : sigma_c_(sigma_c), sigma_g_(sigma_g) {}

  int dim() const override { return 1; }

  Evaluation evaluate(const Vector& x, RngStream& rng) const override {
    if (x.size() != 1) throw std::invalid_argument("QuadraticOracle: scalar input expected");
    double d = x(0) - 5.0;
    Evaluation e;
    e.cost = 2.5 * d * d + sigma_c_ * rng.normal();
    e.grad = Vector::Constant(1, 5.0 * d + sigma_g_ * rng.normal());
    return e;
  }

  double cost_noise_std() const override { return sigma_c_; }
  Matrix grad_noise_cov() const override {
    return Matrix::Constant(1, 1, sigma_g_ * sigma_g_);
  }

  double minimizer() const { return 5.0; }

 private:
  double sigma_c_;
  double sigma_g_;
};

}  // namespace gpqn
