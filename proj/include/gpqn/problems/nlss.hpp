#pragma once

#include <vector>

#include "gpqn/problems/particle_filter.hpp"

namespace gpqn {

/// Nonlinear time-varying benchmark
///   x_{t+1} = 0.5 x_t + b x_t / (1 + x_t^2) + 8 cos(1.2 t) + q w_t, w_t ~ N(0, 1)
///   y_t     = 0.05 x_t^2 + e_t,                               e_t ~ N(0, 0.1)
/// with x_1 ~ N(0, 1). q is the process-noise standard deviation.
struct NonlinearSsmParams {
  double b = 25.0;
  double q = 0.31622776601683794;  // sqrt(0.1)
};

inline NonlinearSsmParams nlss_truth() { return {}; }

inline double nlss_transition_mean(double x, int t, double b) {
  return 0.5 * x + b * x / (1.0 + x * x) + 8.0 * std::cos(1.2 * t);
}

std::vector<double> simulate_nlss(const NonlinearSsmParams& params, int N, RngStream& rng);

/// Bootstrap-filter model for the benchmark. The transition score covers
/// theta = (b, log q); the observation density does not depend on theta.
PfModel make_nlss_pf_model(const NonlinearSsmParams& params, const std::vector<double>& y);

/// Fisher-identity gradient of log L w.r.t. (b, log q), approximated from the
/// weighted ancestral-path transition scores of a bootstrap filter run.
Vector fisher_gradient(const NonlinearSsmParams& params, const std::vector<double>& y,
                       int num_particles, RngStream& rng);

/// Noisy negative log-likelihood oracle over theta = (b, log q). Each call
/// runs a fresh particle filter; declared noise levels are set empirically by
/// the caller.
class NonlinearOracle : public NoisyOracle {
 public:
  NonlinearOracle(std::vector<double> y, int num_particles);

  int dim() const override { return 2; }
  Evaluation evaluate(const Vector& theta, RngStream& rng) const override;
  double cost_noise_std() const override { return declared_sigma_c_; }
  Matrix grad_noise_cov() const override { return declared_sigma_g_; }

  void set_declared_noise(double sigma_c, const Matrix& sigma_g) {
    declared_sigma_c_ = sigma_c;
    declared_sigma_g_ = sigma_g;
  }

  static Vector to_optimizer_coords(const NonlinearSsmParams& p);
  static NonlinearSsmParams from_optimizer_coords(const Vector& theta);

 private:
  std::vector<double> y_;
  int num_particles_;
  double declared_sigma_c_ = 1.0;
  Matrix declared_sigma_g_ = Matrix::Identity(2, 2);
};

}  // namespace gpqn
