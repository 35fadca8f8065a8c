#pragma once

#include <vector>

#include "gpqn/oracle.hpp"
#include "gpqn/problems/particle_filter.hpp"

namespace gpqn {

/// Scalar linear Gaussian state-space model
///   x_{t+1} = a x_t + w_t,  w_t ~ N(0, q)
///   y_t     = c x_t + e_t,  e_t ~ N(0, r)
/// with x_1 ~ N(0, 1).
struct LinearSsmParams {
  double a = 0.9;
  double c = 1.0;
  double q = 0.1;  // process-noise variance
  double r = 0.5;  // measurement-noise variance
};

inline LinearSsmParams lgss_truth() { return {0.9, 1.0, 0.1, 0.5}; }

std::vector<double> simulate_lgss(const LinearSsmParams& params, int N, RngStream& rng);

struct KalmanResult {
  double loglik = 0.0;
  Eigen::Vector4d grad;  // d loglik / d(a, c, q, r)
};

/// Exact Gaussian log-likelihood and its gradient via the Kalman filter with
/// sensitivity recursions. Deterministic in (params, data).
KalmanResult kalman_loglik_grad(const LinearSsmParams& params, const std::vector<double>& y);

/// Noisy negative log-likelihood oracle over theta = (a, c, log q, log r).
/// Noise of the stated covariances is added to the NLL and to its gradient in
/// the natural (a, c, q, r) coordinates before the chain rule to log space.
class NoisyLgssOracle : public NoisyOracle {
 public:
  NoisyLgssOracle(std::vector<double> y, double cost_noise_std = 100.0,
                  double grad_noise_std = 5.0);

  int dim() const override { return 4; }
  Evaluation evaluate(const Vector& theta, RngStream& rng) const override;
  double cost_noise_std() const override { return cost_noise_std_; }
  Matrix grad_noise_cov() const override;

  static Vector to_optimizer_coords(const LinearSsmParams& p);
  static LinearSsmParams from_optimizer_coords(const Vector& theta);

 private:
  std::vector<double> y_;
  double cost_noise_std_;
  double grad_noise_std_;
};

/// Bootstrap-filter model for the linear system, used to cross-check the
/// particle machinery against the exact Kalman quantities. The transition
/// score covers theta = (a) only.
PfModel make_lgss_pf_model(const LinearSsmParams& params, const std::vector<double>& y);

struct BodePoint {
  double omega = 0.0;
  double magnitude = 0.0;
  double phase = 0.0;
};

/// Frequency response of G(e^{i w}) = c / (e^{i w} - a).
std::vector<BodePoint> transfer_function(double a, double c, const std::vector<double>& omegas);

}  // namespace gpqn
