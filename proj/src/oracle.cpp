#include "gpqn/oracle.hpp"

#include <vector>

namespace gpqn {

NoiseEstimate estimate_noise(const NoisyOracle& oracle, const Vector& x, int samples,
                             RngStream& rng) {
  if (samples < 2) throw std::invalid_argument("estimate_noise: need at least 2 samples");
  const int n = oracle.dim();
  std::vector<double> costs(samples);
  Matrix grads(n, samples);
  for (int s = 0; s < samples; ++s) {
    Evaluation e = oracle.evaluate(x, rng);
    costs[s] = e.cost;
    grads.col(s) = e.grad;
  }
  double mean_c = 0.0;
  for (double c : costs) mean_c += c;
  mean_c /= samples;
  double var_c = 0.0;
  for (double c : costs) var_c += (c - mean_c) * (c - mean_c);
  var_c /= (samples - 1);

  Vector mean_g = grads.rowwise().mean();
  Matrix sigma_g = Matrix::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    double v = 0.0;
    for (int s = 0; s < samples; ++s) {
      double d = grads(i, s) - mean_g(i);
      v += d * d;
    }
    sigma_g(i, i) = v / (samples - 1);
  }
  return {var_c, sigma_g};
}

}  // namespace gpqn
