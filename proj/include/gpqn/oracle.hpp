#pragma once

#include "gpqn/linalg.hpp"
#include "gpqn/rng.hpp"

namespace gpqn {

struct Evaluation {
  double cost = 0.0;
  Vector grad;
};

class EvaluationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A (possibly stochastic) cost oracle: point in, noisy cost and gradient
/// estimates out, together with declared noise levels. Evaluations are pure
/// functions of (x, rng state), so a fixed stream gives bit-identical results.
class NoisyOracle {
 public:
  virtual ~NoisyOracle() = default;

  virtual int dim() const = 0;
  virtual Evaluation evaluate(const Vector& x, RngStream& rng) const = 0;

  /// Declared standard deviation of the cost noise (may be an estimate).
  virtual double cost_noise_std() const = 0;
  /// Declared covariance of the gradient noise (may be an estimate).
  virtual Matrix grad_noise_cov() const = 0;
};

struct NoiseEstimate {
  double sigma_c_sq = 0.0;
  Matrix sigma_g;  // diagonal sample variances
};

/// Empirical noise estimate from repeated evaluations at a fixed point.
NoiseEstimate estimate_noise(const NoisyOracle& oracle, const Vector& x, int samples,
                             RngStream& rng);

}  // namespace gpqn
