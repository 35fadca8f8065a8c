#pragma once

#include <functional>
#include <vector>

#include "gpqn/oracle.hpp"

namespace gpqn {

/// Scalar-state model interface for the bootstrap filter. Time indices are
/// 1-based; sample_transition draws x_{t+1} given x_t at time t.
struct PfModel {
  std::function<double(RngStream&)> sample_initial;
  std::function<double(double x, int t, RngStream&)> sample_transition;
  std::function<double(double x, int t)> log_obs_density;  // log p(y_t | x_t)
  /// Optional: d log p(x_next | x, t) / d theta, enables Fisher-identity
  /// gradients via per-particle score accumulation.
  std::function<Vector(double x, double x_next, int t)> transition_score;
  int num_obs = 0;
  int score_dim = 0;
};

class PfDegeneracyError : public std::runtime_error {
 public:
  PfDegeneracyError(const std::string& what, int t) : std::runtime_error(what), t_(t) {}
  int time_step() const { return t_; }

 private:
  int t_;
};

struct ParticleSystem {
  std::vector<double> particles;          // final-time states
  std::vector<double> weights;            // normalized, sum to 1
  std::vector<std::vector<int>> ancestors;  // one index row per resampling step
};

struct PfResult {
  double loglik = 0.0;
  ParticleSystem system;
  Vector fisher_score;  // empty unless the model provides transition_score
};

/// Bootstrap particle filter with systematic resampling at every step.
/// Log-likelihood is accumulated as sum_t log mean weight via log-sum-exp.
/// When the model carries a transition score, per-particle path scores are
/// inherited through resampling, giving the Fisher-identity gradient estimate
/// as the weighted average of final scores.
PfResult bootstrap_pf(const PfModel& model, int num_particles, RngStream& rng);

}  // namespace gpqn
