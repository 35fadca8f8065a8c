#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "gpqn/kernel.hpp"
#include "gpqn/oracle.hpp"
#include "gpqn/trace.hpp"

namespace gpqn {

class DuplicatePointError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct SurrogatePrediction {
  double f_mean = 0.0;
  Vector g_mean;
  Matrix h_mean;  // exactly symmetric (expanded from a vech prediction)
  double f_var = 0.0;
};

/// Global GP over (cost, gradient) observations. The joint kernel blocks are
/// the SE kernel and its derivative blocks; observation noise (sigma_c^2,
/// Sigma_g) is added on the diagonal. Prior mean is zero.
class SurrogateDataset {
 public:
  SurrogateDataset(const SeKernelParams& kernel, double sigma_c_sq, const Matrix& sigma_g,
                   std::size_t capacity = 200);

  /// Rejects near-duplicates (separation <= 1e-10). Past the capacity cap the
  /// oldest point not among the 5 best observed costs is evicted.
  void add_observation(const Vector& x, double f_hat, const Vector& g_hat);

  SurrogatePrediction predict(const Vector& x) const;

  const SeKernelParams& kernel() const { return kernel_; }
  std::size_t size() const { return points_.size(); }
  int dim() const { return n_; }
  const std::vector<Vector>& points() const { return points_; }
  double observed_cost(std::size_t i) const { return costs_[i]; }

 private:
  void ensure_factor() const;

  SeKernelParams kernel_;
  double sigma_c_sq_;
  Matrix sigma_g_;
  std::size_t capacity_;
  int n_ = 0;

  std::vector<Vector> points_;
  std::vector<double> costs_;
  std::vector<Vector> grads_;
  std::vector<std::size_t> insert_id_;
  std::size_t next_id_ = 0;

  mutable Matrix gram_;
  mutable Matrix chol_;  // lower factor of gram_ (+ jitter)
  mutable bool factor_valid_ = false;
};

struct InnerSearchParams {
  int max_steps = 20;
  double grad_tol = 1e-10;
  double c1 = 1e-4;
  double backtrack = 0.5;
  int max_trials = 30;
  double floor_ratio = 1e-6;
  // trust radius: iterates stay within this kernel-metric distance
  // sqrt(d^T V d) of the start point; the surrogate mean is uninformative
  // further out
  double max_step_lengthscales = 2.0;
};

/// Safeguarded Newton descent on the (noiseless) surrogate mean. Returns the
/// iterate with the smallest surrogate mean seen. on_accept, when set, runs
/// after each accepted step and may add observations to the dataset.
Vector inner_minimize(SurrogateDataset& dataset, const Vector& x_start,
                      const InnerSearchParams& params,
                      const std::function<void(const Vector&)>& on_accept = nullptr);

struct Alg2Params {
  SeKernelParams kernel;
  std::size_t capacity = 200;
  double epsilon = 1e-3;
  int max_iters = 100;
  int noise_samples = 10;
  InnerSearchParams inner;
};

/// Estimate the observation noise empirically at x0, then iterate: observe at
/// the current point, roll the observation (and every accepted inner iterate)
/// into the surrogate, and jump to the minimiser of the surrogate mean. Stops
/// when the surrogate gradient norm falls below epsilon.
OptimizationTrace optimize_alg2(const NoisyOracle& oracle, const Vector& x0,
                                const Alg2Params& params, RngStream& rng);

}  // namespace gpqn
