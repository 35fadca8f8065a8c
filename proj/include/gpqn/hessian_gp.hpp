#pragma once

#include "gpqn/kernel.hpp"
#include "gpqn/oracle.hpp"
#include "gpqn/trace.hpp"

namespace gpqn {

/// Gaussian belief over the half-vectorised Hessian, propagated across
/// iterations. The kernel acts along line segments between iterates; the
/// full covariance at a pair of segment positions is
/// sigma_sq * exp(-0.5 r(tau)^T V r(t)) * cov.
struct HessianBelief {
  Vector mean;        // vech of the current Hessian estimate, length n(n+1)/2
  Matrix cov;         // C_k, m x m symmetric PSD
  SeKernelParams kernel;
  Matrix obs_noise;   // R, n x n; empty = derive from oracle noise

  int dim() const;  // n recovered from mean length

  static HessianBelief make(const Matrix& B0, const Matrix& C0, const SeKernelParams& kernel,
                            const Matrix& R = Matrix());
};

struct LineSegment {
  Vector x_prev;
  Vector x_curr;

  Vector s() const { return x_curr - x_prev; }
  Vector point(double tau) const { return x_prev + tau * (x_curr - x_prev); }
};

/// Segment kernel sigma_sq * C * exp(-0.5 r(tau)^T V r(t)).
Matrix line_kernel(double tau, double t, const LineSegment& seg, const HessianBelief& belief);

struct IntegralOperator {
  Matrix gamma;  // m x n, cross-covariance at query tau = 1
  Matrix pi;     // n x n, observation covariance including R
};

/// Gauss-Legendre single and double integrals of the segment kernel, arranged
/// into the cross- and observation-covariance of the gradient-difference
/// observation y = (s^T (x) I) D * integral of vech-Hessian + noise.
IntegralOperator integral_observation_operator(const LineSegment& seg,
                                               const HessianBelief& belief, int quad_nodes);

/// Condition the belief on one gradient-difference observation, evaluated at
/// the current iterate (tau = 1). The returned (mean, cov) pair is the next
/// iteration's belief.
HessianBelief update_belief(const HessianBelief& belief, const LineSegment& seg,
                            const Vector& obs_y, int quad_nodes = 20);

/// Newton-type direction -B~^{-1} g where B~ is B with eigenvalues clamped to
/// at least floor_ratio * max(|lambda|_max, 1). Guarantees g^T p < 0 for
/// nonzero g; returns zero for g = 0.
Vector safeguarded_direction(const Matrix& B_hat, const Vector& g, double floor_ratio);

struct LineSearchParams {
  double c1 = 1e-4;
  double noise_margin = 2.0;  // multiplies the declared cost-noise std
  double backtrack = 0.5;
  int max_trials = 20;
};

struct LineSearchResult {
  double alpha = 0.0;
  Vector x;
  Evaluation eval;
  bool accepted = false;  // false = best-of-trials fallback
};

/// Noise-relaxed Armijo backtracking: accept the first alpha with
/// f(x + alpha p) <= f(x) + c1 alpha g^T p + noise_margin * sigma_c.
/// One oracle call per trial; the winning evaluation is returned for reuse.
LineSearchResult noisy_line_search(const NoisyOracle& oracle, RngStream& rng, const Vector& x,
                                   const Vector& p, double f_x, const Vector& g_x,
                                   const LineSearchParams& params);

struct Alg1Params {
  int max_iters = 100;
  LineSearchParams line_search;
  double floor_ratio = 1e-6;
  // cap on ||p|| before the line search; with large cost noise the relaxed
  // Armijo test accepts alpha = 1 almost surely, so the proposal itself must
  // stay bounded when the belief has near-flat directions
  double max_step_norm = 2.0;
  int quad_nodes = 20;
  // optional early stop on a running mean of the observed gradient norm
  bool early_stop = false;
  double early_stop_tol = 0.0;
  int early_stop_window = 5;
};

/// Algorithm: safeguarded direction from the belief mean, noise-tolerant line
/// search, belief update from the observed gradient difference. Runs to
/// max_iters unless the (default off) early stop triggers.
OptimizationTrace optimize_alg1(const NoisyOracle& oracle, const Vector& x0,
                                const HessianBelief& belief0, const Alg1Params& params,
                                RngStream& rng);

}  // namespace gpqn
