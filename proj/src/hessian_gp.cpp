#include "gpqn/hessian_gp.hpp"

#include <cmath>
#include <deque>

#include "gpqn/quadrature.hpp"

namespace gpqn {

int HessianBelief::dim() const {
  const int m = static_cast<int>(mean.size());
  return static_cast<int>(std::lround((std::sqrt(8.0 * m + 1.0) - 1.0) / 2.0));
}

HessianBelief HessianBelief::make(const Matrix& B0, const Matrix& C0, const SeKernelParams& kernel,
                                  const Matrix& R) {
  HessianBelief b;
  b.mean = vech(symmetrize(B0));
  b.cov = symmetrize(C0);
  b.kernel = kernel;
  b.obs_noise = R;
  return b;
}

namespace {

double scalar_factor(double tau, double t, const LineSegment& seg, const HessianBelief& belief) {
  Vector r_tau = seg.point(tau);
  Vector r_t = seg.point(t);
  return belief.kernel.sigma_sq *
         std::exp(-0.5 * r_tau.dot(belief.kernel.inv_lengthscale * r_t));
}

/// (s^T (x) I) D, the n x m operator taking vech(B) to B s.
Matrix secant_operator(const Vector& s) {
  const int n = static_cast<int>(s.size());
  VechIndex idx(n);
  Matrix S = Matrix::Zero(n, idx.vech_size());
  // (B s)_row = sum_col B(row, col) s(col); vech holds (i, j) with i >= j
  for (int p = 0; p < idx.vech_size(); ++p) {
    auto [i, j] = idx.pair(p);
    S(i, p) += s(j);
    if (i != j) S(j, p) += s(i);
  }
  return S;
}

}  // namespace

Matrix line_kernel(double tau, double t, const LineSegment& seg, const HessianBelief& belief) {
  if (seg.s().norm() == 0.0) throw std::invalid_argument("line_kernel: degenerate segment");
  return scalar_factor(tau, t, seg, belief) * belief.cov;
}

IntegralOperator integral_observation_operator(const LineSegment& seg,
                                               const HessianBelief& belief, int quad_nodes) {
  if (quad_nodes < 2) throw std::invalid_argument("integral_observation_operator: quad_nodes >= 2");
  QuadratureRule rule = gauss_legendre_01(quad_nodes);

  double single = 0.0;  // integral over t of the scalar factor at query tau = 1
  double dbl = 0.0;
  for (int i = 0; i < quad_nodes; ++i) {
    single += rule.weights[i] * scalar_factor(1.0, rule.nodes[i], seg, belief);
    for (int j = 0; j < quad_nodes; ++j) {
      dbl += rule.weights[i] * rule.weights[j] *
             scalar_factor(rule.nodes[i], rule.nodes[j], seg, belief);
    }
  }

  Matrix S = secant_operator(seg.s());  // n x m
  IntegralOperator op;
  op.gamma = single * belief.cov * S.transpose();
  Matrix R = belief.obs_noise;
  if (R.size() == 0) R = Matrix::Zero(S.rows(), S.rows());
  op.pi = symmetrize(dbl * S * belief.cov * S.transpose() + R);
  return op;
}

HessianBelief update_belief(const HessianBelief& belief, const LineSegment& seg,
                            const Vector& obs_y, int quad_nodes) {
  if (!obs_y.allFinite()) throw std::invalid_argument("update_belief: non-finite observation");
  IntegralOperator op = integral_observation_operator(seg, belief, quad_nodes);

  // constant-in-tau prior mean: predicted observation is (s^T (x) I) D mu
  Matrix S = secant_operator(seg.s());
  Vector obs_mean = S * belief.mean;

  GaussianBlock prior{belief.mean, line_kernel(1.0, 1.0, seg, belief)};
  GaussianBlock post = condition_gaussian(prior, op.gamma, op.pi, obs_mean, obs_y);

  HessianBelief next = belief;
  next.mean = vech(symmetrize(unvech(post.mean)));
  // the bilinear segment kernel is not guaranteed PSD over [0,1]^2, so the
  // raw posterior covariance can pick up small negative eigenvalues
  Eigen::SelfAdjointEigenSolver<Matrix> eig(symmetrize(post.cov));
  Vector lam = eig.eigenvalues().cwiseMax(0.0);
  next.cov = symmetrize(eig.eigenvectors() * lam.asDiagonal() * eig.eigenvectors().transpose());
  return next;
}

Vector safeguarded_direction(const Matrix& B_hat, const Vector& g, double floor_ratio) {
  if (!g.allFinite()) throw std::invalid_argument("safeguarded_direction: non-finite gradient");
  if (g.norm() == 0.0) return Vector::Zero(g.size());
  Eigen::SelfAdjointEigenSolver<Matrix> eig(symmetrize(B_hat));
  Vector lam = eig.eigenvalues();
  double floor = floor_ratio * std::max(lam.cwiseAbs().maxCoeff(), 1.0);
  for (int i = 0; i < lam.size(); ++i) lam(i) = std::max(lam(i), floor);
  Vector gt = eig.eigenvectors().transpose() * g;
  Vector p = -(eig.eigenvectors() * (gt.array() / lam.array()).matrix());
  return p;
}

LineSearchResult noisy_line_search(const NoisyOracle& oracle, RngStream& rng, const Vector& x,
                                   const Vector& p, double f_x, const Vector& g_x,
                                   const LineSearchParams& params) {
  const double slope = g_x.dot(p);
  const double margin = params.noise_margin * oracle.cost_noise_std();

  // stay-put fallback: a trial whose evaluation is non-finite (the oracle ran
  // off its numeric range) counts as rejected, and if nothing finite turns up
  // the caller keeps the current point
  LineSearchResult best{0.0, x, {f_x, g_x}, false};
  double best_f = std::numeric_limits<double>::infinity();
  double alpha = 1.0;
  for (int trial = 0; trial < params.max_trials; ++trial) {
    Vector xt = x + alpha * p;
    Evaluation e = oracle.evaluate(xt, rng);
    if (!std::isfinite(e.cost) || !e.grad.allFinite()) {
      alpha *= params.backtrack;
      continue;
    }
    if (e.cost <= f_x + params.c1 * alpha * slope + margin) {
      return {alpha, xt, e, true};
    }
    if (e.cost < best_f) {
      best_f = e.cost;
      best = {alpha, xt, e, false};
    }
    alpha *= params.backtrack;
  }
  return best;
}

OptimizationTrace optimize_alg1(const NoisyOracle& oracle, const Vector& x0,
                                const HessianBelief& belief0, const Alg1Params& params,
                                RngStream& rng) {
  OptimizationTrace trace;
  trace.header["optimizer"] = "alg1_hessian_gp";
  trace.header["sigma_sq"] = std::to_string(belief0.kernel.sigma_sq);
  trace.header["V_00"] = std::to_string(belief0.kernel.inv_lengthscale(0, 0));
  trace.header["B1_00"] = std::to_string(unvech(belief0.mean)(0, 0));
  trace.header["C1_00"] = std::to_string(belief0.cov(0, 0));

  HessianBelief belief = belief0;
  Vector x = x0;
  Evaluation cur;
  try {
    cur = oracle.evaluate(x, rng);
  } catch (const std::exception& ex) {
    trace.failed = true;
    trace.failure = ex.what();
    return trace;
  }
  trace.iterates.push_back({0, x, cur.cost, cur.grad.norm(), 0.0, "ok"});

  std::deque<double> recent_gnorm;
  Matrix default_R;
  if (belief.obs_noise.size() == 0) {
    // y is a difference of two independent noisy gradients
    default_R = 2.0 * oracle.grad_noise_cov();
    double floor = 1e-12;
    for (int i = 0; i < default_R.rows(); ++i)
      default_R(i, i) = std::max(default_R(i, i), floor);
    belief.obs_noise = default_R;
  }

  for (int k = 1; k <= params.max_iters; ++k) {
    Vector p = safeguarded_direction(unvech(belief.mean), cur.grad, params.floor_ratio);
    if (p.norm() == 0.0) {
      trace.iterates.push_back({k, x, cur.cost, cur.grad.norm(), 0.0, "zero_grad"});
      break;
    }
    if (p.norm() > params.max_step_norm) p *= params.max_step_norm / p.norm();
    LineSearchResult ls;
    try {
      ls = noisy_line_search(oracle, rng, x, p, cur.cost, cur.grad, params.line_search);
    } catch (const std::exception& ex) {
      trace.failed = true;
      trace.failure = ex.what();
      return trace;
    }

    LineSegment seg{x, ls.x};
    if (seg.s().norm() > 0.0) {
      Vector y = ls.eval.grad - cur.grad;
      try {
        belief = update_belief(belief, seg, y, params.quad_nodes);
      } catch (const ConditioningError& ex) {
        trace.failed = true;
        trace.failure = ex.what();
        trace.iterates.push_back({k, ls.x, ls.eval.cost, ls.eval.grad.norm(), ls.alpha, "cond_fail"});
        return trace;
      }
    }
    x = ls.x;
    cur = ls.eval;
    trace.iterates.push_back(
        {k, x, cur.cost, cur.grad.norm(), ls.alpha, ls.accepted ? "ok" : "ls_best"});

    if (params.early_stop) {
      recent_gnorm.push_back(cur.grad.norm());
      if (static_cast<int>(recent_gnorm.size()) > params.early_stop_window)
        recent_gnorm.pop_front();
      if (static_cast<int>(recent_gnorm.size()) == params.early_stop_window) {
        double mean = 0.0;
        for (double g : recent_gnorm) mean += g;
        mean /= recent_gnorm.size();
        if (mean < params.early_stop_tol) break;
      }
    }
  }
  return trace;
}

}  // namespace gpqn
