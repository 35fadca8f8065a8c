#include "gpqn/surrogate_gp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "gpqn/hessian_gp.hpp"  // safeguarded_direction

namespace gpqn {

namespace {

/// (1+n) x (1+n) joint (f, g) covariance block between two points.
Matrix pair_block(const Vector& xi, const Vector& xj, const SeKernelParams& kernel) {
  const int n = static_cast<int>(xi.size());
  Matrix blk(1 + n, 1 + n);
  blk(0, 0) = se_kernel_jet(xi, xj, kernel, 0, 0)(0, 0);
  blk.block(0, 1, 1, n) = se_kernel_jet(xi, xj, kernel, 0, 1);
  blk.block(1, 0, n, 1) = se_kernel_jet(xi, xj, kernel, 1, 0);
  blk.block(1, 1, n, n) = se_kernel_jet(xi, xj, kernel, 1, 1);
  return blk;
}

}  // namespace

SurrogateDataset::SurrogateDataset(const SeKernelParams& kernel, double sigma_c_sq,
                                   const Matrix& sigma_g, std::size_t capacity)
    : kernel_(kernel), sigma_c_sq_(sigma_c_sq), sigma_g_(sigma_g), capacity_(capacity) {
  n_ = static_cast<int>(kernel.inv_lengthscale.rows());
  if (sigma_g_.rows() != n_ || sigma_g_.cols() != n_) {
    throw std::invalid_argument("SurrogateDataset: Sigma_g must be n x n");
  }
  if (capacity_ < 6) throw std::invalid_argument("SurrogateDataset: capacity too small");
}

void SurrogateDataset::add_observation(const Vector& x, double f_hat, const Vector& g_hat) {
  if (x.size() != n_ || g_hat.size() != n_) {
    throw std::invalid_argument("add_observation: dimension mismatch");
  }
  if (!x.allFinite() || !std::isfinite(f_hat) || !g_hat.allFinite()) {
    throw std::invalid_argument("add_observation: non-finite observation");
  }
  for (const auto& p : points_) {
    if ((p - x).norm() <= 1e-10) throw DuplicatePointError("add_observation: duplicate point");
  }

  if (points_.size() >= capacity_) {
    // evict the oldest point that is not among the 5 best observed costs
    std::vector<std::size_t> order(points_.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::vector<std::size_t> by_cost = order;
    std::sort(by_cost.begin(), by_cost.end(),
              [&](std::size_t a, std::size_t b) { return costs_[a] < costs_[b]; });
    std::vector<bool> elite(points_.size(), false);
    for (std::size_t i = 0; i < std::min<std::size_t>(5, by_cost.size()); ++i)
      elite[by_cost[i]] = true;
    std::size_t victim = points_.size();
    std::size_t oldest = std::numeric_limits<std::size_t>::max();
    for (std::size_t i = 0; i < points_.size(); ++i) {
      if (!elite[i] && insert_id_[i] < oldest) {
        oldest = insert_id_[i];
        victim = i;
      }
    }
    points_.erase(points_.begin() + victim);
    costs_.erase(costs_.begin() + victim);
    grads_.erase(grads_.begin() + victim);
    insert_id_.erase(insert_id_.begin() + victim);
    factor_valid_ = false;
    gram_.resize(0, 0);
  }

  points_.push_back(x);
  costs_.push_back(f_hat);
  grads_.push_back(g_hat);
  insert_id_.push_back(next_id_++);

  const int b = 1 + n_;
  const std::size_t N = points_.size();
  Matrix grown = Matrix::Zero(N * b, N * b);
  if (gram_.rows() == static_cast<Eigen::Index>((N - 1) * b)) {
    grown.topLeftCorner((N - 1) * b, (N - 1) * b) = gram_;
    for (std::size_t j = 0; j < N; ++j) {
      Matrix blk = pair_block(points_[N - 1], points_[j], kernel_);
      grown.block((N - 1) * b, j * b, b, b) = blk;
      grown.block(j * b, (N - 1) * b, b, b) = blk.transpose();
    }
  } else {
    for (std::size_t i = 0; i < N; ++i) {
      for (std::size_t j = 0; j <= i; ++j) {
        Matrix blk = pair_block(points_[i], points_[j], kernel_);
        grown.block(i * b, j * b, b, b) = blk;
        grown.block(j * b, i * b, b, b) = blk.transpose();
      }
    }
  }
  // observation noise on the diagonal blocks
  grown.block((N - 1) * b, (N - 1) * b, b, b)(0, 0) += sigma_c_sq_;
  grown.block((N - 1) * b + 1, (N - 1) * b + 1, n_, n_) += sigma_g_;
  if (gram_.rows() != static_cast<Eigen::Index>((N - 1) * b)) {
    for (std::size_t i = 0; i + 1 < N; ++i) {
      grown.block(i * b, i * b, b, b)(0, 0) += sigma_c_sq_;
      grown.block(i * b + 1, i * b + 1, n_, n_) += sigma_g_;
    }
  }
  gram_ = symmetrize(grown);
  factor_valid_ = false;
}

void SurrogateDataset::ensure_factor() const {
  if (factor_valid_) return;
  chol_ = jittered_llt(gram_).matrixL();
  factor_valid_ = true;
}

SurrogatePrediction SurrogateDataset::predict(const Vector& x) const {
  if (points_.empty()) {
    // prior: zero mean, full kernel variance
    SurrogatePrediction prior;
    int n = static_cast<int>(x.size());
    prior.g_mean = Vector::Zero(n);
    prior.h_mean = Matrix::Zero(n, n);
    prior.f_var = kernel_.sigma_sq;
    return prior;
  }
  if (x.size() != n_) throw std::invalid_argument("predict: dimension mismatch");
  ensure_factor();

  const int b = 1 + n_;
  const std::size_t N = points_.size();
  VechIndex idx(n_);
  const int m = idx.vech_size();

  Vector y(N * b);
  for (std::size_t i = 0; i < N; ++i) {
    y(i * b) = costs_[i];
    y.segment(i * b + 1, n_) = grads_[i];
  }

  Matrix cross(1 + n_ + m, N * b);
  for (std::size_t j = 0; j < N; ++j) {
    cross(0, j * b) = se_kernel_jet(x, points_[j], kernel_, 0, 0)(0, 0);
    cross.block(0, j * b + 1, 1, n_) = se_kernel_jet(x, points_[j], kernel_, 0, 1);
    cross.block(1, j * b, n_, 1) = se_kernel_jet(x, points_[j], kernel_, 1, 0);
    cross.block(1, j * b + 1, n_, n_) = se_kernel_jet(x, points_[j], kernel_, 1, 1);
    cross.block(1 + n_, j * b, m, 1) = se_kernel_jet(x, points_[j], kernel_, 2, 0);
    cross.block(1 + n_, j * b + 1, m, n_) = se_kernel_jet(x, points_[j], kernel_, 2, 1);
  }

  auto L = chol_.triangularView<Eigen::Lower>();
  Vector alpha = L.transpose().solve(L.solve(y));
  Vector mean = cross * alpha;

  SurrogatePrediction pred;
  pred.f_mean = mean(0);
  pred.g_mean = mean.segment(1, n_);
  pred.h_mean = unvech(mean.segment(1 + n_, m));

  Vector vf = cross.row(0).transpose();
  Vector w = L.solve(vf);
  pred.f_var = std::max(0.0, kernel_.sigma_sq - w.squaredNorm());
  return pred;
}

Vector inner_minimize(SurrogateDataset& dataset, const Vector& x_start,
                      const InnerSearchParams& params,
                      const std::function<void(const Vector&)>& on_accept) {
  Vector x = x_start;
  SurrogatePrediction pred = dataset.predict(x);
  Vector best_x = x;
  double best_f = pred.f_mean;

  // trust region in the kernel metric: the surrogate mean decays to the prior
  // a few lengthscales past the data, so the raw mean is minimized in
  // unexplored space; bound the travel per call and let the outer loop
  // re-center after observing along the way
  const Matrix& V = dataset.kernel().inv_lengthscale;
  auto vnorm = [&](const Vector& d) { return std::sqrt(std::max(0.0, d.dot(V * d))); };
  auto feasible = [&](const Vector& q) {
    return vnorm(q - x_start) <= params.max_step_lengthscales;
  };

  for (int step = 0; step < params.max_steps; ++step) {
    if (pred.g_mean.norm() <= params.grad_tol) break;
    Vector p = safeguarded_direction(pred.h_mean, pred.g_mean, params.floor_ratio);
    double slope = pred.g_mean.dot(p);

    double alpha = 1.0;
    bool accepted = false;
    Vector x_next;
    SurrogatePrediction pred_next;
    for (int trial = 0; trial < params.max_trials; ++trial) {
      x_next = x + alpha * p;
      if (!feasible(x_next)) {
        alpha *= params.backtrack;
        continue;
      }
      pred_next = dataset.predict(x_next);
      if (pred_next.f_mean <= pred.f_mean + params.c1 * alpha * slope) {
        accepted = true;
        break;
      }
      alpha *= params.backtrack;
    }
    if (!accepted) break;

    x = x_next;
    if (on_accept) {
      on_accept(x);
      pred_next = dataset.predict(x);  // dataset may have changed
    }
    pred = pred_next;
    if (pred.f_mean < best_f) {
      best_f = pred.f_mean;
      best_x = x;
    }
  }
  return best_x;
}

OptimizationTrace optimize_alg2(const NoisyOracle& oracle, const Vector& x0,
                                const Alg2Params& params, RngStream& rng) {
  OptimizationTrace trace;
  trace.header["optimizer"] = "alg2_surrogate_gp";
  trace.header["sigma_sq"] = std::to_string(params.kernel.sigma_sq);
  trace.header["epsilon"] = std::to_string(params.epsilon);

  const int n = oracle.dim();
  NoiseEstimate noise;
  try {
    noise = estimate_noise(oracle, x0, params.noise_samples, rng);
  } catch (const std::exception& ex) {
    trace.failed = true;
    trace.failure = ex.what();
    return trace;
  }
  double sigma_c_sq = std::max(noise.sigma_c_sq, 1e-12);
  Matrix sigma_g = noise.sigma_g;
  for (int i = 0; i < n; ++i) sigma_g(i, i) = std::max(sigma_g(i, i), 1e-12);
  trace.header["sigma_c_sq_est"] = std::to_string(sigma_c_sq);

  SurrogateDataset dataset(params.kernel, sigma_c_sq, sigma_g, params.capacity);

  auto observe_into = [&](const Vector& x) {
    Evaluation e = oracle.evaluate(x, rng);
    try {
      dataset.add_observation(x, e.cost, e.grad);
    } catch (const DuplicatePointError&) {
      // revisited point; surrogate already carries it
    }
    return e;
  };

  Vector x = x0;
  try {
    for (int k = 0; k <= params.max_iters; ++k) {
      Evaluation e = observe_into(x);
      SurrogatePrediction pred = dataset.predict(x);
      double gnorm = pred.g_mean.norm();
      trace.iterates.push_back({k, x, e.cost, gnorm, 0.0, "ok"});
      if (gnorm <= params.epsilon || k == params.max_iters) break;
      x = inner_minimize(dataset, x, params.inner,
                         [&](const Vector& z) { observe_into(z); });
    }
  } catch (const std::exception& ex) {
    trace.failed = true;
    trace.failure = ex.what();
  }
  return trace;
}

}  // namespace gpqn
