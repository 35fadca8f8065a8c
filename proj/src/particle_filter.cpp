#include "gpqn/problems/particle_filter.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace gpqn {

namespace {

void systematic_resample(const std::vector<double>& weights, std::vector<int>& out,
                         RngStream& rng) {
  const int M = static_cast<int>(weights.size());
  out.resize(M);
  double u = rng.uniform() / M;
  double cum = 0.0;
  int i = 0;
  for (int j = 0; j < M; ++j) {
    double target = u + static_cast<double>(j) / M;
    while (cum + weights[i] < target && i < M - 1) {
      cum += weights[i];
      ++i;
    }
    out[j] = i;
  }
}

}  // namespace

PfResult bootstrap_pf(const PfModel& model, int num_particles, RngStream& rng) {
  const int M = num_particles;
  const int N = model.num_obs;
  if (M < 2) throw std::invalid_argument("bootstrap_pf: need at least 2 particles");
  if (N < 1) throw std::invalid_argument("bootstrap_pf: no observations");
  const bool with_score = static_cast<bool>(model.transition_score);

  std::vector<double> x(M), x_new(M), logw(M), w(M);
  std::vector<Vector> score, score_new;
  if (with_score) {
    score.assign(M, Vector::Zero(model.score_dim));
    score_new.assign(M, Vector::Zero(model.score_dim));
  }

  PfResult res;
  for (int i = 0; i < M; ++i) x[i] = model.sample_initial(rng);

  std::vector<int> idx(M);
  for (int t = 1; t <= N; ++t) {
    double max_lw = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < M; ++i) {
      logw[i] = model.log_obs_density(x[i], t);
      max_lw = std::max(max_lw, logw[i]);
    }
    if (!std::isfinite(max_lw)) {
      throw PfDegeneracyError("bootstrap_pf: all weights vanished at t=" + std::to_string(t), t);
    }
    double sum = 0.0;
    for (int i = 0; i < M; ++i) {
      w[i] = std::exp(logw[i] - max_lw);
      sum += w[i];
    }
    res.loglik += max_lw + std::log(sum / M);
    for (int i = 0; i < M; ++i) w[i] /= sum;

    if (t == N) {
      res.system.particles = x;
      res.system.weights = w;
      break;
    }

    systematic_resample(w, idx, rng);
    res.system.ancestors.push_back(idx);
    for (int i = 0; i < M; ++i) {
      double xa = x[idx[i]];
      double xn = model.sample_transition(xa, t, rng);
      x_new[i] = xn;
      if (with_score) score_new[i] = score[idx[i]] + model.transition_score(xa, xn, t);
    }
    x.swap(x_new);
    if (with_score) score.swap(score_new);
  }

  if (with_score) {
    Vector g = Vector::Zero(model.score_dim);
    for (int i = 0; i < M; ++i) g += res.system.weights[i] * score[i];
    res.fisher_score = g;
  }
  return res;
}

}  // namespace gpqn
