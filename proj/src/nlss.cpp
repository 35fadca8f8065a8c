#include "gpqn/problems/nlss.hpp"

#include <cmath>
#include <numbers>

namespace gpqn {

namespace {
constexpr double kObsVar = 0.1;

double log_gaussian(double x, double mean, double var) {
  double d = x - mean;
  return -0.5 * (std::log(2.0 * std::numbers::pi * var) + d * d / var);
}
}  // namespace

std::vector<double> simulate_nlss(const NonlinearSsmParams& params, int N, RngStream& rng) {
  if (N < 1) throw std::invalid_argument("simulate_nlss: N >= 1");
  if (params.q <= 0.0) throw std::invalid_argument("simulate_nlss: q must be > 0");
  std::vector<double> y(N);
  double x = rng.normal();  // x_1 ~ N(0, 1)
  for (int t = 1; t <= N; ++t) {
    y[t - 1] = 0.05 * x * x + std::sqrt(kObsVar) * rng.normal();
    x = nlss_transition_mean(x, t, params.b) + params.q * rng.normal();
  }
  return y;
}

PfModel make_nlss_pf_model(const NonlinearSsmParams& params, const std::vector<double>& y) {
  if (params.q <= 0.0) throw std::invalid_argument("make_nlss_pf_model: q must be > 0");
  PfModel model;
  model.num_obs = static_cast<int>(y.size());
  model.score_dim = 2;
  const double b = params.b, q = params.q;
  model.sample_initial = [](RngStream& rng) { return rng.normal(); };
  model.sample_transition = [b, q](double x, int t, RngStream& rng) {
    return nlss_transition_mean(x, t, b) + q * rng.normal();
  };
  model.log_obs_density = [y](double x, int t) {
    return log_gaussian(y[t - 1], 0.05 * x * x, kObsVar);
  };
  // d log N(x'; mu(b), q^2) / d(b, log q)
  model.transition_score = [b, q](double x, double x_next, int t) {
    double mu = nlss_transition_mean(x, t, b);
    double resid = x_next - mu;
    Vector s(2);
    s(0) = resid / (q * q) * (x / (1.0 + x * x));
    s(1) = -1.0 + resid * resid / (q * q);
    return s;
  };
  return model;
}

Vector fisher_gradient(const NonlinearSsmParams& params, const std::vector<double>& y,
                       int num_particles, RngStream& rng) {
  PfResult res = bootstrap_pf(make_nlss_pf_model(params, y), num_particles, rng);
  return res.fisher_score;
}

NonlinearOracle::NonlinearOracle(std::vector<double> y, int num_particles)
    : y_(std::move(y)), num_particles_(num_particles) {
  if (y_.empty()) throw std::invalid_argument("NonlinearOracle: empty data");
  if (num_particles_ < 2) throw std::invalid_argument("NonlinearOracle: need >= 2 particles");
}

Vector NonlinearOracle::to_optimizer_coords(const NonlinearSsmParams& p) {
  if (p.q <= 0.0) throw std::domain_error("to_optimizer_coords: q must be > 0");
  Vector theta(2);
  theta << p.b, std::log(p.q);
  return theta;
}

NonlinearSsmParams NonlinearOracle::from_optimizer_coords(const Vector& theta) {
  if (theta.size() != 2) throw std::invalid_argument("from_optimizer_coords: need 2 entries");
  return {theta(0), std::exp(theta(1))};
}

Evaluation NonlinearOracle::evaluate(const Vector& theta, RngStream& rng) const {
  if (theta.size() != 2) throw std::invalid_argument("NonlinearOracle: theta must have 2 entries");
  if (!theta.allFinite()) throw std::domain_error("NonlinearOracle: non-finite parameters");
  NonlinearSsmParams p = from_optimizer_coords(theta);
  RngStream sub = rng.fork();  // fresh stream per call
  PfResult res;
  try {
    res = bootstrap_pf(make_nlss_pf_model(p, y_), num_particles_, sub);
  } catch (const PfDegeneracyError& ex) {
    throw EvaluationError(ex.what());
  }
  Evaluation e;
  e.cost = -res.loglik;
  e.grad = -res.fisher_score;
  return e;
}

}  // namespace gpqn
