#include <doctest.h>

#include <cmath>
#include <numbers>

#include "gpqn/problems/lgss.hpp"
#include "gpqn/problems/nlss.hpp"
#include "gpqn/problems/particle_filter.hpp"
#include "gpqn/rng.hpp"

using namespace gpqn;

namespace {

double mean_of(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m += x;
  return m / v.size();
}

double var_of(const std::vector<double>& v) {
  double m = mean_of(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return s / (v.size() - 1);
}

double log_gauss(double x, double mean, double var) {
  return -0.5 * std::log(2.0 * std::numbers::pi * var) - (x - mean) * (x - mean) / (2.0 * var);
}

}  // namespace

TEST_CASE("filter runs with two particles and produces finite output") {
  RngStream data_rng(1);
  auto y = simulate_lgss(lgss_truth(), 10, data_rng);
  PfModel model = make_lgss_pf_model(lgss_truth(), y);
  RngStream rng(2);
  auto res = bootstrap_pf(model, 2, rng);
  CHECK(std::isfinite(res.loglik));
  CHECK(res.system.particles.size() == 2);
  // resampling happens between observation updates
  CHECK(res.system.ancestors.size() == y.size() - 1);
}

TEST_CASE("final importance weights are normalized") {
  RngStream data_rng(6);
  auto y = simulate_lgss(lgss_truth(), 25, data_rng);
  PfModel model = make_lgss_pf_model(lgss_truth(), y);
  for (int seed = 0; seed < 5; ++seed) {
    RngStream rng(100 + seed);
    auto res = bootstrap_pf(model, 64, rng);
    double sum = 0.0;
    for (double w : res.system.weights) {
      CHECK(w >= 0.0);
      sum += w;
    }
    CHECK(std::abs(sum - 1.0) < 1e-12);
  }
}

TEST_CASE("likelihood estimate is unbiased against the exact Kalman value") {
  RngStream data_rng(11);
  const int N = 50, M = 500, reps = 200;
  auto y = simulate_lgss(lgss_truth(), N, data_rng);
  double exact = kalman_loglik_grad(lgss_truth(), y).loglik;

  std::vector<double> ratios;
  for (int r = 0; r < reps; ++r) {
    RngStream rng(1000 + r);
    auto res = bootstrap_pf(make_lgss_pf_model(lgss_truth(), y), M, rng);
    ratios.push_back(std::exp(res.loglik - exact));
  }
  double m = mean_of(ratios);
  double se = std::sqrt(var_of(ratios) / reps);
  CHECK(std::abs(m - 1.0) < 3.0 * se);
}

TEST_CASE("log-likelihood variance shrinks with more particles") {
  RngStream data_rng(17);
  auto y = simulate_lgss(lgss_truth(), 40, data_rng);
  PfModel model = make_lgss_pf_model(lgss_truth(), y);
  auto spread = [&](int M) {
    std::vector<double> lls;
    for (int r = 0; r < 60; ++r) {
      RngStream rng(5000 + r);
      lls.push_back(bootstrap_pf(model, M, rng).loglik);
    }
    return var_of(lls);
  };
  CHECK(spread(1000) < spread(100));
}

TEST_CASE("Fisher-identity score matches the Kalman sensitivity in expectation") {
  RngStream data_rng(23);
  const int N = 30, M = 1000, reps = 100;
  LinearSsmParams p{0.8, 1.0, 0.1, 0.5};  // off-truth so the score is nonzero
  auto y = simulate_lgss(lgss_truth(), N, data_rng);
  double exact_da = kalman_loglik_grad(p, y).grad(0);

  std::vector<double> scores;
  for (int r = 0; r < reps; ++r) {
    RngStream rng(9000 + r);
    auto res = bootstrap_pf(make_lgss_pf_model(p, y), M, rng);
    REQUIRE(res.fisher_score.size() == 1);
    scores.push_back(res.fisher_score(0));
  }
  double m = mean_of(scores);
  double se = std::sqrt(var_of(scores) / reps);
  CHECK(std::abs(m - exact_da) < 3.0 * se);
}

TEST_CASE("nonlinear transition score matches finite differences of the log density") {
  NonlinearSsmParams p{20.0, 0.6};
  std::vector<double> y(5, 0.0);
  PfModel model = make_nlss_pf_model(p, y);
  REQUIRE(model.score_dim == 2);

  auto log_trans = [&](double b, double logq, double x, double xn, int t) {
    double q = std::exp(logq);
    return log_gauss(xn, nlss_transition_mean(x, t, b), q * q);
  };
  const double h = 1e-6;
  RngStream rng(2);
  for (int rep = 0; rep < 20; ++rep) {
    double x = 3.0 * rng.normal();
    double xn = nlss_transition_mean(x, 1 + rep % 4, p.b) + rng.normal();
    int t = 1 + rep % 4;
    Vector s = model.transition_score(x, xn, t);
    double lq = std::log(p.q);
    double fd_b = (log_trans(p.b + h, lq, x, xn, t) - log_trans(p.b - h, lq, x, xn, t)) / (2 * h);
    double fd_q = (log_trans(p.b, lq + h, x, xn, t) - log_trans(p.b, lq - h, x, xn, t)) / (2 * h);
    CHECK(s(0) == doctest::Approx(fd_b).epsilon(1e-5));
    CHECK(s(1) == doctest::Approx(fd_q).epsilon(1e-5));
  }
}

TEST_CASE("nonlinear score at the true parameters averages to zero") {
  RngStream data_rng(31);
  const int reps = 80;
  std::vector<double> s_b, s_q;
  for (int r = 0; r < reps; ++r) {
    RngStream sim_rng(400 + r);
    auto y = simulate_nlss(nlss_truth(), 40, sim_rng);
    RngStream rng(800 + r);
    Vector g = fisher_gradient(nlss_truth(), y, 500, rng);
    s_b.push_back(g(0));
    s_q.push_back(g(1));
  }
  // score identity: E[d log L / d theta] = 0 at the truth, over data draws
  double se_b = std::sqrt(var_of(s_b) / reps);
  double se_q = std::sqrt(var_of(s_q) / reps);
  CHECK(std::abs(mean_of(s_b)) < 3.0 * se_b);
  CHECK(std::abs(mean_of(s_q)) < 3.0 * se_q);
}

TEST_CASE("nonlinear oracle is reproducible for a fixed stream") {
  RngStream data_rng(3);
  auto y = simulate_nlss(nlss_truth(), 20, data_rng);
  NonlinearOracle oracle(y, 200);
  Vector theta = NonlinearOracle::to_optimizer_coords(nlss_truth());
  RngStream a(7), b(7);
  auto ea = oracle.evaluate(theta, a);
  auto eb = oracle.evaluate(theta, b);
  CHECK(ea.cost == eb.cost);
  CHECK((ea.grad - eb.grad).norm() == 0.0);
  CHECK(std::isfinite(ea.cost));
}
