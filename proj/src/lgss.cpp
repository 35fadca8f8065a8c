#include "gpqn/problems/lgss.hpp"

#include <cmath>
#include <complex>
#include <numbers>

namespace gpqn {

std::vector<double> simulate_lgss(const LinearSsmParams& params, int N, RngStream& rng) {
  if (N < 1) throw std::invalid_argument("simulate_lgss: N >= 1");
  std::vector<double> y(N);
  double x = rng.normal();  // x_1 ~ N(0, 1)
  for (int t = 0; t < N; ++t) {
    y[t] = params.c * x + std::sqrt(params.r) * rng.normal();
    x = params.a * x + std::sqrt(params.q) * rng.normal();
  }
  return y;
}

KalmanResult kalman_loglik_grad(const LinearSsmParams& params, const std::vector<double>& y) {
  const double a = params.a, c = params.c, q = params.q, r = params.r;
  if (q <= 0.0 || r <= 0.0) throw std::invalid_argument("kalman_loglik_grad: q, r must be > 0");

  // filter state and its sensitivities w.r.t. (a, c, q, r)
  double m = 0.0, P = 1.0;
  Eigen::Vector4d dm = Eigen::Vector4d::Zero();
  Eigen::Vector4d dP = Eigen::Vector4d::Zero();
  const Eigen::Vector4d da(1, 0, 0, 0), dc(0, 1, 0, 0), dq(0, 0, 1, 0), dr(0, 0, 0, 1);

  KalmanResult res;
  res.grad.setZero();
  const double log2pi = std::log(2.0 * std::numbers::pi);

  for (double yt : y) {
    double v = yt - c * m;
    double S = c * c * P + r;
    if (S <= 0.0) throw std::runtime_error("kalman_loglik_grad: non-positive innovation variance");
    Eigen::Vector4d dv = -(dc * m + c * dm);
    Eigen::Vector4d dS = 2.0 * c * P * dc + c * c * dP + dr;

    res.loglik += -0.5 * (log2pi + std::log(S) + v * v / S);
    res.grad += -0.5 * dS / S - v * dv / S + 0.5 * v * v * dS / (S * S);

    double K = c * P / S;
    Eigen::Vector4d dK = (dc * P + c * dP) / S - (c * P / (S * S)) * dS;
    double m_f = m + K * v;
    Eigen::Vector4d dm_f = dm + dK * v + K * dv;
    double P_f = P - K * c * P;
    Eigen::Vector4d dP_f = dP - dK * c * P - K * dc * P - K * c * dP;

    m = a * m_f;
    dm = da * m_f + a * dm_f;
    P = a * a * P_f + q;
    dP = 2.0 * a * P_f * da + a * a * dP_f + dq;
  }
  return res;
}

NoisyLgssOracle::NoisyLgssOracle(std::vector<double> y, double cost_noise_std,
                                 double grad_noise_std)
    : y_(std::move(y)), cost_noise_std_(cost_noise_std), grad_noise_std_(grad_noise_std) {
  if (y_.empty()) throw std::invalid_argument("NoisyLgssOracle: empty data");
}

Vector NoisyLgssOracle::to_optimizer_coords(const LinearSsmParams& p) {
  if (p.q <= 0.0 || p.r <= 0.0)
    throw std::domain_error("to_optimizer_coords: q, r must be > 0");
  Vector theta(4);
  theta << p.a, p.c, std::log(p.q), std::log(p.r);
  return theta;
}

LinearSsmParams NoisyLgssOracle::from_optimizer_coords(const Vector& theta) {
  if (theta.size() != 4) throw std::invalid_argument("from_optimizer_coords: need 4 entries");
  return {theta(0), theta(1), std::exp(theta(2)), std::exp(theta(3))};
}

Evaluation NoisyLgssOracle::evaluate(const Vector& theta, RngStream& rng) const {
  if (theta.size() != 4) throw std::invalid_argument("NoisyLgssOracle: theta must have 4 entries");
  if (!theta.allFinite()) throw std::domain_error("NoisyLgssOracle: non-finite parameters");
  LinearSsmParams p = from_optimizer_coords(theta);
  KalmanResult kf = kalman_loglik_grad(p, y_);

  Evaluation e;
  e.cost = -kf.loglik + cost_noise_std_ * rng.normal();
  Eigen::Vector4d g_nat = -kf.grad;
  for (int i = 0; i < 4; ++i) g_nat(i) += grad_noise_std_ * rng.normal();
  // chain rule into (a, c, log q, log r)
  e.grad = Vector(4);
  e.grad << g_nat(0), g_nat(1), g_nat(2) * p.q, g_nat(3) * p.r;
  return e;
}

Matrix NoisyLgssOracle::grad_noise_cov() const {
  return grad_noise_std_ * grad_noise_std_ * Matrix::Identity(4, 4);
}

PfModel make_lgss_pf_model(const LinearSsmParams& params, const std::vector<double>& y) {
  if (params.q <= 0.0 || params.r <= 0.0)
    throw std::invalid_argument("make_lgss_pf_model: q, r must be > 0");
  PfModel model;
  model.num_obs = static_cast<int>(y.size());
  model.score_dim = 1;
  const double a = params.a, c = params.c, q = params.q, r = params.r;
  const double log2pi = std::log(2.0 * std::numbers::pi);
  model.sample_initial = [](RngStream& rng) { return rng.normal(); };
  model.sample_transition = [a, q](double x, int, RngStream& rng) {
    return a * x + std::sqrt(q) * rng.normal();
  };
  model.log_obs_density = [y, c, r, log2pi](double x, int t) {
    double d = y[t - 1] - c * x;
    return -0.5 * (log2pi + std::log(r) + d * d / r);
  };
  model.transition_score = [a, q](double x, double x_next, int) {
    return Vector::Constant(1, (x_next - a * x) * x / q);
  };
  return model;
}

std::vector<BodePoint> transfer_function(double a, double c, const std::vector<double>& omegas) {
  std::vector<BodePoint> out;
  out.reserve(omegas.size());
  for (double w : omegas) {
    std::complex<double> G = c / (std::exp(std::complex<double>(0.0, w)) - a);
    out.push_back({w, std::abs(G), std::arg(G)});
  }
  return out;
}

}  // namespace gpqn
