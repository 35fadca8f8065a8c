#include <doctest.h>

#include <cmath>

#include "gpqn/classic_qn.hpp"
#include "gpqn/rng.hpp"

using namespace gpqn;

namespace {

Vector random_vec(int n, RngStream& rng) {
  Vector v(n);
  for (int i = 0; i < n; ++i) v(i) = rng.normal();
  return v;
}

Matrix random_symmetric(int n, RngStream& rng) {
  Matrix A(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) A(i, j) = rng.normal();
  return symmetrize(A);
}

Matrix random_spd(int n, RngStream& rng) {
  Matrix A(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) A(i, j) = rng.normal();
  return A * A.transpose() + 0.5 * Matrix::Identity(n, n);
}

// Powell-symmetric-Broyden update coded independently from the weighted form.
Matrix psb_oracle(const Matrix& B, const Vector& s, const Vector& y) {
  Vector z = y - B * s;
  double ss = s.squaredNorm();
  return B + (z * s.transpose() + s * z.transpose()) / ss -
         (z.dot(s) / (ss * ss)) * (s * s.transpose());
}

// Deterministic oracle wrapper around analytic (f, g).
class DeterministicOracle : public NoisyOracle {
 public:
  using Fn = std::function<Evaluation(const Vector&)>;
  DeterministicOracle(int n, Fn fn) : n_(n), fn_(std::move(fn)) {}
  int dim() const override { return n_; }
  Evaluation evaluate(const Vector& x, RngStream&) const override { return fn_(x); }
  double cost_noise_std() const override { return 0.0; }
  Matrix grad_noise_cov() const override { return Matrix::Zero(n_, n_); }

 private:
  int n_;
  Fn fn_;
};

}  // namespace

TEST_CASE("weighted update is a no-op when the secant already holds") {
  RngStream rng(5);
  Matrix B = random_symmetric(3, rng);
  Vector s = random_vec(3, rng);
  Vector y = B * s;
  Matrix out = weighted_symmetric_update(B, s, y, random_spd(3, rng));
  CHECK((out - B).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("weighted update: rank-one construction from zero") {
  Matrix B = Matrix::Zero(2, 2);
  Vector s(2), y(2);
  s << 1, 0;
  y << 1, 0;
  Matrix out = weighted_symmetric_update(B, s, y, Matrix::Identity(2, 2));
  Matrix expected = Matrix::Zero(2, 2);
  expected(0, 0) = 1.0;
  CHECK((out - expected).cwiseAbs().maxCoeff() < 1e-14);
  CHECK((out * s - y).norm() < 1e-14);
}

TEST_CASE("weighted update: symmetry and secant over 200 random instances") {
  RngStream rng(23);
  for (int rep = 0; rep < 200; ++rep) {
    int n = 2 + rep % 4;
    Matrix B = random_symmetric(n, rng);
    Vector s = random_vec(n, rng);
    Vector y = random_vec(n, rng);
    Matrix W = random_spd(n, rng);
    Matrix out = weighted_symmetric_update(B, s, y, W);
    CHECK((out - out.transpose()).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((out * s - y).norm() < 1e-10 * std::max(1.0, y.norm()));
  }
}

TEST_CASE("weighted update coincides with the PSB oracle at W = I") {
  RngStream rng(31);
  for (int rep = 0; rep < 50; ++rep) {
    Matrix B = random_symmetric(3, rng);
    Vector s = random_vec(3, rng);
    Vector y = random_vec(3, rng);
    Matrix out = weighted_symmetric_update(B, s, y, Matrix::Identity(3, 3));
    CHECK((out - psb_oracle(B, s, y)).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("weighted update rejects a zero step") {
  CHECK_THROWS_AS(
      weighted_symmetric_update(Matrix::Identity(2, 2), Vector::Zero(2), Vector::Zero(2),
                                Matrix::Identity(2, 2)),
      std::invalid_argument);
}

TEST_CASE("weighted update solves the constrained projection (variational check)") {
  // dense grid of feasible perturbations around the output never improves the
  // weighted distance to B_prev
  RngStream rng(47);
  const int n = 2;
  Matrix B_prev = random_symmetric(n, rng);
  Vector s = random_vec(n, rng);
  Vector y = random_vec(n, rng);
  Matrix W = random_spd(n, rng);
  Matrix B_star = weighted_symmetric_update(B_prev, s, y, W);

  // the update minimizes ||W^{1/2} (B - B_prev) W^{1/2}||_F over the secant set
  auto wnorm_sq = [&](const Matrix& M) { return (W * M * W * M).trace(); };
  double base = wnorm_sq(B_star - B_prev);

  // feasible directions: symmetric E with E s = 0. For n = 2 that space is
  // one-dimensional: E = t * v v^T with v orthogonal to s... plus scalings.
  Vector v(2);
  v << -s(1), s(0);
  Matrix E = v * v.transpose();
  for (double t = -0.5; t <= 0.5; t += 1e-3) {
    if (t == 0.0) continue;
    Matrix cand = B_star + t * E;
    CHECK((cand * s - y).norm() < 1e-9);
    CHECK(wnorm_sq(cand - B_prev) >= base - 1e-9);
  }
}

TEST_CASE("bfgs_update keeps identity fixed when s = y") {
  Vector s(3);
  s << 1, 2, 3;
  auto res = bfgs_update(Matrix::Identity(3, 3), s, s);
  CHECK(!res.skipped);
  CHECK((res.B - Matrix::Identity(3, 3)).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("bfgs_update accumulates curvature of a quadratic") {
  RngStream rng(7);
  const int n = 4;
  Matrix A = random_spd(n, rng);
  Matrix B = Matrix::Identity(n, n);
  std::vector<Vector> steps;
  for (int k = 0; k < n; ++k) {
    Vector s = Vector::Zero(n);
    s(k) = 1.0;  // linearly independent directions
    steps.push_back(s);
    auto res = bfgs_update(B, s, A * s);
    REQUIRE(!res.skipped);
    B = res.B;
  }
  // the secant holds for the latest observed direction
  CHECK((B * steps.back() - A * steps.back()).norm() < 1e-8);
  CHECK((B - B.transpose()).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("bfgs_update skips on curvature violation") {
  Vector s(2), y(2);
  s << 1, 0;
  y << -1, 0;
  Matrix B = Matrix::Identity(2, 2);
  auto res = bfgs_update(B, s, y);
  CHECK(res.skipped);
  CHECK((res.B - B).norm() == 0.0);
}

TEST_CASE("bfgs_update preserves positive definiteness under curvature") {
  RngStream rng(11);
  int kept = 0;
  for (int rep = 0; rep < 200; ++rep) {
    int n = 2 + rep % 3;
    Matrix B = random_spd(n, rng);
    Vector s = random_vec(n, rng);
    Vector y = random_vec(n, rng);
    if (y.dot(s) <= 1e-12 * y.norm() * s.norm()) continue;
    auto res = bfgs_update(B, s, y);
    REQUIRE(!res.skipped);
    Eigen::SelfAdjointEigenSolver<Matrix> eig(res.B);
    CHECK(eig.eigenvalues().minCoeff() > 0.0);
    ++kept;
  }
  CHECK(kept > 50);
}

TEST_CASE("optimize_bfgs solves Rosenbrock from the classic start") {
  DeterministicOracle oracle(2, [](const Vector& x) {
    double a = 1.0 - x(0);
    double b = x(1) - x(0) * x(0);
    Evaluation e;
    e.cost = a * a + 100.0 * b * b;
    e.grad = Vector(2);
    e.grad << -2.0 * a - 400.0 * x(0) * b, 200.0 * b;
    return e;
  });
  Vector x0(2);
  x0 << -1.2, 1.0;
  BfgsParams params;
  params.max_iters = 100;
  params.grad_tol = 1e-6;
  RngStream rng(1);
  auto trace = optimize_bfgs(oracle, x0, params, rng);
  REQUIRE(!trace.iterates.empty());
  CHECK(trace.last().grad_norm < 1e-6);
  CHECK((trace.last().x - Vector::Ones(2)).norm() < 1e-4);
}

TEST_CASE("optimize_bfgs terminates quickly on a convex quadratic") {
  RngStream rng(3);
  const int n = 3;
  Matrix A = random_spd(n, rng);
  Vector b = random_vec(n, rng);
  DeterministicOracle oracle(n, [&](const Vector& x) {
    Evaluation e;
    e.cost = 0.5 * x.dot(A * x) - b.dot(x);
    e.grad = A * x - b;
    return e;
  });
  BfgsParams params;
  params.grad_tol = 1e-10;
  RngStream opt_rng(1);
  auto trace = optimize_bfgs(oracle, Vector::Zero(n), params, opt_rng);
  Vector x_star = A.ldlt().solve(b);
  CHECK((trace.last().x - x_star).norm() < 1e-8);
  // near-exact line steps give the finite-termination behavior on quadratics
  CHECK(static_cast<int>(trace.iterates.size()) <= n + 3);
}
