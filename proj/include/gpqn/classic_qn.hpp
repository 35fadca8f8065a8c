#pragma once

#include "gpqn/oracle.hpp"
#include "gpqn/trace.hpp"

namespace gpqn {

/// General weighted symmetric quasi-Newton update: the minimiser of
/// ||B - B_prev||_W^2 subject to B = B^T and B s = y, for W symmetric
/// positive definite. Reduces to PSB at W = I.
Matrix weighted_symmetric_update(const Matrix& B_prev, const Vector& s, const Vector& y,
                                 const Matrix& W);

struct BfgsUpdateResult {
  Matrix B;
  bool skipped = false;  // curvature condition y^T s > 0 violated
};

/// Standard (Hessian-form) BFGS update, skipped when y^T s is not safely
/// positive so positive definiteness is preserved.
BfgsUpdateResult bfgs_update(const Matrix& B_prev, const Vector& s, const Vector& y);

struct BfgsParams {
  int max_iters = 200;
  double grad_tol = 1e-8;
  double c1 = 1e-4;
  double c2 = 0.9;
  int max_ls_evals = 30;
};

/// BFGS with a strong-Wolfe line search applied directly to the oracle.
/// On noisy oracles the line search frequently fails; the failure is recorded
/// in the trace and the run terminates at that point.
OptimizationTrace optimize_bfgs(const NoisyOracle& oracle, const Vector& x0,
                                const BfgsParams& params, RngStream& rng);

}  // namespace gpqn
