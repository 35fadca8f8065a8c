#include "gpqn/classic_qn.hpp"

#include <cmath>
#include <limits>

namespace gpqn {

Matrix weighted_symmetric_update(const Matrix& B_prev, const Vector& s, const Vector& y,
                                 const Matrix& W) {
  if (s.norm() == 0.0) throw std::invalid_argument("weighted_symmetric_update: s must be nonzero");
  if (s.size() != y.size() || B_prev.rows() != s.size() || W.rows() != s.size()) {
    throw std::invalid_argument("weighted_symmetric_update: dimension mismatch");
  }
  auto llt = jittered_llt(symmetrize(W));
  Vector Wis = llt.solve(s);  // W^{-1} s
  double denom = s.dot(Wis);
  if (denom <= 0.0) throw std::invalid_argument("weighted_symmetric_update: s^T W^{-1} s <= 0");
  Vector z = y - B_prev * s;
  Matrix B = B_prev + (Wis * z.transpose() + z * Wis.transpose()) / denom -
             (z.dot(s) / (denom * denom)) * (Wis * Wis.transpose());
  return symmetrize(B);
}

BfgsUpdateResult bfgs_update(const Matrix& B_prev, const Vector& s, const Vector& y) {
  double ys = y.dot(s);
  if (ys <= 1e-12 * y.norm() * s.norm()) return {B_prev, true};
  Vector Bs = B_prev * s;
  double sBs = s.dot(Bs);
  Matrix B = B_prev - (Bs * Bs.transpose()) / sBs + (y * y.transpose()) / ys;
  return {symmetrize(B), false};
}

namespace {

struct LinePoint {
  double alpha;
  double f;
  double dphi;  // directional derivative g(x + alpha p)^T p
  Evaluation eval;
};

LinePoint probe(const NoisyOracle& oracle, RngStream& rng, const Vector& x, const Vector& p,
                double alpha) {
  Evaluation e = oracle.evaluate(x + alpha * p, rng);
  if (!std::isfinite(e.cost) || !e.grad.allFinite()) {
    // off the oracle's numeric range: report +inf so the search treats the
    // trial as an Armijo violation and shrinks toward feasible territory
    return {alpha, std::numeric_limits<double>::infinity(), 0.0, e};
  }
  return {alpha, e.cost, e.grad.dot(p), e};
}

}  // namespace

OptimizationTrace optimize_bfgs(const NoisyOracle& oracle, const Vector& x0,
                                const BfgsParams& params, RngStream& rng) {
  OptimizationTrace trace;
  trace.header["optimizer"] = "classic_bfgs";
  trace.header["c1"] = std::to_string(params.c1);
  trace.header["c2"] = std::to_string(params.c2);

  const int n = oracle.dim();
  Vector x = x0;
  Matrix B = Matrix::Identity(n, n);
  Evaluation cur;
  try {
    cur = oracle.evaluate(x, rng);
  } catch (const std::exception& ex) {
    trace.failed = true;
    trace.failure = ex.what();
    return trace;
  }
  trace.iterates.push_back({0, x, cur.cost, cur.grad.norm(), 0.0, "ok"});

  for (int k = 1; k <= params.max_iters; ++k) {
    if (cur.grad.norm() < params.grad_tol) break;
    Vector p = -jittered_llt(B).solve(cur.grad);
    double dphi0 = cur.grad.dot(p);
    if (dphi0 >= 0.0) {  // fall back to steepest descent
      p = -cur.grad;
      dphi0 = cur.grad.dot(p);
    }

    // strong Wolfe line search (bracket then bisection zoom)
    LinePoint lo{0.0, cur.cost, dphi0, cur};
    LinePoint accepted{};
    bool found = false, failed = false;
    double alpha = 1.0, alpha_prev = 0.0;
    double f_prev = cur.cost;
    int evals = 0;
    LinePoint hi{};
    bool bracketed = false;
    // one secant step toward phi' = 0 between two probed slopes; exact for
    // quadratic objectives, which gives BFGS its finite-termination behavior
    auto refine = [&](LinePoint best, double a0, double d0) {
      if (std::abs(best.dphi) <= 1e-10 * std::max(1.0, std::abs(dphi0))) return best;
      double denom = best.dphi - d0;
      if (denom == 0.0 || evals >= params.max_ls_evals) return best;
      double a_star = best.alpha - best.dphi * (best.alpha - a0) / denom;
      if (!(a_star > 0.0) || !std::isfinite(a_star)) return best;
      LinePoint ref = probe(oracle, rng, x, p, a_star);
      ++evals;
      if (ref.f <= cur.cost + params.c1 * a_star * dphi0 &&
          std::abs(ref.dphi) <= std::abs(best.dphi)) {
        return ref;
      }
      return best;
    };
    try {
      while (evals < params.max_ls_evals) {
        LinePoint pt = probe(oracle, rng, x, p, alpha);
        ++evals;
        if (pt.f > cur.cost + params.c1 * alpha * dphi0 || (evals > 1 && pt.f >= f_prev)) {
          hi = pt;
          bracketed = true;
          break;
        }
        if (std::abs(pt.dphi) <= -params.c2 * dphi0) {
          accepted = refine(pt, 0.0, dphi0);
          found = true;
          break;
        }
        if (pt.dphi >= 0.0) {
          hi = lo;
          lo = pt;
          bracketed = true;
          break;
        }
        lo = pt;
        alpha_prev = alpha;
        f_prev = pt.f;
        alpha *= 2.0;
      }
      if (!found && bracketed) {
        while (evals < params.max_ls_evals) {
          double a = 0.5 * (lo.alpha + hi.alpha);
          LinePoint pt = probe(oracle, rng, x, p, a);
          ++evals;
          if (pt.f > cur.cost + params.c1 * a * dphi0 || pt.f >= lo.f) {
            hi = pt;
          } else {
            if (std::abs(pt.dphi) <= -params.c2 * dphi0) {
              accepted = refine(pt, lo.alpha, lo.dphi);
              found = true;
              break;
            }
            if (pt.dphi * (hi.alpha - lo.alpha) >= 0.0) hi = lo;
            lo = pt;
          }
          if (std::abs(hi.alpha - lo.alpha) < 1e-14) break;
        }
      }
    } catch (const EvaluationError& ex) {
      trace.failed = true;
      trace.failure = ex.what();
      return trace;
    }
    if (!found) failed = true;

    if (failed) {
      trace.iterates.push_back({k, x, cur.cost, cur.grad.norm(), 0.0, "ls_fail"});
      trace.failed = true;
      trace.failure = "wolfe line search failed";
      break;
    }

    Vector x_next = x + accepted.alpha * p;
    Vector s = x_next - x;
    Vector yv = accepted.eval.grad - cur.grad;
    auto upd = bfgs_update(B, s, yv);
    B = upd.B;
    x = x_next;
    cur = accepted.eval;
    trace.iterates.push_back(
        {k, x, cur.cost, cur.grad.norm(), accepted.alpha, upd.skipped ? "skip" : "ok"});
  }
  return trace;
}

}  // namespace gpqn
