#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <utility>

namespace gpqn {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Index map between the lower triangle of a symmetric n x n matrix and its
/// half-vectorisation. Ordering is column-major over the lower triangle:
/// (0,0), (1,0), ..., (n-1,0), (1,1), ..., (n-1,n-1).
class VechIndex {
 public:
  explicit VechIndex(int n);

  int dim() const { return n_; }
  int vech_size() const { return m_; }

  /// Position of entry (i, j), i >= j, in the half-vector.
  int pos(int i, int j) const;

  /// Inverse map: half-vector position -> (i, j) with i >= j.
  std::pair<int, int> pair(int p) const;

 private:
  int n_;
  int m_;
};

/// D such that D * vech(A) = vec(A) for symmetric A. Size n^2 x n(n+1)/2.
Matrix duplication_matrix(int n);

/// L such that L * vec(A) = vech(A) for any A, and L * D = I. Size n(n+1)/2 x n^2.
Matrix elimination_matrix(int n);

/// Half-vectorise the lower triangle of A (A need not be symmetric; lower
/// triangle wins).
Vector vech(const Matrix& A);

/// Expand a half-vector into the symmetric matrix it represents.
Matrix unvech(const Vector& v);

/// (A + A^T) / 2.
Matrix symmetrize(const Matrix& A);

/// Thrown when a covariance cannot be Cholesky-factorised even at the maximum
/// jitter level.
class ConditioningError : public std::runtime_error {
 public:
  ConditioningError(const std::string& what, double jitter_attempted)
      : std::runtime_error(what), jitter_attempted_(jitter_attempted) {}
  double jitter_attempted() const { return jitter_attempted_; }

 private:
  double jitter_attempted_;
};

/// Cholesky with escalating diagonal jitter: 0, then 1e-10 * trace/dim
/// stepping x10 up to 1e-4 * trace/dim. Throws ConditioningError past that.
Eigen::LLT<Matrix> jittered_llt(const Matrix& A, double* jitter_used = nullptr);

struct GaussianBlock {
  Vector mean;
  Matrix cov;
};

/// Condition a jointly Gaussian (latent, observation) pair on the observation.
/// posterior mean = prior.mean + cross * obs_cov^{-1} * (y - obs_mean)
/// posterior cov  = prior.cov  - cross * obs_cov^{-1} * cross^T, symmetrised.
GaussianBlock condition_gaussian(const GaussianBlock& prior, const Matrix& cross_cov,
                                 const Matrix& obs_cov, const Vector& obs_mean,
                                 const Vector& observation);

}  // namespace gpqn
