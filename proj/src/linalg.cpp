#include "gpqn/linalg.hpp"

#include <cmath>
#include <string>

namespace gpqn {

VechIndex::VechIndex(int n) : n_(n), m_(n * (n + 1) / 2) {
  if (n < 1) throw std::invalid_argument("VechIndex: n must be >= 1");
}

int VechIndex::pos(int i, int j) const {
  if (i < j || j < 0 || i >= n_) throw std::invalid_argument("VechIndex::pos: need 0 <= j <= i < n");
  // entries before column j: n + (n-1) + ... + (n-j+1) = j*n - j*(j-1)/2
  return j * n_ - j * (j - 1) / 2 + (i - j);
}

std::pair<int, int> VechIndex::pair(int p) const {
  if (p < 0 || p >= m_) throw std::invalid_argument("VechIndex::pair: position out of range");
  int j = 0;
  while (p >= n_ - j) {
    p -= n_ - j;
    ++j;
  }
  return {j + p, j};
}

Matrix duplication_matrix(int n) {
  VechIndex idx(n);
  Matrix D = Matrix::Zero(n * n, idx.vech_size());
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      int row = j * n + i;  // vec is column-major
      int col = (i >= j) ? idx.pos(i, j) : idx.pos(j, i);
      D(row, col) = 1.0;
    }
  }
  return D;
}

Matrix elimination_matrix(int n) {
  VechIndex idx(n);
  Matrix L = Matrix::Zero(idx.vech_size(), n * n);
  for (int j = 0; j < n; ++j) {
    for (int i = j; i < n; ++i) {
      L(idx.pos(i, j), j * n + i) = 1.0;
    }
  }
  return L;
}

Vector vech(const Matrix& A) {
  const int n = static_cast<int>(A.rows());
  if (A.cols() != n) throw std::invalid_argument("vech: matrix must be square");
  VechIndex idx(n);
  Vector v(idx.vech_size());
  for (int j = 0; j < n; ++j)
    for (int i = j; i < n; ++i) v(idx.pos(i, j)) = A(i, j);
  return v;
}

Matrix unvech(const Vector& v) {
  const int m = static_cast<int>(v.size());
  // invert m = n(n+1)/2
  const int n = static_cast<int>(std::lround((std::sqrt(8.0 * m + 1.0) - 1.0) / 2.0));
  if (n * (n + 1) / 2 != m) throw std::invalid_argument("unvech: length is not triangular");
  VechIndex idx(n);
  Matrix A(n, n);
  for (int j = 0; j < n; ++j)
    for (int i = j; i < n; ++i) {
      A(i, j) = v(idx.pos(i, j));
      A(j, i) = A(i, j);
    }
  return A;
}

Matrix symmetrize(const Matrix& A) { return 0.5 * (A + A.transpose()); }

Eigen::LLT<Matrix> jittered_llt(const Matrix& A, double* jitter_used) {
  const int n = static_cast<int>(A.rows());
  const double scale = std::max(A.trace() / n, 1e-300);
  double jitter = 0.0;
  for (;;) {
    Matrix Aj = A;
    if (jitter > 0.0) Aj.diagonal().array() += jitter;
    Eigen::LLT<Matrix> llt(Aj);
    if (llt.info() == Eigen::Success) {
      if (jitter_used) *jitter_used = jitter;
      return llt;
    }
    if (jitter == 0.0) {
      jitter = 1e-10 * scale;
    } else if (jitter < 1e-4 * scale) {
      jitter *= 10.0;
    } else {
      throw ConditioningError("jittered_llt: matrix not positive definite at max jitter " +
                                  std::to_string(jitter),
                              jitter);
    }
  }
}

GaussianBlock condition_gaussian(const GaussianBlock& prior, const Matrix& cross_cov,
                                 const Matrix& obs_cov, const Vector& obs_mean,
                                 const Vector& observation) {
  if (cross_cov.rows() != prior.mean.size() || cross_cov.cols() != observation.size() ||
      obs_cov.rows() != observation.size() || obs_mean.size() != observation.size()) {
    throw std::invalid_argument("condition_gaussian: dimension mismatch");
  }
  auto llt = jittered_llt(symmetrize(obs_cov));
  Vector innov = observation - obs_mean;
  Matrix gain = llt.solve(cross_cov.transpose()).transpose();  // cross * obs_cov^{-1}
  GaussianBlock post;
  post.mean = prior.mean + gain * innov;
  post.cov = symmetrize(prior.cov - gain * cross_cov.transpose());
  return post;
}

}  // namespace gpqn
