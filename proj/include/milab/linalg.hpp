#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "milab/common.hpp"

namespace milab::linalg {

/// Dense row-major matrix of doubles. Small/medium desk scale only
/// (everything in the lab is at most a few thousand rows or columns).
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  static Matrix identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  std::span<double> row(std::size_t i) { return {data_.data() + i * cols_, cols_}; }
  std::span<const double> row(std::size_t i) const {
    return {data_.data() + i * cols_, cols_};
  }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }

  Matrix transposed() const;
  double frobenius_norm() const;
  bool all_finite() const;

  bool operator==(const Matrix& o) const = default;

 private:
  std::size_t rows_ = 0, cols_ = 0;
  std::vector<double> data_;
};

Matrix matmul(const Matrix& a, const Matrix& b);
/// a * b^T without forming the transpose.
Matrix matmul_bt(const Matrix& a, const Matrix& b);
/// a^T * a (Gram matrix of the columns).
Matrix gram_at_a(const Matrix& a);

/// Thin SVD a = u * diag(s) * v^T with u (m x k), v (n x k), k = min(m, n).
/// Singular values non-increasing; u, v have orthonormal columns even when
/// a is rank deficient.
struct SvdResult {
  Matrix u;
  std::vector<double> singular_values;
  Matrix v;
};

/// One-sided Jacobi SVD. Deterministic sweep order and sign convention, so
/// identical inputs give bit-identical output.
SvdResult svd(const Matrix& a);

/// Orthonormal basis of Row(a) as the rows of an r x d matrix, keeping
/// singular directions with s_i > rank_tol * s_1. r = 0 for the zero matrix.
Matrix row_space_basis(const Matrix& a, double rank_tol);

inline constexpr double kDefaultRankTol = 1e-10;

/// Orthogonal projector onto Row(a): d x d, symmetric, idempotent.
/// The zero matrix maps to the zero projector.
Matrix row_space_projector(const Matrix& a, double rank_tol = kDefaultRankTol);

/// Alignment rho(w, u) = ||P_w P_u||_op, the cosine of the smallest principal
/// angle between the two row spaces. Computed as the top singular value of
/// B_w B_u^T for orthonormal row bases, which is the same value at O(mpd)
/// cost instead of O(d^3). Clamped to [0, 1].
double alignment(const Matrix& w, const Matrix& u, double rank_tol = kDefaultRankTol);

/// Top singular value via power iteration on the smaller Gram matrix.
/// Independent of svd() so the two can cross-check each other.
double operator_norm(const Matrix& a);

/// Eigen-decomposition of a small symmetric matrix (cyclic Jacobi).
/// Eigenvalues ascending; eigenvectors are the columns of `vectors`.
struct SymEigResult {
  std::vector<double> values;
  Matrix vectors;
};
SymEigResult sym_eig(const Matrix& a);

/// Eigenvalues (ascending) and first eigenvector components of a symmetric
/// tridiagonal matrix; the workhorse behind Golub-Welsch quadrature rules.
/// diag has n entries, offdiag n-1.
struct TridiagEigResult {
  std::vector<double> values;
  std::vector<double> first_components;
};
TridiagEigResult tridiag_eig(std::vector<double> diag, std::vector<double> offdiag);

}  // namespace milab::linalg
