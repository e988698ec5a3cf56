#include "milab/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace milab::linalg {

Matrix Matrix::transposed() const {
  Matrix t(cols_, rows_);
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
  return t;
}

double Matrix::frobenius_norm() const {
  long double s = 0.0L;
  for (double x : data_) s += static_cast<long double>(x) * x;
  return std::sqrt(static_cast<double>(s));
}

bool Matrix::all_finite() const {
  for (double x : data_)
    if (!std::isfinite(x)) return false;
  return true;
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) fail(ErrorCode::DimensionMismatch, "matmul shapes");
  Matrix c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      const double* brow = b.data() + k * b.cols();
      double* crow = c.data() + i * c.cols();
      for (std::size_t j = 0; j < b.cols(); ++j) crow[j] += aik * brow[j];
    }
  }
  return c;
}

Matrix matmul_bt(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.cols()) fail(ErrorCode::DimensionMismatch, "matmul_bt shapes");
  Matrix c(a.rows(), b.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < b.rows(); ++j) {
      long double s = 0.0L;
      const double* ar = a.data() + i * a.cols();
      const double* br = b.data() + j * b.cols();
      for (std::size_t k = 0; k < a.cols(); ++k) s += static_cast<long double>(ar[k]) * br[k];
      c(i, j) = static_cast<double>(s);
    }
  }
  return c;
}

Matrix gram_at_a(const Matrix& a) {
  Matrix g(a.cols(), a.cols());
  for (std::size_t i = 0; i < a.cols(); ++i) {
    for (std::size_t j = i; j < a.cols(); ++j) {
      long double s = 0.0L;
      for (std::size_t k = 0; k < a.rows(); ++k)
        s += static_cast<long double>(a(k, i)) * a(k, j);
      g(i, j) = g(j, i) = static_cast<double>(s);
    }
  }
  return g;
}

namespace {

// One-sided Jacobi on the columns of b (m x n, m >= n), accumulating the
// right rotations into v. Columns end up mutually orthogonal.
void jacobi_orthogonalize(Matrix& b, Matrix& v) {
  const std::size_t m = b.rows(), n = b.cols();
  const double tol = 1e-15;
  const int max_sweeps = 60;
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    std::size_t rotations = 0;
    for (std::size_t i = 0; i + 1 < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        long double alpha = 0.0L, beta = 0.0L, gamma = 0.0L;
        for (std::size_t k = 0; k < m; ++k) {
          const double bi = b(k, i), bj = b(k, j);
          alpha += static_cast<long double>(bi) * bi;
          beta += static_cast<long double>(bj) * bj;
          gamma += static_cast<long double>(bi) * bj;
        }
        const double a = static_cast<double>(alpha);
        const double bb = static_cast<double>(beta);
        const double g = static_cast<double>(gamma);
        if (a == 0.0 || bb == 0.0) continue;
        if (std::abs(g) <= tol * std::sqrt(a) * std::sqrt(bb)) continue;
        ++rotations;
        const double zeta = (bb - a) / (2.0 * g);
        const double t = (zeta >= 0.0 ? 1.0 : -1.0) /
                         (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = c * t;
        for (std::size_t k = 0; k < m; ++k) {
          const double bi = b(k, i), bj = b(k, j);
          b(k, i) = c * bi - s * bj;
          b(k, j) = s * bi + c * bj;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double vi = v(k, i), vj = v(k, j);
          v(k, i) = c * vi - s * vj;
          v(k, j) = s * vi + c * vj;
        }
      }
    }
    if (rotations == 0) break;
  }
}

// Fill column `col` of u with a unit vector orthogonal to columns [0, col).
// Deterministic: tries canonical basis vectors in order.
void fill_orthonormal_column(Matrix& u, std::size_t col) {
  const std::size_t m = u.rows();
  for (std::size_t cand = 0; cand < m; ++cand) {
    std::vector<double> w(m, 0.0);
    w[cand] = 1.0;
    for (std::size_t c = 0; c < col; ++c) {
      long double dot = 0.0L;
      for (std::size_t k = 0; k < m; ++k) dot += static_cast<long double>(u(k, c)) * w[k];
      for (std::size_t k = 0; k < m; ++k) w[k] -= static_cast<double>(dot) * u(k, c);
    }
    long double nrm2 = 0.0L;
    for (double x : w) nrm2 += static_cast<long double>(x) * x;
    const double nrm = std::sqrt(static_cast<double>(nrm2));
    if (nrm > 1e-6) {
      for (std::size_t k = 0; k < m; ++k) u(k, col) = w[k] / nrm;
      return;
    }
  }
  fail(ErrorCode::Internal, "could not complete orthonormal basis");
}

SvdResult svd_tall(const Matrix& a) {
  const std::size_t m = a.rows(), n = a.cols();
  Matrix b = a;
  Matrix v = Matrix::identity(n);
  jacobi_orthogonalize(b, v);

  std::vector<double> s(n);
  for (std::size_t j = 0; j < n; ++j) {
    long double nrm2 = 0.0L;
    for (std::size_t k = 0; k < m; ++k) nrm2 += static_cast<long double>(b(k, j)) * b(k, j);
    s[j] = std::sqrt(static_cast<double>(nrm2));
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t x, std::size_t y) { return s[x] > s[y]; });

  SvdResult r;
  r.u = Matrix(m, n);
  r.v = Matrix(n, n);
  r.singular_values.resize(n);
  const double tiny = (n > 0 && s[order[0]] > 0.0)
                          ? s[order[0]] * std::numeric_limits<double>::epsilon() * 16
                          : 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    const std::size_t src = order[j];
    r.singular_values[j] = s[src];
    for (std::size_t k = 0; k < n; ++k) r.v(k, j) = v(k, src);
    if (s[src] > tiny && s[src] > 0.0) {
      for (std::size_t k = 0; k < m; ++k) r.u(k, j) = b(k, src) / s[src];
    } else {
      r.singular_values[j] = 0.0;
      fill_orthonormal_column(r.u, j);
    }
  }

  // Sign convention: largest-magnitude entry of each left vector positive.
  for (std::size_t j = 0; j < n; ++j) {
    std::size_t arg = 0;
    double best = -1.0;
    for (std::size_t k = 0; k < m; ++k) {
      const double mag = std::abs(r.u(k, j));
      if (mag > best) {
        best = mag;
        arg = k;
      }
    }
    if (r.u(arg, j) < 0.0) {
      for (std::size_t k = 0; k < m; ++k) r.u(k, j) = -r.u(k, j);
      for (std::size_t k = 0; k < n; ++k) r.v(k, j) = -r.v(k, j);
    }
  }
  return r;
}

}  // namespace

SvdResult svd(const Matrix& a) {
  if (a.empty()) fail(ErrorCode::InvalidArgument, "svd of empty matrix");
  if (!a.all_finite()) fail(ErrorCode::NonFinite, "svd input has NaN/Inf");
  if (a.rows() >= a.cols()) return svd_tall(a);
  SvdResult t = svd_tall(a.transposed());
  return SvdResult{std::move(t.v), std::move(t.singular_values), std::move(t.u)};
}

Matrix row_space_basis(const Matrix& a, double rank_tol) {
  if (rank_tol <= 0.0) fail(ErrorCode::InvalidArgument, "rank_tol must be > 0");
  SvdResult r = svd(a);
  const double s1 = r.singular_values.empty() ? 0.0 : r.singular_values[0];
  std::size_t rank = 0;
  for (double s : r.singular_values)
    if (s > rank_tol * s1 && s > 0.0) ++rank;
  Matrix basis(rank, a.cols());
  for (std::size_t i = 0; i < rank; ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) basis(i, j) = r.v(j, i);
  return basis;
}

Matrix row_space_projector(const Matrix& a, double rank_tol) {
  if (a.empty()) fail(ErrorCode::InvalidArgument, "projector of empty matrix");
  if (!a.all_finite()) fail(ErrorCode::NonFinite, "projector input has NaN/Inf");
  Matrix basis = row_space_basis(a, rank_tol);
  const std::size_t d = a.cols();
  Matrix p(d, d);
  for (std::size_t r = 0; r < basis.rows(); ++r)
    for (std::size_t i = 0; i < d; ++i) {
      const double bi = basis(r, i);
      if (bi == 0.0) continue;
      for (std::size_t j = 0; j < d; ++j) p(i, j) += bi * basis(r, j);
    }
  return p;
}

double alignment(const Matrix& w, const Matrix& u, double rank_tol) {
  if (w.empty() || u.empty()) fail(ErrorCode::InvalidArgument, "alignment of empty matrix");
  if (w.cols() != u.cols())
    fail(ErrorCode::DimensionMismatch, "alignment: ambient dimensions differ");
  if (!w.all_finite() || !u.all_finite()) fail(ErrorCode::NonFinite, "alignment input");
  Matrix bw = row_space_basis(w, rank_tol);
  Matrix bu = row_space_basis(u, rank_tol);
  if (bw.rows() == 0 || bu.rows() == 0) return 0.0;
  Matrix prod = matmul_bt(bw, bu);
  double rho = svd(prod).singular_values[0];
  return std::clamp(rho, 0.0, 1.0);
}

double operator_norm(const Matrix& a) {
  if (a.empty()) fail(ErrorCode::InvalidArgument, "operator_norm of empty matrix");
  if (!a.all_finite()) fail(ErrorCode::NonFinite, "operator_norm input");
  // Power iteration on the smaller of A^T A and A A^T.
  const bool use_cols = a.cols() <= a.rows();
  const Matrix g = use_cols ? gram_at_a(a) : gram_at_a(a.transposed());
  const std::size_t n = g.rows();
  std::vector<double> v(n), gv(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = 1.0 + static_cast<double>(i) / (n + 1.0);
  double nrm = std::sqrt(std::inner_product(v.begin(), v.end(), v.begin(), 0.0));
  for (double& x : v) x /= nrm;

  double lambda = 0.0;
  int stable = 0;
  for (int it = 0; it < 50000; ++it) {
    for (std::size_t i = 0; i < n; ++i) {
      long double s = 0.0L;
      const double* row = g.data() + i * n;
      for (std::size_t j = 0; j < n; ++j) s += static_cast<long double>(row[j]) * v[j];
      gv[i] = static_cast<double>(s);
    }
    const double lam = std::inner_product(v.begin(), v.end(), gv.begin(), 0.0);
    const double gn = std::sqrt(std::inner_product(gv.begin(), gv.end(), gv.begin(), 0.0));
    if (gn == 0.0) return 0.0;  // started in the null space of a PSD matrix: norm 0
    for (std::size_t i = 0; i < n; ++i) v[i] = gv[i] / gn;
    if (std::abs(lam - lambda) <= 1e-15 * std::max(1.0, std::abs(lam))) {
      if (++stable >= 3) {
        lambda = lam;
        break;
      }
    } else {
      stable = 0;
    }
    lambda = lam;
  }
  return std::sqrt(std::max(0.0, lambda));
}

SymEigResult sym_eig(const Matrix& a) {
  if (a.rows() != a.cols()) fail(ErrorCode::DimensionMismatch, "sym_eig needs square");
  const std::size_t n = a.rows();
  Matrix m = a;
  Matrix vecs = Matrix::identity(n);
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (std::size_t i = 0; i + 1 < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) off += m(i, j) * m(i, j);
    if (off < 1e-30) break;
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = m(p, q);
        if (std::abs(apq) < 1e-300) continue;
        const double theta = (m(q, q) - m(p, p)) / (2.0 * apq);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(1.0 + theta * theta));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double mkp = m(k, p), mkq = m(k, q);
          m(k, p) = c * mkp - s * mkq;
          m(k, q) = s * mkp + c * mkq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double mpk = m(p, k), mqk = m(q, k);
          m(p, k) = c * mpk - s * mqk;
          m(q, k) = s * mpk + c * mqk;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double vkp = vecs(k, p), vkq = vecs(k, q);
          vecs(k, p) = c * vkp - s * vkq;
          vecs(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t x, std::size_t y) { return m(x, x) < m(y, y); });
  SymEigResult r;
  r.values.resize(n);
  r.vectors = Matrix(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    r.values[j] = m(order[j], order[j]);
    for (std::size_t k = 0; k < n; ++k) r.vectors(k, j) = vecs(k, order[j]);
  }
  return r;
}

TridiagEigResult tridiag_eig(std::vector<double> d, std::vector<double> e) {
  const std::size_t n = d.size();
  if (n == 0) fail(ErrorCode::InvalidArgument, "tridiag_eig of empty matrix");
  if (e.size() + 1 != n) fail(ErrorCode::DimensionMismatch, "offdiag length");
  // QL with implicit shifts (tql2), tracking only the first row of the
  // eigenvector matrix, which is all Golub-Welsch needs.
  std::vector<double> z(n, 0.0);
  z[0] = 1.0;
  e.push_back(0.0);
  for (std::size_t l = 0; l < n; ++l) {
    int iter = 0;
    std::size_t m;
    do {
      for (m = l; m + 1 < n; ++m) {
        const double dd = std::abs(d[m]) + std::abs(d[m + 1]);
        if (std::abs(e[m]) <= std::numeric_limits<double>::epsilon() * dd) break;
      }
      if (m != l) {
        if (++iter > 50) fail(ErrorCode::Internal, "tridiag_eig: no convergence");
        double g = (d[l + 1] - d[l]) / (2.0 * e[l]);
        double r = std::hypot(g, 1.0);
        g = d[m] - d[l] + e[l] / (g + (g >= 0.0 ? std::abs(r) : -std::abs(r)));
        double s = 1.0, c = 1.0, p = 0.0;
        bool underflow = false;
        for (std::size_t i = m; i-- > l;) {
          double f = s * e[i];
          const double b = c * e[i];
          r = std::hypot(f, g);
          e[i + 1] = r;
          if (r == 0.0) {
            d[i + 1] -= p;
            e[m] = 0.0;
            underflow = true;
            break;
          }
          s = f / r;
          c = g / r;
          g = d[i + 1] - p;
          r = (d[i] - g) * s + 2.0 * c * b;
          p = s * r;
          d[i + 1] = g + p;
          g = c * r - b;
          f = z[i + 1];
          z[i + 1] = s * z[i] + c * f;
          z[i] = c * z[i] - s * f;
        }
        if (underflow) continue;
        d[l] -= p;
        e[l] = g;
        e[m] = 0.0;
      }
    } while (m != l);
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t x, std::size_t y) { return d[x] < d[y]; });
  TridiagEigResult r;
  r.values.resize(n);
  r.first_components.resize(n);
  for (std::size_t j = 0; j < n; ++j) {
    r.values[j] = d[order[j]];
    r.first_components[j] = z[order[j]];
  }
  return r;
}

}  // namespace milab::linalg
