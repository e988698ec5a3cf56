#include <doctest.h>

#include <cmath>

#include "milab/linalg.hpp"
#include "milab/rng.hpp"

using milab::Error;
using milab::ErrorCode;
using namespace milab::linalg;

namespace {

Matrix random_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed,
                     double scale = 1.0) {
  milab::rng::Stream s(seed, milab::rng::kStreamScratch);
  Matrix m(rows, cols);
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j) m(i, j) = scale * s.next_gaussian();
  return m;
}

double reconstruction_error(const Matrix& a, const SvdResult& sv) {
  double err = 0.0;
  const std::size_t k = sv.singular_values.size();
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) {
      double s = 0.0;
      for (std::size_t r = 0; r < k; ++r)
        s += sv.u(i, r) * sv.singular_values[r] * sv.v(j, r);
      err += (a(i, j) - s) * (a(i, j) - s);
    }
  return std::sqrt(err);
}

double orthonormality_dev(const Matrix& q) {
  Matrix g = gram_at_a(q);
  double dev = 0.0;
  for (std::size_t i = 0; i < g.rows(); ++i)
    for (std::size_t j = 0; j < g.cols(); ++j)
      dev = std::max(dev, std::abs(g(i, j) - (i == j ? 1.0 : 0.0)));
  return dev;
}

}  // namespace

TEST_CASE("svd: identity and diagonal cases") {
  Matrix eye = Matrix::identity(3);
  SvdResult sv = svd(eye);
  for (double s : sv.singular_values) CHECK(s == doctest::Approx(1.0).epsilon(1e-14));

  Matrix diag(2, 2);
  diag(0, 0) = 3.0;
  SvdResult sd = svd(diag);
  CHECK(sd.singular_values[0] == doctest::Approx(3.0).epsilon(1e-14));
  CHECK(sd.singular_values[1] == doctest::Approx(0.0));
}

TEST_CASE("svd: reconstruction and orthonormality on random input") {
  // Entries up to ~1e3 per the stated operating range.
  Matrix a = random_matrix(4, 6, 7, 300.0);
  SvdResult sv = svd(a);
  CHECK(reconstruction_error(a, sv) <= 1e-8 * a.frobenius_norm());
  CHECK(orthonormality_dev(sv.u) <= 1e-8);
  CHECK(orthonormality_dev(sv.v) <= 1e-8);
  for (std::size_t i = 0; i + 1 < sv.singular_values.size(); ++i)
    CHECK(sv.singular_values[i] >= sv.singular_values[i + 1]);

  // Tall orientation too.
  Matrix b = random_matrix(9, 3, 8);
  SvdResult sb = svd(b);
  CHECK(reconstruction_error(b, sb) <= 1e-8 * b.frobenius_norm());
}

TEST_CASE("svd: rank-deficient inputs keep orthonormal bases") {
  Matrix a(4, 3);  // rank 1
  for (std::size_t j = 0; j < 3; ++j) a(1, j) = 2.0 * (j + 1.0);
  SvdResult sv = svd(a);
  CHECK(sv.singular_values[1] == doctest::Approx(0.0));
  CHECK(orthonormality_dev(sv.u) <= 1e-8);
  CHECK(orthonormality_dev(sv.v) <= 1e-8);

  Matrix zero(3, 5);
  SvdResult sz = svd(zero);
  for (double s : sz.singular_values) CHECK(s == 0.0);
  CHECK(orthonormality_dev(sz.u) <= 1e-12);
}

TEST_CASE("svd: determinism and error paths") {
  Matrix a = random_matrix(5, 5, 9);
  SvdResult s1 = svd(a), s2 = svd(a);
  CHECK(s1.u == s2.u);
  CHECK(s1.v == s2.v);
  CHECK(s1.singular_values == s2.singular_values);

  Matrix bad(2, 2);
  bad(0, 0) = std::nan("");
  CHECK_THROWS_AS(svd(bad), Error);
  try {
    svd(bad);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NonFinite);
  }
}

TEST_CASE("row_space_projector: axis-aligned, zero, and random cases") {
  Matrix a(1, 3);
  a(0, 0) = 1.0;
  Matrix p = row_space_projector(a);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j)
      CHECK(p(i, j) == doctest::Approx(i == 0 && j == 0 ? 1.0 : 0.0).epsilon(1e-14));

  // Rank-0 convention: zero matrix maps to the zero projector.
  Matrix z(2, 4);
  Matrix pz = row_space_projector(z);
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 4; ++j) CHECK(pz(i, j) == 0.0);

  Matrix r = random_matrix(2, 5, 3);
  Matrix pr = row_space_projector(r);
  Matrix pp = matmul(pr, pr);
  double idem = 0.0, sym = 0.0;
  double trace = 0.0;
  for (std::size_t i = 0; i < 5; ++i) {
    trace += pr(i, i);
    for (std::size_t j = 0; j < 5; ++j) {
      idem = std::max(idem, std::abs(pp(i, j) - pr(i, j)));
      sym = std::max(sym, std::abs(pr(i, j) - pr(j, i)));
    }
  }
  CHECK(idem <= 1e-10);
  CHECK(sym <= 1e-10);
  CHECK(trace == doctest::Approx(2.0).epsilon(1e-10));
  // P fixes the row space: P A^T = A^T.
  Matrix pat = matmul(pr, r.transposed());
  double fix = 0.0;
  for (std::size_t i = 0; i < 5; ++i)
    for (std::size_t j = 0; j < 2; ++j)
      fix = std::max(fix, std::abs(pat(i, j) - r.transposed()(i, j)));
  CHECK(fix <= 1e-8 * r.frobenius_norm());
}

TEST_CASE("alignment: orthogonal, identical, and oracle-checked subspaces") {
  Matrix w(1, 3), u(1, 3);
  w(0, 0) = 1.0;
  u(0, 1) = 1.0;
  CHECK(alignment(w, u) == doctest::Approx(0.0));

  Matrix same = random_matrix(2, 8, 4);
  CHECK(alignment(same, same) == doctest::Approx(1.0).epsilon(1e-12));

  // Production fast path vs the full projector-product SVD.
  Matrix w2 = random_matrix(3, 40, 11);
  Matrix u2 = random_matrix(2, 40, 12);
  Matrix pw = row_space_projector(w2);
  Matrix pu = row_space_projector(u2);
  const double oracle = svd(matmul(pw, pu)).singular_values[0];
  CHECK(alignment(w2, u2) == doctest::Approx(oracle).epsilon(1e-8));
  CHECK(alignment(w2, u2) >= 0.0);
  CHECK(alignment(w2, u2) <= 1.0);
}

TEST_CASE("alignment: invariance properties") {
  Matrix w = random_matrix(2, 20, 14);
  Matrix u = random_matrix(3, 20, 15);
  CHECK(std::abs(alignment(w, u) - alignment(u, w)) <= 1e-10);

  // Scale freedom.
  Matrix cw = w;
  for (std::size_t i = 0; i < cw.rows(); ++i)
    for (std::size_t j = 0; j < cw.cols(); ++j) cw(i, j) *= -41.5;
  CHECK(std::abs(alignment(cw, u) - alignment(w, u)) <= 1e-10);

  // Rotation invariance of principal angles.
  Matrix g = random_matrix(20, 20, 16);
  SvdResult qr = svd(g);
  const Matrix& q = qr.u;  // orthogonal
  CHECK(std::abs(alignment(matmul(w, q), matmul(u, q)) - alignment(w, u)) <= 1e-8);

  Matrix zero(2, 20);
  CHECK(alignment(zero, u) == 0.0);

  Matrix mismatched = random_matrix(2, 19, 17);
  CHECK_THROWS_AS(alignment(w, mismatched), Error);
}

TEST_CASE("operator_norm: diagonal, rank-1, and svd cross-check") {
  Matrix diag(2, 2);
  diag(0, 0) = 2.0;
  diag(1, 1) = 5.0;
  CHECK(operator_norm(diag) == doctest::Approx(5.0).epsilon(1e-12));

  // uv^T with unit u, v has norm exactly 1.
  milab::rng::Stream s(5, milab::rng::kStreamScratch);
  std::vector<double> uvec(6), vvec(4);
  double un = 0, vn = 0;
  for (double& x : uvec) {
    x = s.next_gaussian();
    un += x * x;
  }
  for (double& x : vvec) {
    x = s.next_gaussian();
    vn += x * x;
  }
  Matrix rank1(6, 4);
  for (std::size_t i = 0; i < 6; ++i)
    for (std::size_t j = 0; j < 4; ++j)
      rank1(i, j) = uvec[i] / std::sqrt(un) * vvec[j] / std::sqrt(vn);
  CHECK(operator_norm(rank1) == doctest::Approx(1.0).epsilon(1e-10));

  Matrix a = random_matrix(5, 5, 1);
  CHECK(std::abs(operator_norm(a) - svd(a).singular_values[0]) <= 1e-9);
}

TEST_CASE("sym_eig and tridiag_eig agree on a tridiagonal matrix") {
  const std::size_t n = 7;
  std::vector<double> diag(n), off(n - 1);
  milab::rng::Stream s(6, milab::rng::kStreamScratch);
  for (double& x : diag) x = s.next_gaussian();
  for (double& x : off) x = s.next_gaussian();
  Matrix full(n, n);
  for (std::size_t i = 0; i < n; ++i) full(i, i) = diag[i];
  for (std::size_t i = 0; i + 1 < n; ++i) full(i, i + 1) = full(i + 1, i) = off[i];
  SymEigResult dense = sym_eig(full);
  TridiagEigResult tri = tridiag_eig(diag, off);
  for (std::size_t i = 0; i < n; ++i)
    CHECK(dense.values[i] == doctest::Approx(tri.values[i]).epsilon(1e-10));
}
