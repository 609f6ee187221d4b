#pragma once

#include "picmot/int_matrix.hpp"

#include <cstdlib>
#include <optional>

namespace picmot::core {

/// Smith normal form s = u * a * v with u, v unimodular and s diagonal,
/// the diagonal forming an ascending divisibility chain of nonnegative
/// integers. u_inv and v_inv are maintained alongside so that callers can
/// move between the original and diagonal coordinates without re-solving.
struct SnfDecomposition {
  IntMatrix u, s, v;
  IntMatrix u_inv, v_inv;

  std::size_t rank() const {
    std::size_t r = 0, n = std::min(s.rows(), s.cols());
    for (std::size_t i = 0; i < n; ++i)
      if (s(i, i) != 0) ++r;
    return r;
  }

  mpz_class diag(std::size_t i) const {
    if (i >= std::min(s.rows(), s.cols())) return 0;
    return s(i, i);
  }
};

namespace detail {

struct SnfOps {
  IntMatrix& s;
  IntMatrix& u;
  IntMatrix& ui;
  IntMatrix& v;
  IntMatrix& vi;

  void row_swap(std::size_t i, std::size_t j) {
    if (i == j) return;
    for (std::size_t c = 0; c < s.cols(); ++c) std::swap(s(i, c), s(j, c));
    for (std::size_t c = 0; c < u.cols(); ++c) std::swap(u(i, c), u(j, c));
    for (std::size_t r = 0; r < ui.rows(); ++r) std::swap(ui(r, i), ui(r, j));
  }
  void col_swap(std::size_t i, std::size_t j) {
    if (i == j) return;
    for (std::size_t r = 0; r < s.rows(); ++r) std::swap(s(r, i), s(r, j));
    for (std::size_t r = 0; r < v.rows(); ++r) std::swap(v(r, i), v(r, j));
    for (std::size_t c = 0; c < vi.cols(); ++c) std::swap(vi(i, c), vi(j, c));
  }
  // row i -= q * row j
  void row_sub(std::size_t i, std::size_t j, const mpz_class& q) {
    if (q == 0) return;
    for (std::size_t c = 0; c < s.cols(); ++c) s(i, c) -= q * s(j, c);
    for (std::size_t c = 0; c < u.cols(); ++c) u(i, c) -= q * u(j, c);
    for (std::size_t r = 0; r < ui.rows(); ++r) ui(r, j) += q * ui(r, i);
  }
  // col i -= q * col j
  void col_sub(std::size_t i, std::size_t j, const mpz_class& q) {
    if (q == 0) return;
    for (std::size_t r = 0; r < s.rows(); ++r) s(r, i) -= q * s(r, j);
    for (std::size_t r = 0; r < v.rows(); ++r) v(r, i) -= q * v(r, j);
    for (std::size_t c = 0; c < vi.cols(); ++c) vi(j, c) += q * vi(i, c);
  }
  void row_negate(std::size_t i) {
    for (std::size_t c = 0; c < s.cols(); ++c) s(i, c) = -s(i, c);
    for (std::size_t c = 0; c < u.cols(); ++c) u(i, c) = -u(i, c);
    for (std::size_t r = 0; r < ui.rows(); ++r) ui(r, i) = -ui(r, i);
  }
};

}  // namespace detail

/// Pivot rule: smallest absolute value among nonzero entries of the working
/// submatrix, ties broken by row-major scan order. This makes the output a
/// deterministic function of the input.
inline SnfDecomposition snf(const IntMatrix& a) {
  const std::size_t m = a.rows(), n = a.cols();
  SnfDecomposition d;
  d.s = a;
  d.u = IntMatrix::identity(m);
  d.u_inv = IntMatrix::identity(m);
  d.v = IntMatrix::identity(n);
  d.v_inv = IntMatrix::identity(n);
  detail::SnfOps ops{d.s, d.u, d.u_inv, d.v, d.v_inv};
  IntMatrix& s = d.s;

  const std::size_t steps = std::min(m, n);
  for (std::size_t t = 0; t < steps; ++t) {
    for (;;) {
      // pick pivot
      bool found = false;
      std::size_t pi = t, pj = t;
      mpz_class best;
      for (std::size_t i = t; i < m; ++i)
        for (std::size_t j = t; j < n; ++j) {
          if (s(i, j) == 0) continue;
          mpz_class ab = abs(s(i, j));
          if (!found || ab < best) {
            found = true;
            best = ab;
            pi = i;
            pj = j;
          }
        }
      if (!found) return d;  // remaining block already zero
      ops.row_swap(t, pi);
      ops.col_swap(t, pj);

      bool clean = true;
      for (std::size_t i = t + 1; i < m; ++i) {
        if (s(i, t) == 0) continue;
        mpz_class q = s(i, t) / s(t, t);  // truncated division
        ops.row_sub(i, t, q);
        if (s(i, t) != 0) clean = false;
      }
      for (std::size_t j = t + 1; j < n; ++j) {
        if (s(t, j) == 0) continue;
        mpz_class q = s(t, j) / s(t, t);
        ops.col_sub(j, t, q);
        if (s(t, j) != 0) clean = false;
      }
      if (!clean) continue;  // remainders left, re-pick pivot

      // pivot must divide the remaining block
      bool divides = true;
      for (std::size_t i = t + 1; i < m && divides; ++i)
        for (std::size_t j = t + 1; j < n; ++j)
          if (s(i, j) % s(t, t) != 0) {
            ops.row_sub(t, i, mpz_class(-1));  // row t += row i
            divides = false;
            break;
          }
      if (divides) break;
    }
    if (s(t, t) < 0) ops.row_negate(t);
  }
  return d;
}

/// Basis of the integer kernel lattice {x : a x = 0}; columns of the result.
inline IntMatrix kernel_lattice(const IntMatrix& a) {
  SnfDecomposition d = snf(a);
  std::size_t n = a.cols();
  std::size_t r = d.rank();
  IntMatrix basis(n, n - r);
  std::size_t k = 0;
  for (std::size_t j = 0; j < n; ++j) {
    bool zero_col = j >= std::min(a.rows(), a.cols()) || d.s(j, j) == 0;
    if (!zero_col) continue;
    for (std::size_t i = 0; i < n; ++i) basis(i, k) = d.v(i, j);
    ++k;
  }
  return basis;
}

/// Basis of the image lattice {a x : x in Z^n}; columns of the result.
inline IntMatrix image_lattice(const IntMatrix& a) {
  SnfDecomposition d = snf(a);
  std::size_t r = d.rank();
  IntMatrix basis(a.rows(), r);
  for (std::size_t t = 0; t < r; ++t)
    for (std::size_t i = 0; i < a.rows(); ++i) basis(i, t) = d.u_inv(i, t) * d.s(t, t);
  return basis;
}

/// One integral solution of a x = b, if any.
inline std::optional<std::vector<mpz_class>> solve(const IntMatrix& a,
                                                   const std::vector<mpz_class>& b) {
  if (a.rows() != b.size()) throw std::invalid_argument("solve shape mismatch");
  SnfDecomposition d = snf(a);
  std::vector<mpz_class> ub = mat_apply(d.u, b);
  std::size_t n = a.cols();
  std::vector<mpz_class> y(n, mpz_class(0));
  std::size_t mn = std::min(a.rows(), n);
  for (std::size_t i = 0; i < a.rows(); ++i) {
    if (i < mn && d.s(i, i) != 0) {
      if (ub[i] % d.s(i, i) != 0) return std::nullopt;
      y[i] = ub[i] / d.s(i, i);
    } else if (ub[i] != 0) {
      return std::nullopt;
    }
  }
  return mat_apply(d.v, y);
}

inline bool in_lattice(const IntMatrix& basis, const std::vector<mpz_class>& x) {
  return solve(basis, x).has_value();
}

}  // namespace picmot::core
