#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <vector>

#include "sarforge/common.hpp"

namespace sarforge {

using Complex = std::complex<double>;

struct SparseComplexMatrix {  // CSR, columns sorted within each row
  int n = 0;
  std::vector<int> row_ptr;
  std::vector<int> col_idx;
  std::vector<Complex> values;

  void multiply(const std::vector<Complex>& x, std::vector<Complex>& y) const {
    y.assign(static_cast<std::size_t>(n), Complex(0.0));
    for (int i = 0; i < n; ++i) {
      Complex acc(0.0);
      for (int k = row_ptr[i]; k < row_ptr[i + 1]; ++k) acc += values[k] * x[col_idx[k]];
      y[i] = acc;
    }
  }

  std::vector<Complex> diagonal() const {
    std::vector<Complex> d(static_cast<std::size_t>(n), Complex(0.0));
    for (int i = 0; i < n; ++i)
      for (int k = row_ptr[i]; k < row_ptr[i + 1]; ++k)
        if (col_idx[k] == i) d[i] = values[k];
    return d;
  }
};

struct SolveOptions {
  double tol = 1e-8;  // relative residual target
  int max_iter = 20000;
};

struct SolveStats {
  int iterations = 0;
  double relative_residual = 0.0;
  int restarts = 0;
};

namespace detail {

inline Complex cdot(const std::vector<Complex>& a, const std::vector<Complex>& b) {
  Complex s(0.0);
  for (std::size_t i = 0; i < a.size(); ++i) s += std::conj(a[i]) * b[i];
  return s;
}

inline double norm2(const std::vector<Complex>& a) {
  double s = 0.0;
  for (const auto& v : a) s += std::norm(v);
  return std::sqrt(s);
}

}  // namespace detail

// Jacobi-preconditioned BiCGSTAB. On rho/omega breakdown the shadow
// residual is re-seeded from the current residual and the search restarted,
// which is enough for the lossy Helmholtz systems assembled here.
inline std::vector<Complex> bicgstab(const SparseComplexMatrix& A,
                                     const std::vector<Complex>& b,
                                     const SolveOptions& opts = {},
                                     SolveStats* stats_out = nullptr) {
  const std::size_t n = b.size();
  std::vector<Complex> x(n, Complex(0.0));
  const double norm_b = detail::norm2(b);
  SolveStats stats;
  if (norm_b == 0.0) {
    if (stats_out) *stats_out = stats;
    return x;
  }

  std::vector<Complex> inv_diag = A.diagonal();
  for (auto& d : inv_diag) d = (d == Complex(0.0)) ? Complex(1.0) : Complex(1.0) / d;
  auto precond = [&](const std::vector<Complex>& v, std::vector<Complex>& out) {
    out.resize(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = inv_diag[i] * v[i];
  };

  std::vector<Complex> r = b;  // x0 = 0
  std::vector<Complex> r_shadow = r;
  std::vector<Complex> p(n, Complex(0.0)), v(n, Complex(0.0));
  std::vector<Complex> p_hat, s_hat, t(n), s(n);
  Complex rho(1.0), alpha(1.0), omega(1.0);

  double res = detail::norm2(r);
  const double target = opts.tol * norm_b;
  const double breakdown = 1e-290;

  for (int it = 0; it < opts.max_iter; ++it) {
    const Complex rho_new = detail::cdot(r_shadow, r);
    if (std::abs(rho_new) < breakdown || std::abs(omega) < breakdown) {
      // restart from the current iterate
      r_shadow = r;
      rho = detail::cdot(r_shadow, r);
      p = r;
      ++stats.restarts;
    } else {
      const Complex beta = (rho_new / rho) * (alpha / omega);
      rho = rho_new;
      for (std::size_t i = 0; i < n; ++i) p[i] = r[i] + beta * (p[i] - omega * v[i]);
    }

    precond(p, p_hat);
    A.multiply(p_hat, v);
    const Complex denom = detail::cdot(r_shadow, v);
    if (std::abs(denom) < breakdown) {
      r_shadow = r;
      p = r;
      ++stats.restarts;
      continue;
    }
    alpha = rho / denom;
    for (std::size_t i = 0; i < n; ++i) s[i] = r[i] - alpha * v[i];

    if (detail::norm2(s) <= target) {
      for (std::size_t i = 0; i < n; ++i) x[i] += alpha * p_hat[i];
      r = s;
      res = detail::norm2(r);
      stats.iterations = it + 1;
      break;
    }

    precond(s, s_hat);
    A.multiply(s_hat, t);
    const Complex t_dot_t = detail::cdot(t, t);
    if (std::abs(t_dot_t) < breakdown) {
      for (std::size_t i = 0; i < n; ++i) x[i] += alpha * p_hat[i];
      r = s;
      res = detail::norm2(r);
      r_shadow = r;
      p = r;
      ++stats.restarts;
      stats.iterations = it + 1;
      if (res <= target) break;
      continue;
    }
    omega = detail::cdot(t, s) / t_dot_t;
    for (std::size_t i = 0; i < n; ++i) {
      x[i] += alpha * p_hat[i] + omega * s_hat[i];
      r[i] = s[i] - omega * t[i];
    }
    res = detail::norm2(r);
    stats.iterations = it + 1;
    if (res <= target) break;
  }

  stats.relative_residual = res / norm_b;
  if (stats.relative_residual > opts.tol)
    throw SolverError("bicgstab did not converge", stats.relative_residual, stats.iterations);
  if (stats_out) *stats_out = stats;
  return x;
}

// Dense LU with partial pivoting; the direct oracle for small systems.
inline std::vector<Complex> dense_solve(const SparseComplexMatrix& A,
                                        const std::vector<Complex>& b) {
  const int n = A.n;
  std::vector<Complex> M(static_cast<std::size_t>(n) * n, Complex(0.0));
  for (int i = 0; i < n; ++i)
    for (int k = A.row_ptr[i]; k < A.row_ptr[i + 1]; ++k)
      M[static_cast<std::size_t>(i) * n + A.col_idx[k]] = A.values[k];

  std::vector<Complex> x = b;
  std::vector<int> piv(n);
  for (int i = 0; i < n; ++i) piv[i] = i;

  for (int col = 0; col < n; ++col) {
    int best = col;
    double best_mag = std::abs(M[static_cast<std::size_t>(col) * n + col]);
    for (int r = col + 1; r < n; ++r) {
      const double mag = std::abs(M[static_cast<std::size_t>(r) * n + col]);
      if (mag > best_mag) {
        best = r;
        best_mag = mag;
      }
    }
    if (best_mag == 0.0) throw SolverError("dense_solve: singular matrix", 0.0, 0);
    if (best != col) {
      for (int c = 0; c < n; ++c)
        std::swap(M[static_cast<std::size_t>(col) * n + c],
                  M[static_cast<std::size_t>(best) * n + c]);
      std::swap(x[col], x[best]);
    }
    const Complex pivot = M[static_cast<std::size_t>(col) * n + col];
    for (int r = col + 1; r < n; ++r) {
      const Complex factor = M[static_cast<std::size_t>(r) * n + col] / pivot;
      if (factor == Complex(0.0)) continue;
      M[static_cast<std::size_t>(r) * n + col] = Complex(0.0);
      for (int c = col + 1; c < n; ++c)
        M[static_cast<std::size_t>(r) * n + c] -= factor * M[static_cast<std::size_t>(col) * n + c];
      x[r] -= factor * x[col];
    }
  }
  for (int r = n - 1; r >= 0; --r) {
    Complex acc = x[r];
    for (int c = r + 1; c < n; ++c) acc -= M[static_cast<std::size_t>(r) * n + c] * x[c];
    x[r] = acc / M[static_cast<std::size_t>(r) * n + r];
  }
  return x;
}

}  // namespace sarforge
