#ifndef PNP_SOLVERS_HPP
#define PNP_SOLVERS_HPP

#include "pnp/sparse.hpp"

#include <cmath>
#include <optional>
#include <span>
#include <string>

namespace pnp {

struct SolveResult {
  Vector x;
  int iterations = 0;
  double relative_residual = 0.0;  ///< ||b - Ax||_2 / ||b||_2
  bool dense_fallback = false;
};

struct SolverOptions {
  double tol = 1e-10;
  int max_iterations = 5000;
  /// Largest dimension for which solve_general may fall back to dense elimination.
  std::size_t dense_limit = 2000;
};

namespace detail {

inline double relative_residual(const CsrMatrix& a, std::span<const double> x, std::span<const double> b,
                                double bnorm) {
  const Vector ax = spmv(a, x);
  double s = 0.0;
  for (std::size_t i = 0; i < b.size(); ++i) s += (b[i] - ax[i]) * (b[i] - ax[i]);
  return std::sqrt(s) / bnorm;
}

inline Vector inverse_diagonal(const CsrMatrix& a) {
  Vector d = a.diagonal_values();
  for (double& v : d) v = v != 0.0 ? 1.0 / v : 1.0;
  return d;
}

inline Vector initial_guess(std::size_t n, std::optional<std::span<const double>> x0) {
  if (!x0) return Vector(n, 0.0);
  require_size(x0->size(), n, "initial guess");
  return Vector(x0->begin(), x0->end());
}

}  // namespace detail

/// Gaussian elimination with partial pivoting on a row-major dense copy.
inline Vector solve_dense(std::vector<double> a, Vector b) {
  const std::size_t n = b.size();
  require_size(a.size(), n * n, "dense matrix");
  for (std::size_t k = 0; k < n; ++k) {
    std::size_t piv = k;
    for (std::size_t i = k + 1; i < n; ++i)
      if (std::abs(a[i * n + k]) > std::abs(a[piv * n + k])) piv = i;
    if (a[piv * n + k] == 0.0) throw SolverError("singular matrix in dense solve", INFINITY, 0);
    if (piv != k) {
      for (std::size_t j = 0; j < n; ++j) std::swap(a[k * n + j], a[piv * n + j]);
      std::swap(b[k], b[piv]);
    }
    const double inv = 1.0 / a[k * n + k];
    for (std::size_t i = k + 1; i < n; ++i) {
      const double f = a[i * n + k] * inv;
      if (f == 0.0) continue;
      for (std::size_t j = k; j < n; ++j) a[i * n + j] -= f * a[k * n + j];
      b[i] -= f * b[k];
    }
  }
  Vector x(n);
  for (std::size_t i = n; i-- > 0;) {
    double s = b[i];
    for (std::size_t j = i + 1; j < n; ++j) s -= a[i * n + j] * x[j];
    x[i] = s / a[i * n + i];
  }
  return x;
}

/// Row-major dense inverse of a small sparse matrix.
inline std::vector<double> dense_inverse(const CsrMatrix& a) {
  const std::size_t n = a.size();
  const std::vector<double> dense = a.to_dense();
  std::vector<double> inv(n * n);
  for (std::size_t j = 0; j < n; ++j) {
    Vector e(n, 0.0);
    e[j] = 1.0;
    const Vector col = solve_dense(dense, e);
    for (std::size_t i = 0; i < n; ++i) inv[i * n + j] = col[i];
  }
  return inv;
}

/// Jacobi-preconditioned conjugate gradients for symmetric positive definite systems.
inline SolveResult solve_spd(const CsrMatrix& a, std::span<const double> b, const SolverOptions& opt = {},
                             std::optional<std::span<const double>> x0 = std::nullopt) {
  const std::size_t n = a.size();
  require_size(b.size(), n, "solve_spd rhs");
  if (!(opt.tol > 0.0)) throw SolverError("solver tolerance must be positive", INFINITY, 0);
  SolveResult res;
  const double bnorm = norm2(b);
  if (bnorm == 0.0) {
    res.x.assign(n, 0.0);
    return res;
  }
  res.x = detail::initial_guess(n, x0);
  const Vector dinv = detail::inverse_diagonal(a);

  // The recurrence residual drifts from b - Ax near 1e-12; restart from the true
  // residual when they disagree.
  int it = 0;
  for (int restart = 0; restart < 4 && it < opt.max_iterations; ++restart) {
    Vector r = spmv(a, res.x);
    for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - r[i];
    double rnorm = norm2(r);
    if (rnorm <= opt.tol * bnorm) break;
    Vector z(n), p(n);
    for (std::size_t i = 0; i < n; ++i) p[i] = z[i] = dinv[i] * r[i];
    double rz = dot(r, z);
    for (; it < opt.max_iterations; ++it) {
      if (rnorm <= opt.tol * bnorm) break;
      const Vector ap = spmv(a, p);
      const double pap = dot(p, ap);
      if (!(pap > 0.0)) throw SolverError("matrix is not positive definite", rnorm / bnorm, it);
      const double alpha = rz / pap;
      for (std::size_t i = 0; i < n; ++i) {
        res.x[i] += alpha * p[i];
        r[i] -= alpha * ap[i];
        z[i] = dinv[i] * r[i];
      }
      const double rz_new = dot(r, z);
      const double beta = rz_new / rz;
      rz = rz_new;
      for (std::size_t i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
      rnorm = norm2(r);
      res.iterations = it + 1;
    }
  }
  res.relative_residual = detail::relative_residual(a, res.x, b, bnorm);
  if (!(res.relative_residual <= opt.tol))
    throw SolverError("conjugate gradients did not converge (relative residual " +
                          std::to_string(res.relative_residual) + ")",
                      res.relative_residual, res.iterations);
  return res;
}

namespace detail {

inline bool bicgstab(const CsrMatrix& a, std::span<const double> b, const Vector& dinv, double bnorm,
                     const SolverOptions& opt, SolveResult& res) {
  const std::size_t n = a.size();
  Vector r = spmv(a, res.x);
  for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - r[i];
  const Vector rhat = r;
  Vector p(n, 0.0), v(n, 0.0), y(n), s(n), zz(n);
  double rho = 1.0, alpha = 1.0, omega = 1.0;
  for (int it = 0; it < opt.max_iterations; ++it) {
    if (norm2(r) <= opt.tol * bnorm) return true;
    const double rho_new = dot(rhat, r);
    if (rho_new == 0.0 || omega == 0.0) return false;
    const double beta = (rho_new / rho) * (alpha / omega);
    rho = rho_new;
    for (std::size_t i = 0; i < n; ++i) {
      p[i] = r[i] + beta * (p[i] - omega * v[i]);
      y[i] = dinv[i] * p[i];
    }
    v = spmv(a, y);
    const double rv = dot(rhat, v);
    if (rv == 0.0) return false;
    alpha = rho / rv;
    for (std::size_t i = 0; i < n; ++i) {
      res.x[i] += alpha * y[i];
      s[i] = r[i] - alpha * v[i];
    }
    res.iterations = it + 1;
    if (norm2(s) <= opt.tol * bnorm) {
      r = s;
      continue;
    }
    for (std::size_t i = 0; i < n; ++i) zz[i] = dinv[i] * s[i];
    const Vector t = spmv(a, zz);
    const double tt = dot(t, t);
    if (tt == 0.0) return false;
    omega = dot(t, s) / tt;
    for (std::size_t i = 0; i < n; ++i) {
      res.x[i] += omega * zz[i];
      r[i] = s[i] - omega * t[i];
    }
  }
  return norm2(r) <= opt.tol * bnorm;
}

}  // namespace detail

/// Jacobi-preconditioned BiCGSTAB for general nonsingular systems, with a dense
/// elimination fallback for dimensions up to `opt.dense_limit`.
inline SolveResult solve_general(const CsrMatrix& a, std::span<const double> b, const SolverOptions& opt = {},
                                 std::optional<std::span<const double>> x0 = std::nullopt) {
  const std::size_t n = a.size();
  require_size(b.size(), n, "solve_general rhs");
  if (!(opt.tol > 0.0)) throw SolverError("solver tolerance must be positive", INFINITY, 0);
  SolveResult res;
  const double bnorm = norm2(b);
  if (bnorm == 0.0) {
    res.x.assign(n, 0.0);
    return res;
  }
  const Vector dinv = detail::inverse_diagonal(a);
  res.x = detail::initial_guess(n, x0);
  // one restart from the current iterate recovers most breakdowns
  for (int attempt = 0; attempt < 2; ++attempt) {
    detail::bicgstab(a, b, dinv, bnorm, opt, res);
    res.relative_residual = detail::relative_residual(a, res.x, b, bnorm);
    if (res.relative_residual <= opt.tol) return res;
  }
  if (n <= opt.dense_limit) {
    res.x = solve_dense(a.to_dense(), Vector(b.begin(), b.end()));
    res.dense_fallback = true;
    res.relative_residual = detail::relative_residual(a, res.x, b, bnorm);
    if (res.relative_residual <= opt.tol) return res;
  }
  throw SolverError("BiCGSTAB did not converge (relative residual " + std::to_string(res.relative_residual) + ")",
                    res.relative_residual, res.iterations);
}

}  // namespace pnp

#endif  // PNP_SOLVERS_HPP
