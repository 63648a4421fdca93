#pragma once

// Extremal eigenpairs of real symmetric tridiagonal matrices: Sturm-sequence
// bisection for eigenvalues, inverse iteration with a partially pivoted LU
// for eigenvectors. Cost is O(N) per eigenpair.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

#include <Eigen/Dense>

#include "qrm/errors.hpp"

namespace qrm::linalg {

struct SymTridiagonal {
  std::vector<double> diag;  ///< size n
  std::vector<double> off;   ///< size n - 1, off[i] couples i and i + 1

  std::size_t size() const noexcept { return diag.size(); }

  double norm_bound() const {
    double m = 0.0;
    for (std::size_t i = 0; i < diag.size(); ++i) {
      double r = std::abs(diag[i]);
      if (i > 0) r += std::abs(off[i - 1]);
      if (i + 1 < diag.size()) r += std::abs(off[i]);
      m = std::max(m, r);
    }
    return m;
  }

  Eigen::VectorXd apply(const Eigen::VectorXd& x) const {
    const auto n = static_cast<Eigen::Index>(size());
    Eigen::VectorXd y(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      double v = diag[i] * x[i];
      if (i > 0) v += off[i - 1] * x[i - 1];
      if (i + 1 < n) v += off[i] * x[i + 1];
      y[i] = v;
    }
    return y;
  }
};

namespace detail {

inline double pivot_floor(const SymTridiagonal& t) {
  double emax = 1.0;
  for (double e : t.off) emax = std::max(emax, e * e);
  return std::numeric_limits<double>::min() * emax;
}

}  // namespace detail

/// Number of eigenvalues strictly below x.
inline std::size_t count_below(const SymTridiagonal& t, double x) {
  const double floor = detail::pivot_floor(t);
  std::size_t count = 0;
  double q = t.diag[0] - x;
  if (std::abs(q) < floor) q = -floor;
  if (q < 0.0) ++count;
  for (std::size_t i = 1; i < t.size(); ++i) {
    q = t.diag[i] - x - t.off[i - 1] * t.off[i - 1] / q;
    if (std::abs(q) < floor) q = -floor;
    if (q < 0.0) ++count;
  }
  return count;
}

/// k-th smallest eigenvalue (0-based), bisected to full double precision.
inline double eigenvalue(const SymTridiagonal& t, std::size_t k) {
  if (t.size() == 0 || k >= t.size()) throw DomainError("eigenvalue index out of range");
  double lo = std::numeric_limits<double>::max();
  double hi = std::numeric_limits<double>::lowest();
  for (std::size_t i = 0; i < t.size(); ++i) {
    double r = 0.0;
    if (i > 0) r += std::abs(t.off[i - 1]);
    if (i + 1 < t.size()) r += std::abs(t.off[i]);
    lo = std::min(lo, t.diag[i] - r);
    hi = std::max(hi, t.diag[i] + r);
  }
  const double eps = std::numeric_limits<double>::epsilon();
  const double slack = 2.0 * eps * std::max(std::abs(lo), std::abs(hi)) + detail::pivot_floor(t);
  lo -= slack;
  hi += slack;
  for (int iter = 0; iter < 256; ++iter) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (hi - lo <= 2.0 * eps * std::max(std::abs(lo), std::abs(hi))) break;
    if (count_below(t, mid) > k)
      hi = mid;
    else
      lo = mid;
  }
  return 0.5 * (lo + hi);
}

/// Unit eigenvector for an (accurately known) eigenvalue by inverse iteration.
inline Eigen::VectorXd eigenvector(const SymTridiagonal& t, double lambda, int iterations = 4) {
  const std::size_t n = t.size();
  if (n == 0) throw DomainError("empty matrix");
  Eigen::VectorXd x(static_cast<Eigen::Index>(n));
  if (n == 1) {
    x[0] = 1.0;
    return x;
  }

  // LU with partial pivoting of (T - lambda I), LAPACK gttrf layout.
  std::vector<double> d(n), dl(t.off), du(t.off), du2(n, 0.0);
  std::vector<std::size_t> piv(n);
  for (std::size_t i = 0; i < n; ++i) {
    d[i] = t.diag[i] - lambda;
    piv[i] = i;
  }
  for (std::size_t i = 0; i + 1 < n; ++i) {
    if (std::abs(d[i]) >= std::abs(dl[i])) {
      if (d[i] != 0.0) {
        const double fact = dl[i] / d[i];
        dl[i] = fact;
        d[i + 1] -= fact * du[i];
      }
    } else {
      const double fact = d[i] / dl[i];
      d[i] = dl[i];
      dl[i] = fact;
      const double tmp = du[i];
      du[i] = d[i + 1];
      d[i + 1] = tmp - fact * d[i + 1];
      if (i + 2 < n) {
        du2[i] = du[i + 1];
        du[i + 1] = -fact * du[i + 1];
      }
      piv[i] = i + 1;
    }
  }
  const double tiny = std::numeric_limits<double>::epsilon() * std::max(t.norm_bound(), 1e-300);
  for (double& v : d)
    if (std::abs(v) < tiny) v = v < 0.0 ? -tiny : tiny;

  for (std::size_t i = 0; i < n; ++i)
    x[static_cast<Eigen::Index>(i)] = 1.0 + 0.25 * std::sin(0.7 * static_cast<double>(i) + 0.3);
  x.normalize();

  for (int it = 0; it < iterations; ++it) {
    for (std::size_t i = 0; i + 1 < n; ++i) {
      const std::size_t ip = piv[i];
      const double tmp = x[2 * i + 1 - ip] - dl[i] * x[ip];
      x[i] = x[ip];
      x[i + 1] = tmp;
    }
    x[n - 1] /= d[n - 1];
    x[n - 2] = (x[n - 2] - du[n - 2] * x[n - 1]) / d[n - 2];
    for (std::size_t k = n - 2; k-- > 0;)
      x[k] = (x[k] - du[k] * x[k + 1] - du2[k] * x[k + 2]) / d[k];
    x.normalize();
  }
  return x;
}

}  // namespace qrm::linalg
