#pragma once

// Normalized harmonic-oscillator eigenfunctions h_n(x) (unit frequency):
//   h_0 = pi^{-1/4} exp(-x^2/2)
//   h_{n+1} = x sqrt(2/(n+1)) h_n - sqrt(n/(n+1)) h_{n-1}
// The recurrence runs on rescaled values with a separate log-magnitude so that
// large |x| does not underflow h_0 before the high orders become significant.

#include <cmath>
#include <numbers>
#include <span>
#include <vector>

namespace qrm {

namespace detail {

inline constexpr double kRescaleAbove = 1e150;

}  // namespace detail

/// h_0(x) ... h_nmax(x). Entries below the double range come back as 0.
inline std::vector<double> oscillator_functions(double x, int nmax) {
  std::vector<double> out(static_cast<std::size_t>(nmax) + 1, 0.0);
  double log_scale = -0.5 * x * x - 0.25 * std::log(std::numbers::pi);
  double prev = 0.0;
  double cur = 1.0;
  out[0] = std::exp(log_scale);
  for (int n = 0; n < nmax; ++n) {
    const double next = x * std::sqrt(2.0 / (n + 1)) * cur - std::sqrt(static_cast<double>(n) / (n + 1)) * prev;
    prev = cur;
    cur = next;
    if (std::abs(cur) > detail::kRescaleAbove) {
      prev /= detail::kRescaleAbove;
      cur /= detail::kRescaleAbove;
      log_scale += std::log(detail::kRescaleAbove);
    }
    out[static_cast<std::size_t>(n) + 1] = cur * std::exp(log_scale);
  }
  return out;
}

/// sum_n c_n h_n(x). Returns 0 only when the true value is below the double range.
inline double oscillator_series(std::span<const double> coeffs, double x) {
  if (coeffs.empty()) return 0.0;
  double log_scale = -0.5 * x * x - 0.25 * std::log(std::numbers::pi);
  double prev = 0.0;
  double cur = 1.0;
  double sum = coeffs[0];
  for (std::size_t n = 0; n + 1 < coeffs.size(); ++n) {
    const double dn = static_cast<double>(n);
    const double next = x * std::sqrt(2.0 / (dn + 1.0)) * cur - std::sqrt(dn / (dn + 1.0)) * prev;
    prev = cur;
    cur = next;
    if (std::abs(cur) > detail::kRescaleAbove) {
      prev /= detail::kRescaleAbove;
      cur /= detail::kRescaleAbove;
      sum /= detail::kRescaleAbove;
      log_scale += std::log(detail::kRescaleAbove);
    }
    sum += coeffs[n + 1] * cur;
  }
  if (sum == 0.0) return 0.0;
  return std::copysign(std::exp(log_scale + std::log(std::abs(sum))), sum);
}

}  // namespace qrm
