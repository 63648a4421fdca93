#pragma once

// Normalized Gaussian wavepackets
//   phi(x) = (width/pi)^{1/4} exp(-width (x + shift)^2 / 2)
// and their closed-form inner products. The scalar-templated pieces accept
// std::complex so callers can differentiate through them by complex step.

#include <cmath>
#include <complex>
#include <numbers>

#include "qrm/errors.hpp"

namespace qrm {

template <class T>
struct BasicPacket {
  T shift{};
  T width{1};
};

using GaussianPacket = BasicPacket<double>;

namespace detail {

inline double real_part(double v) { return v; }
inline double real_part(const std::complex<double>& v) { return v.real(); }

template <class T>
void require_width(const T& width) {
  if (!(real_part(width) > 0.0)) throw DomainError("packet width must be positive");
}

inline double expm1(double v) { return std::expm1(v); }
inline std::complex<double> expm1(const std::complex<double>& v) {
  const double half = std::sin(0.5 * v.imag());
  return {std::expm1(v.real()) * std::cos(v.imag()) - 2.0 * half * half,
          std::exp(v.real()) * std::sin(v.imag())};
}

}  // namespace detail

template <class T>
T overlap(const BasicPacket<T>& a, const BasicPacket<T>& b) {
  using std::exp;
  using std::pow;
  using std::sqrt;
  detail::require_width(a.width);
  detail::require_width(b.width);
  const T sum = a.width + b.width;
  const T d = a.shift - b.shift;
  return std::numbers::sqrt2 * pow(a.width * b.width, 0.25) / sqrt(sum) *
         exp(-d * d * a.width * b.width / (2.0 * sum));
}

/// 1 - S^2 for S = overlap(a, b), without cancellation when the packets nearly
/// coincide.
template <class T>
T overlap_deficit(const BasicPacket<T>& a, const BasicPacket<T>& b) {
  using std::sqrt;
  const T sum = a.width + b.width;
  const T root_gap = sqrt(a.width) - sqrt(b.width);
  const T amp2 = 2.0 * sqrt(a.width * b.width) / sum;  // prefactor squared
  const T d = a.shift - b.shift;
  // S^2 = amp2 exp(-2B): 1 - S^2 = (1 - amp2) - amp2 expm1(-2B).
  return root_gap * root_gap / sum - amp2 * detail::expm1(-d * d * a.width * b.width / sum);
}

/// Kinetic matrix element <a| p^2/2 |b> (unit oscillator frequency).
template <class T>
T kinetic(const BasicPacket<T>& a, const BasicPacket<T>& b) {
  const T mu = a.width * b.width / (2.0 * (a.width + b.width));
  const T r = a.shift - b.shift;
  return mu * (1.0 - 2.0 * mu * r * r) * overlap(a, b);
}

/// <a| (x - center)^2 |b>.
template <class T>
T quadratic_moment(const BasicPacket<T>& a, const BasicPacket<T>& b, const T& center) {
  const T sum = a.width + b.width;
  const T mean = -(a.width * a.shift + b.width * b.shift) / sum;
  const T off = mean - center;
  return (off * off + 1.0 / sum) * overlap(a, b);
}

/// <a| x |b>.
template <class T>
T linear_moment(const BasicPacket<T>& a, const BasicPacket<T>& b) {
  const T sum = a.width + b.width;
  return -(a.width * a.shift + b.width * b.shift) / sum * overlap(a, b);
}

/// Mirror image phi(-x): the packet with opposite shift.
template <class T>
BasicPacket<T> reflected(const BasicPacket<T>& p) {
  return {-p.shift, p.width};
}

/// Inner products of a packet pair and their parameter derivatives, with
/// s = shift and w = width: left factor differentiated first.
struct PairOverlaps {
  double overlap = 0.0;
  double ds_left = 0.0;      ///< <d_s phi_i | phi_j>
  double ds_right = 0.0;     ///< <phi_i | d_s phi_j>
  double dw_left = 0.0;      ///< <d_w phi_i | phi_j>
  double dw_right = 0.0;     ///< <phi_i | d_w phi_j>
  double ds_ds = 0.0;
  double ds_dw = 0.0;        ///< <d_s phi_i | d_w phi_j>
  double dw_ds = 0.0;        ///< <d_w phi_i | d_s phi_j>
  double dw_dw = 0.0;
};

inline PairOverlaps pair_overlaps(const GaussianPacket& a, const GaussianPacket& b) {
  detail::require_width(a.width);
  detail::require_width(b.width);
  const double wi = a.width;
  const double wj = b.width;
  const double sum = wi + wj;
  const double d = a.shift - b.shift;
  const double d2 = d * d;
  const double fe = std::exp(d2 * wi * wj / (2.0 * sum));
  const double r2 = std::numbers::sqrt2;
  const double qi = std::pow(wi, 0.25);
  const double qj = std::pow(wj, 0.25);

  PairOverlaps o;
  o.overlap = r2 * qi * qj / std::sqrt(sum) / fe;
  const double sdiff = r2 * wi * qi * wj * qj / (std::pow(sum, 1.5) * fe);
  o.ds_left = -sdiff * d;
  o.ds_right = sdiff * d;
  const double wden = -2.0 * r2 * std::pow(sum, 2.5) * fe;
  o.dw_left = qj * (wi * wi + wj * wj * (2.0 * wi * d2 - 1.0)) / (wi / qi * wden);
  o.dw_right = qi * (wj * wj + wi * wi * (2.0 * wj * d2 - 1.0)) / (wj / qj * wden);
  o.ds_ds = r2 * (sum - wi * wj * d2) * wi * qi * wj * qj / (std::pow(sum, 2.5) * fe);
  const double mixed = 2.0 * r2 * std::pow(sum, 3.5) * fe;
  o.ds_dw = (wj * wj + wi * wi * (2.0 * wj * d2 - 5.0) - 4.0 * wi * wj) * d * wi * qi * qj / mixed;
  o.dw_ds = -(wi * wi + wj * wj * (2.0 * wi * d2 - 5.0) - 4.0 * wi * wj) * d * wj * qj * qi / mixed;
  o.dw_dw = (4.0 * std::pow(wi * wj, 3) * d2 * d2 +
             sum * (2.0 * wi * wj * d2 - sum) * (wi * wi + wj * wj - 10.0 * wi * wj)) /
            (8.0 * r2 * std::pow(sum, 4.5) * std::pow(wi * wj, 0.75) * fe);
  return o;
}

}  // namespace qrm
