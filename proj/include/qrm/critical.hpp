#pragma once

// Closed-form transition couplings, their small-ratio series, and least-squares
// fits of located transition points in powers of r = w / W.

#include <cmath>
#include <complex>
#include <functional>
#include <numbers>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <boost/math/tools/roots.hpp>
#include <Eigen/Dense>

#include "qrm/errors.hpp"

namespace qrm {

enum class CouplingMethod { Gc0, Gc1, GcXi, Gc2, Gc2Fitting, QfiPeak, AccelerationCrossing };

inline std::string_view to_string(CouplingMethod m) {
  switch (m) {
    case CouplingMethod::Gc0: return "gc0";
    case CouplingMethod::Gc1: return "gc1";
    case CouplingMethod::GcXi: return "gcxi";
    case CouplingMethod::Gc2: return "gc2";
    case CouplingMethod::Gc2Fitting: return "gc2-fitting";
    case CouplingMethod::QfiPeak: return "qfi-peak";
    case CouplingMethod::AccelerationCrossing: return "a=0";
  }
  return "unknown";
}

struct CriticalEstimate {
  double value = 0.0;  ///< coupling in energy units
  double ratio = 0.0;  ///< value / gc0
  CouplingMethod method = CouplingMethod::Gc0;
  double frequency_ratio = 0.0;
};

namespace detail {

inline void require_frequencies(double frequency, double splitting) {
  if (!(frequency > 0.0) || !(splitting > 0.0) || !std::isfinite(frequency) || !std::isfinite(splitting))
    throw DomainError("frequencies must be positive and finite");
}

inline CriticalEstimate make_estimate(double frequency, double splitting, double ratio,
                                      CouplingMethod m) {
  const double base = 0.5 * std::sqrt(frequency * splitting);
  return {ratio * base, ratio, m, frequency / splitting};
}

}  // namespace detail

inline CriticalEstimate gc0(double frequency, double splitting) {
  detail::require_frequencies(frequency, splitting);
  return detail::make_estimate(frequency, splitting, 1.0, CouplingMethod::Gc0);
}

/// gc1 / gc0 as an analytic function of r: sqrt(4 r + sqrt(1 + 16 r^2)).
template <class T>
T gc1_ratio(T r) {
  using std::sqrt;
  return sqrt(4.0 * r + sqrt(1.0 + 16.0 * r * r));
}

/// sqrt(w^2 + sqrt(w^4 + gc0^4)).
inline CriticalEstimate gc1(double frequency, double splitting) {
  detail::require_frequencies(frequency, splitting);
  return detail::make_estimate(frequency, splitting, gc1_ratio(frequency / splitting),
                               CouplingMethod::Gc1);
}

inline constexpr double kDefaultSeparation = 1.9;

/// Residual of the packet-separation condition
///   zeta(g) g~ = d_c / sqrt(xi),  zeta = sqrt(1 - gc0^4/g^4),
/// with xi = zeta when `renormalized` and xi = 1 otherwise, relative to its
/// right-hand side.
inline double separation_residual(double frequency, double splitting, double coupling,
                                  double separation, bool renormalized) {
  const double base4 = std::pow(0.5 * std::sqrt(frequency * splitting), 4);
  const double zeta = std::sqrt(1.0 - base4 / std::pow(coupling, 4));
  const double lhs = zeta * std::numbers::sqrt2 * coupling / frequency;
  const double rhs = renormalized ? separation / std::sqrt(zeta) : separation;
  return lhs / rhs - 1.0;
}

/// Closed-form root of the separation condition with width renormalization.
inline CriticalEstimate gc_xi(double frequency, double splitting,
                              double separation = kDefaultSeparation) {
  detail::require_frequencies(frequency, splitting);
  if (!(separation > 0.0) || !std::isfinite(separation))
    throw DomainError("separation distance must be positive");
  const double base = 0.5 * std::sqrt(frequency * splitting);
  const double wc = separation * frequency;
  const double gt = base / wc;
  const double gt4 = std::pow(gt, 4);
  const double f = std::pow(1.0 + 36.0 * gt4 + 216.0 * gt4 * gt4 +
                                24.0 * std::sqrt(3.0) * std::pow(gt, 6) * std::sqrt(27.0 * gt4 + 1.0),
                            1.0 / 12.0);
  const double f4 = std::pow(f, 4);
  const double value = std::pow(std::pow(base, 4) + std::pow(wc, 4) / 12.0 *
                                                        (f4 + 1.0 + 1.0 / f4 + 24.0 * gt4 / f4),
                                0.25);
  const double residual = separation_residual(frequency, splitting, value, separation, true);
  if (!(std::abs(residual) < 1e-10))
    throw NumericalBranchError("separation condition residual " + std::to_string(residual));
  return {value, value / base, CouplingMethod::GcXi, frequency / splitting};
}

/// Bracketed numerical root of the separation condition (either width model).
inline CriticalEstimate solve_separation(double frequency, double splitting, double separation,
                                         bool renormalized) {
  detail::require_frequencies(frequency, splitting);
  const double base = 0.5 * std::sqrt(frequency * splitting);
  auto f = [&](double ratio) {
    return separation_residual(frequency, splitting, ratio * base, separation, renormalized);
  };
  double hi = 2.0;
  while (f(hi) < 0.0) hi *= 2.0;
  std::uintmax_t iters = 200;
  auto [a, b] = boost::math::tools::toms748_solve(
      f, 1.0 + 1e-300, hi, -1.0, f(hi), boost::math::tools::eps_tolerance<double>(52), iters);
  const double ratio = 0.5 * (a + b);
  return {ratio * base, ratio, renormalized ? CouplingMethod::GcXi : CouplingMethod::Gc1,
          frequency / splitting};
}

enum class Gc2Variant { AlphaFs, FourThirds, Fitted };

inline Gc2Variant parse_gc2_variant(std::string_view name) {
  if (name == "alphaFS") return Gc2Variant::AlphaFs;
  if (name == "fourThirds") return Gc2Variant::FourThirds;
  if (name == "fitted") return Gc2Variant::Fitted;
  throw DomainError("unknown gc2 variant '" + std::string(name) + "'");
}

inline std::string_view to_string(Gc2Variant v) {
  switch (v) {
    case Gc2Variant::AlphaFs: return "alphaFS";
    case Gc2Variant::FourThirds: return "fourThirds";
    case Gc2Variant::Fitted: return "fitted";
  }
  return "unknown";
}

/// Coefficients of r^{2n/3}, n = 1, 2, ...
inline std::vector<double> gc2_coefficients(Gc2Variant v) {
  switch (v) {
    case Gc2Variant::AlphaFs: return {1.37, -0.125};
    case Gc2Variant::FourThirds: return {4.0 / 3.0, -3.0 / 40.0};
    case Gc2Variant::Fitted: return {1.3715, -0.1311, 0.0184};
  }
  throw DomainError("unknown gc2 variant");
}

inline double fractional_series(std::span<const double> coefficients, double r) {
  const double s = std::cbrt(r * r);
  double term = 1.0;
  double sum = 1.0;
  for (double c : coefficients) {
    term *= s;
    sum += c * term;
  }
  return sum;
}

inline CriticalEstimate gc2(double frequency, double splitting,
                            Gc2Variant variant = Gc2Variant::AlphaFs) {
  detail::require_frequencies(frequency, splitting);
  const auto c = gc2_coefficients(variant);
  return detail::make_estimate(frequency, splitting, fractional_series(c, frequency / splitting),
                               variant == Gc2Variant::Fitted ? CouplingMethod::Gc2Fitting
                                                             : CouplingMethod::Gc2);
}

/// First `count` Taylor coefficients (orders 1..count) of an analytic f at 0,
/// by the trapezoid rule on the circle |z| = radius.
inline std::vector<double> taylor_coefficients(
    const std::function<std::complex<double>(std::complex<double>)>& f, double radius, int count,
    int nodes = 128) {
  std::vector<std::complex<double>> values(static_cast<std::size_t>(nodes));
  for (int k = 0; k < nodes; ++k)
    values[k] = f(std::polar(radius, 2.0 * std::numbers::pi * k / nodes));
  std::vector<double> out;
  for (int n = 1; n <= count; ++n) {
    std::complex<double> s = 0.0;
    for (int k = 0; k < nodes; ++k) s += values[k] * std::polar(1.0, -2.0 * std::numbers::pi * n * k / nodes);
    out.push_back((s / static_cast<double>(nodes)).real() / std::pow(radius, n));
  }
  return out;
}

enum class FitBasis { FractionalPowers, IntegerPowers };

inline std::string_view to_string(FitBasis b) {
  return b == FitBasis::FractionalPowers ? "fractional-2/3-powers" : "integer-powers";
}

/// One located transition: r = w / W and the relative shift g_c / gc0 - 1.
struct FitPoint {
  double ratio = 0.0;
  double shift = 0.0;
};

struct FitResult {
  FitBasis basis = FitBasis::FractionalPowers;
  int order = 0;
  std::vector<double> coefficients;
  double residual_sum_squares = 0.0;
  std::vector<FitPoint> data;

  double evaluate(double r) const {
    const double s = basis == FitBasis::FractionalPowers ? std::cbrt(r * r) : r;
    double term = 1.0;
    double sum = 0.0;
    for (double c : coefficients) {
      term *= s;
      sum += c * term;
    }
    return sum;
  }
};

namespace detail {

inline FitResult least_squares(std::span<const FitPoint> data, int order, FitBasis basis) {
  if (order < 1) throw DomainError("fit order must be at least 1");
  if (data.size() < static_cast<std::size_t>(order) + 1)
    throw DomainError("need at least order + 1 data points");
  const auto n = static_cast<Eigen::Index>(data.size());
  Eigen::MatrixXd a(n, order);
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double r = data[i].ratio;
    if (!(r > 0.0) || !std::isfinite(data[i].shift)) throw DomainError("fit data must have r > 0");
    const double s = basis == FitBasis::FractionalPowers ? std::cbrt(r * r) : r;
    double term = 1.0;
    for (int k = 0; k < order; ++k) {
      term *= s;
      a(i, k) = term;
    }
    y[i] = data[i].shift;
  }
  // Column scaling keeps the rank decision independent of the magnitude of r.
  const Eigen::VectorXd scale = a.colwise().norm().transpose();
  for (int k = 0; k < order; ++k)
    if (scale[k] == 0.0) throw RankDeficientError("design matrix has a zero column");
  const Eigen::MatrixXd as = a * scale.cwiseInverse().asDiagonal();
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(as);
  qr.setThreshold(1e-12);
  if (qr.rank() < order) throw RankDeficientError("design matrix is rank deficient");
  const Eigen::VectorXd c = qr.solve(y).cwiseQuotient(scale);
  FitResult out;
  out.basis = basis;
  out.order = order;
  out.coefficients.assign(c.data(), c.data() + c.size());
  out.residual_sum_squares = (a * c - y).squaredNorm();
  out.data.assign(data.begin(), data.end());
  return out;
}

}  // namespace detail

/// Least squares on {r^{2n/3}}, n = 1..order.
inline FitResult fit_fractional(std::span<const FitPoint> data, int order) {
  return detail::least_squares(data, order, FitBasis::FractionalPowers);
}

/// Least squares on {r^n}, n = 1..order.
inline FitResult fit_fourier(std::span<const FitPoint> data, int order) {
  return detail::least_squares(data, order, FitBasis::IntegerPowers);
}

/// Leading coefficients of ratio(r) - 1 in powers of r^{2/3}, read off a
/// least-squares fit on a log grid near r = 0 with two spare orders.
inline std::vector<double> fractional_expansion(const std::function<double(double)>& ratio,
                                                int count, double r_min = 1e-6,
                                                double r_max = 1e-3, int points = 40) {
  std::vector<FitPoint> data;
  for (int i = 0; i < points; ++i) {
    const double r = r_min * std::pow(r_max / r_min, static_cast<double>(i) / (points - 1));
    data.push_back({r, ratio(r) - 1.0});
  }
  auto c = fit_fractional(data, count + 2).coefficients;
  c.resize(static_cast<std::size_t>(count));
  return c;
}

}  // namespace qrm
