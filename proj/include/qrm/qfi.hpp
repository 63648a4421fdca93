#pragma once

// Quantum Fisher information of the ground state with respect to the coupling,
//   F = 4 [<psi'|psi'> - <psi'|psi>^2],
// from exact states (finite differences) or from the two-polaron ansatz
// (closed-form overlaps). Derivatives are taken in gbar = g / gc0 unless a
// name says otherwise; F_g = F_gbar / gc0^2.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <boost/math/tools/minima.hpp>
#include <Eigen/Dense>

#include "qrm/critical.hpp"
#include "qrm/ed_solver.hpp"
#include "qrm/errors.hpp"
#include "qrm/model.hpp"
#include "qrm/polaron.hpp"

namespace qrm {

enum class QfiMethod { Ed, PpFull, PpSimplified };

inline std::string_view to_string(QfiMethod m) {
  switch (m) {
    case QfiMethod::Ed: return "ED";
    case QfiMethod::PpFull: return "PP-full";
    case QfiMethod::PpSimplified: return "PP-simplified";
  }
  return "unknown";
}

struct QfiSample {
  double coupling = 0.0;
  double relative = 0.0;
  double qfi_coupling = 0.0;  ///< F with respect to g
  double qfi_relative = 0.0;  ///< F with respect to gbar
  QfiMethod method = QfiMethod::Ed;
  double first_derivative_term = 0.0;  ///< <psi'|psi>, gbar units
  double step = std::numeric_limits<double>::quiet_NaN();  ///< relative step (ED)
  double richardson_ratio = std::numeric_limits<double>::quiet_NaN();
  bool near_degenerate = false;
  int cutoff = 0;
};

struct QfiOptions {
  double step = 1e-4;  ///< finite-difference step in units of gc0
  int max_halvings = 4;
  SolverOptions solver{};
};

namespace detail {

inline QfiSample make_sample(const ModelParams& params, double qfi_relative, double first,
                             QfiMethod method) {
  const double base = params.gc0();
  QfiSample s;
  s.coupling = params.coupling();
  s.relative = params.coupling() / base;
  s.qfi_relative = qfi_relative;
  s.qfi_coupling = qfi_relative / (base * base);
  s.first_derivative_term = first;
  s.method = method;
  return s;
}

/// Photon cutoff shared by every stencil point: the largest adaptive cutoff
/// among the extreme couplings.
inline int common_cutoff(const ModelParams& params, double h, const SolverOptions& opt) {
  int n = 0;
  for (double c : {params.coupling() - h, params.coupling(), params.coupling() + h})
    n = std::max(n, ground_state(params.with_coupling(std::abs(c)), opt).second.final_cutoff);
  return n;
}

inline constexpr double kMinAlignment = 0.5;

struct Stencil5 {
  Eigen::VectorXd center;
  Eigen::VectorXd d_wide;    ///< (v(+h) - v(-h)) / (2h)
  Eigen::VectorXd d_narrow;  ///< (v(+h/2) - v(-h/2)) / h
  Eigen::VectorXd d_five;    ///< fourth-order combination
};

inline Stencil5 differentiate(const ModelParams& params, double h, int cutoff) {
  auto solve = [&](double c) {
    return solve_sector(params.frequency(), params.splitting(), c, cutoff).vector;
  };
  const double g = params.coupling();
  Stencil5 s;
  s.center = solve(g);
  std::array<Eigen::VectorXd, 4> v;
  const std::array<double, 4> offsets{-h, -0.5 * h, 0.5 * h, h};
  for (std::size_t k = 0; k < 4; ++k) {
    v[k] = solve(g + offsets[k]);
    const double ov = v[k].dot(s.center);
    if (std::abs(ov) < kMinAlignment)
      throw StepTooLargeError("neighbouring ground states overlap only " + std::to_string(ov));
    if (ov < 0.0) v[k] = -v[k];
  }
  s.d_wide = (v[3] - v[0]) / (2.0 * h);
  s.d_narrow = (v[2] - v[1]) / h;
  s.d_five = (8.0 * (v[2] - v[1]) - (v[3] - v[0])) / (6.0 * h);
  return s;
}

inline double fisher(const Eigen::VectorXd& d, const Eigen::VectorXd& v) {
  const double p = d.dot(v);
  return 4.0 * (d.squaredNorm() - p * p);
}

// Differences below this fraction of F are eigensolver noise, not truncation.
inline constexpr double kRichardsonFloor = 1e-9;

}  // namespace detail

/// QFI from exact ground states by gauge-aligned finite differences.
inline QfiSample qfi_ed(const ModelParams& params, const QfiOptions& opt = {}) {
  if (!(opt.step > 0.0)) throw DomainError("finite-difference step must be positive");
  const double base = params.gc0();
  if (base == 0.0) throw DomainError("QFI in relative coupling needs a nonzero splitting");
  double h = opt.step * base;
  const int cutoff = detail::common_cutoff(params, h, opt.solver);
  double ratio = std::numeric_limits<double>::quiet_NaN();
  detail::Stencil5 s;
  double f5 = 0.0;
  for (int attempt = 0;; ++attempt) {
    s = detail::differentiate(params, h, cutoff);
    f5 = detail::fisher(s.d_five, s.center);
    const double e_wide = detail::fisher(s.d_wide, s.center) - f5;
    const double e_narrow = detail::fisher(s.d_narrow, s.center) - f5;
    const bool resolved = std::abs(e_wide) > detail::kRichardsonFloor * std::max(f5, 1e-300);
    ratio = e_narrow != 0.0 ? e_wide / e_narrow : std::numeric_limits<double>::quiet_NaN();
    const bool quadratic = ratio > 2.0 && ratio < 6.0;
    if (!resolved || quadratic || attempt >= opt.max_halvings) break;
    h *= 0.5;
  }
  // Convert d/dg to d/dgbar.
  const double first = s.d_five.dot(s.center) * base;
  QfiSample out = detail::make_sample(params, f5 * base * base, first, QfiMethod::Ed);
  out.step = h / base;
  out.richardson_ratio = ratio;
  out.cutoff = cutoff;
  out.near_degenerate = excitation_gap(params, cutoff) < 1e-8 * params.splitting();
  return out;
}

/// |<psi(g)|psi(g + delta)>| at a common cutoff.
inline double fidelity(const ModelParams& params, double delta, const SolverOptions& opt = {}) {
  const int cutoff = detail::common_cutoff(params, std::abs(delta), opt);
  const auto a = solve_sector(params.frequency(), params.splitting(), params.coupling(), cutoff);
  const auto b =
      solve_sector(params.frequency(), params.splitting(), params.coupling() + delta, cutoff);
  return std::abs(a.vector.dot(b.vector));
}

/// Fidelity susceptibility with respect to g: F_g / 4.
inline double fidelity_susceptibility(const ModelParams& params, const QfiOptions& opt = {}) {
  return qfi_ed(params, opt).qfi_coupling / 4.0;
}

/// <psi'|psi> and <psi'|psi'> of one spin component of the ansatz, given how
/// its parameters move with gbar.
struct PolaronDerivativeTerms {
  double first = 0.0;
  double second = 0.0;
};

inline PolaronDerivativeTerms polaron_derivative_terms(const PolaronAnsatz& ansatz,
                                                       const ParameterFlow& flow,
                                                       const ModelParams& params) {
  const auto t = derivative_overlaps(ansatz, params);
  const auto w = ansatz.weights();
  PolaronDerivativeTerms out;
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 2; ++j) {
      const PairOverlaps& o = t(i, j);
      const double left = o.ds_left * flow.dshift[i] + o.dw_left * flow.dxi[i];    // <phi_i'|phi_j>
      const double right = o.ds_right * flow.dshift[j] + o.dw_right * flow.dxi[j];  // <phi_i|phi_j'>
      const double both = o.ds_ds * flow.dshift[i] * flow.dshift[j] +
                          o.ds_dw * flow.dshift[i] * flow.dxi[j] +
                          o.dw_ds * flow.dxi[i] * flow.dshift[j] + o.dw_dw * flow.dxi[i] * flow.dxi[j];
      out.first += w[i] * w[j] * left + flow.dweight[i] * w[j] * o.overlap;
      out.second += w[i] * w[j] * both + flow.dweight[i] * flow.dweight[j] * o.overlap +
                    w[i] * flow.dweight[j] * left + flow.dweight[i] * w[j] * right;
    }
  }
  return out;
}

/// QFI of an ansatz from explicit parameter flows. Both spin components carry
/// the same derivative terms (parity), so one component suffices.
inline QfiSample qfi_pp(const PolaronAnsatz& ansatz, const ParameterFlow& flow,
                        const ModelParams& params) {
  const auto d = polaron_derivative_terms(ansatz, flow, params);
  return detail::make_sample(params, 4.0 * (d.second - d.first * d.first), d.first,
                             QfiMethod::PpFull);
}

inline QfiSample qfi_pp_full(const PolaronSweep& sweep, std::size_t index) {
  return qfi_pp(sweep.states.at(index), parameter_derivatives(sweep, index), sweep.params_at(index));
}

/// Leading-order QFI of the main polaron, (W/w) v^2 xi with v = d(zeta gbar)/dgbar,
/// also written as the kinetic energy m v^2 / 2 of mass m = 2 (W/w) xi.
struct SimplifiedQfi {
  QfiSample sample;
  double mass = 0.0;
  double velocity = 0.0;
  double kinetic_form = 0.0;
};

inline SimplifiedQfi simplified_qfi(double frequency, double splitting, double gbar, double zeta,
                                    double dzeta, double xi) {
  SimplifiedQfi out;
  const double r = splitting / frequency;
  out.velocity = dzeta * gbar + zeta;
  out.mass = 2.0 * r * xi;
  out.kinetic_form = 0.5 * out.mass * out.velocity * out.velocity;
  const double f = r * out.velocity * out.velocity * xi;
  out.sample = detail::make_sample(ModelParams::from_relative(frequency, splitting, gbar), f, 0.0,
                                   QfiMethod::PpSimplified);
  return out;
}

inline SimplifiedQfi qfi_pp_simplified(const PolaronSweep& sweep, std::size_t index) {
  const auto flow = parameter_derivatives(sweep, index);
  const auto& s = sweep.states[index];
  return simplified_qfi(sweep.frequency, sweep.splitting, sweep.gbar[index], s.zeta_alpha,
                        flow.dzeta[0], s.xi_alpha);
}

/// Five-point continuation centred on gbar (index 2), enough for fourth-order
/// parameter derivatives.
inline PolaronSweep local_sweep(double frequency, double splitting, double gbar, double delta,
                                const OptimizeOptions& opt = {}) {
  const std::vector<double> grid{gbar - 2.0 * delta, gbar - delta, gbar, gbar + delta,
                                 gbar + 2.0 * delta};
  return continuation_sweep(frequency, splitting, grid, opt);
}

inline constexpr double kLocalSweepStep = 1e-3;

inline QfiSample qfi_pp_at(double frequency, double splitting, double gbar,
                           double delta = kLocalSweepStep) {
  return qfi_pp_full(local_sweep(frequency, splitting, gbar, delta), 2);
}

enum class PeakMethod { Ed, PpFull };

struct PeakOptions {
  double gbar_min = 0.5;
  double gbar_max = 3.0;
  int scan_points = 41;
  int refine_bits = 24;
  QfiOptions qfi{};
};

struct PeakEstimate {
  double coupling = 0.0;
  double relative = 0.0;
  double qfi_max = 0.0;  ///< F with respect to gbar at the peak
  double bracket_low = 0.0;
  double bracket_high = 0.0;
  QfiMethod method = QfiMethod::Ed;
  bool flat = false;  ///< no interior maximum; value is the scan argmax
  std::vector<double> scan_gbar;
  std::vector<double> scan_qfi;

  double bracket_width() const { return bracket_high - bracket_low; }
};

/// QFI (gbar units) as a function of gbar for a peak method.
inline std::function<double(double)> qfi_curve(double frequency, double splitting,
                                               PeakMethod method, const QfiOptions& opt = {}) {
  if (method == PeakMethod::Ed) {
    return [=](double gbar) {
      return qfi_ed(ModelParams::from_relative(frequency, splitting, gbar), opt).qfi_relative;
    };
  }
  return [=](double gbar) { return qfi_pp_at(frequency, splitting, gbar).qfi_relative; };
}

/// Coarse scan, then bounded one-dimensional refinement inside the bracket.
inline PeakEstimate find_peak(double frequency, double splitting, PeakMethod method,
                              const PeakOptions& opt = {}) {
  if (!(opt.gbar_max > opt.gbar_min) || opt.gbar_min <= 0.0 || opt.scan_points < 3)
    throw DomainError("peak scan range must be ascending, positive, with at least 3 points");
  const auto f = qfi_curve(frequency, splitting, method, opt.qfi);
  PeakEstimate est;
  est.method = method == PeakMethod::Ed ? QfiMethod::Ed : QfiMethod::PpFull;
  const double step = (opt.gbar_max - opt.gbar_min) / (opt.scan_points - 1);
  for (int k = 0; k < opt.scan_points; ++k) {
    est.scan_gbar.push_back(opt.gbar_min + k * step);
    est.scan_qfi.push_back(f(est.scan_gbar.back()));
  }
  const auto kmax = static_cast<std::size_t>(
      std::max_element(est.scan_qfi.begin(), est.scan_qfi.end()) - est.scan_qfi.begin());
  const double base = 0.5 * std::sqrt(frequency * splitting);
  if (kmax == 0 || kmax + 1 == est.scan_qfi.size()) {
    est.flat = true;
    est.relative = est.scan_gbar[kmax];
    est.qfi_max = est.scan_qfi[kmax];
    est.bracket_low = est.bracket_high = est.relative;
    est.coupling = est.relative * base;
    return est;
  }
  est.bracket_low = est.scan_gbar[kmax - 1];
  est.bracket_high = est.scan_gbar[kmax + 1];
  std::uintmax_t iters = 200;
  const auto [x, negf] = boost::math::tools::brent_find_minima(
      [&](double g) { return -f(g); }, est.bracket_low, est.bracket_high, opt.refine_bits, iters);
  est.relative = x;
  est.qfi_max = -negf;
  if (est.qfi_max < est.scan_qfi[kmax]) {
    est.relative = est.scan_gbar[kmax];
    est.qfi_max = est.scan_qfi[kmax];
  }
  est.coupling = est.relative * base;
  return est;
}

/// Main-polaron kinematics x = zeta gbar along a sweep: velocity, acceleration,
/// and the crossing form 2 zeta' / (-zeta'') of the a = 0 condition.
struct KinematicPoint {
  double gbar = 0.0;
  double velocity = 0.0;
  double acceleration = 0.0;
  double crossing = 0.0;
};

inline std::vector<KinematicPoint> polaron_kinematics(const PolaronSweep& sweep) {
  std::vector<KinematicPoint> out;
  for (std::size_t i = 1; i + 1 < sweep.states.size(); ++i) {
    ParameterFlow flow;
    try {
      flow = parameter_derivatives(sweep, i);
    } catch (const DerivativeInvalidError&) {
      continue;
    }
    const double gbar = sweep.gbar[i];
    const double z = sweep.states[i].zeta_alpha;
    KinematicPoint p;
    p.gbar = gbar;
    p.velocity = flow.dzeta[0] * gbar + z;
    p.acceleration = flow.d2zeta[0] * gbar + 2.0 * flow.dzeta[0];
    p.crossing = flow.d2zeta[0] != 0.0 ? -2.0 * flow.dzeta[0] / flow.d2zeta[0]
                                       : std::numeric_limits<double>::infinity();
    out.push_back(p);
  }
  return out;
}

struct AccelerationRoot {
  CriticalEstimate estimate;
  double crossing = 0.0;  ///< root of 2 zeta'/(-zeta'') = gbar in the same bracket
  double velocity = 0.0;
};

/// Root of the main-polaron acceleration d^2(zeta gbar)/dgbar^2 where it turns
/// from positive to negative; among several, the one of largest velocity.
inline AccelerationRoot acceleration_condition(const PolaronSweep& sweep) {
  const auto k = polaron_kinematics(sweep);
  std::optional<AccelerationRoot> best;
  for (std::size_t i = 1; i < k.size(); ++i) {
    const auto& a = k[i - 1];
    const auto& b = k[i];
    if (!(a.acceleration > 0.0 && b.acceleration <= 0.0)) continue;
    const double t = a.acceleration / (a.acceleration - b.acceleration);
    AccelerationRoot r;
    const double gbar = a.gbar + t * (b.gbar - a.gbar);
    r.velocity = a.velocity + t * (b.velocity - a.velocity);
    // Same bracket, crossing form: zero of 2 zeta'/(-zeta'') - gbar.
    const double ca = a.crossing - a.gbar;
    const double cb = b.crossing - b.gbar;
    r.crossing = (ca != cb && std::isfinite(ca) && std::isfinite(cb))
                     ? a.gbar + ca / (ca - cb) * (b.gbar - a.gbar)
                     : gbar;
    const double base = 0.5 * std::sqrt(sweep.frequency * sweep.splitting);
    r.estimate = {gbar * base, gbar, CouplingMethod::AccelerationCrossing,
                  sweep.frequency / sweep.splitting};
    if (!best || r.velocity > best->velocity) best = r;
  }
  if (!best) throw NoSignChangeError("polaron acceleration has no +/- sign change on the grid");
  return *best;
}

}  // namespace qrm
