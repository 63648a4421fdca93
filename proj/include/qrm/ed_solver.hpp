#pragma once

// Exact diagonalization of the truncated model with an adaptive photon cutoff.
//
// Parity P = sigma_x (-1)^n splits the Fock space into two sectors. Writing a
// state of parity p as (c_+, c_-) with c_-[n] = p (-1)^n c_+[n], the
// Hamiltonian acting on c_+ is exactly tridiagonal:
//   diag_n = w n + p (W/2) (-1)^n,   off_n = g sqrt(n + 1).
// The ground state lives in p = -1.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "qrm/errors.hpp"
#include "qrm/model.hpp"
#include "qrm/oscillator.hpp"
#include "qrm/tridiagonal.hpp"

namespace qrm {

enum class Parity { Even = 1, Odd = -1 };

struct SolverOptions {
  double tol = 1e-10;         ///< relative ground-energy change between cutoffs
  double tail_limit = 1e-12;  ///< weight allowed in photon numbers above 0.9 N
  int min_cutoff = 32;
  int hard_limit = 16384;
};

struct ConvergenceReport {
  int final_cutoff = 0;
  double energy_delta = std::numeric_limits<double>::quiet_NaN();  ///< |E0(N) - E0(N/2)|
  double tail_weight = std::numeric_limits<double>::quiet_NaN();
  double qfi_delta = std::numeric_limits<double>::quiet_NaN();     ///< filled by QFI callers
  double tol = 0.0;
  bool converged = false;
};

class NonConvergenceError : public Error {
 public:
  NonConvergenceError(const std::string& what, ConvergenceReport report)
      : Error(what), report_(report) {}
  const ConvergenceReport& report() const noexcept { return report_; }

 private:
  ConvergenceReport report_;
};

/// Eigenstate in the spin-resolved Fock basis. Each spin component is
/// normalized to one; the physical state is (|+> c_plus + |-> c_minus) / sqrt 2.
struct QuantumState {
  Eigen::VectorXd plus;
  Eigen::VectorXd minus;
  double energy = 0.0;
  int cutoff = 0;
  ModelParams params{1.0, 1.0, 0.0};

  double norm() const { return 0.5 * (plus.squaredNorm() + minus.squaredNorm()); }

  /// Full state vector in the spin-major basis of build_hamiltonian.
  Eigen::VectorXd full() const {
    Eigen::VectorXd v(plus.size() + minus.size());
    v << plus, minus;
    return v / std::numbers::sqrt2;
  }
};

/// Real eigenvector within one parity sector (the c_+ component, unit norm).
struct SectorSolution {
  double energy = 0.0;
  Eigen::VectorXd vector;
};

inline linalg::SymTridiagonal sector_matrix(double frequency, double splitting, double coupling,
                                            int cutoff, Parity parity) {
  if (cutoff < 1) throw DomainError("photon cutoff must be at least 1");
  const double p = parity == Parity::Odd ? -1.0 : 1.0;
  linalg::SymTridiagonal t;
  t.diag.resize(static_cast<std::size_t>(cutoff) + 1);
  t.off.resize(static_cast<std::size_t>(cutoff));
  for (int n = 0; n <= cutoff; ++n) {
    const double sign = (n % 2 == 0) ? 1.0 : -1.0;
    t.diag[n] = frequency * n + p * 0.5 * splitting * sign;
    if (n < cutoff) t.off[n] = coupling * std::sqrt(static_cast<double>(n + 1));
  }
  return t;
}

/// Sign convention: the largest-magnitude coefficient is positive.
inline void fix_gauge(Eigen::VectorXd& v) {
  Eigen::Index imax = 0;
  v.cwiseAbs().maxCoeff(&imax);
  if (v[imax] < 0.0) v = -v;
}

/// Lowest state of a sector. The coupling may be negative here: finite
/// difference stencils around g = 0 evaluate H(-h), which is well defined.
inline SectorSolution solve_sector(double frequency, double splitting, double coupling,
                                   int cutoff, Parity parity = Parity::Odd,
                                   std::size_t level = 0) {
  if (!std::isfinite(coupling)) throw DomainError("coupling must be finite");
  const auto t = sector_matrix(frequency, splitting, coupling, cutoff, parity);
  SectorSolution s;
  s.energy = linalg::eigenvalue(t, level);
  s.vector = linalg::eigenvector(t, s.energy);
  fix_gauge(s.vector);
  return s;
}

/// Lowest `count` energies within a parity sector.
inline std::vector<double> sector_energies(const ModelParams& params, int cutoff, std::size_t count,
                                           Parity parity = Parity::Odd) {
  const auto t = sector_matrix(params.frequency(), params.splitting(), params.coupling(), cutoff,
                               parity);
  std::vector<double> out;
  for (std::size_t k = 0; k < std::min(count, t.size()); ++k) out.push_back(linalg::eigenvalue(t, k));
  return out;
}

/// Gap between the ground state and the first excited state (any parity).
inline double excitation_gap(const ModelParams& params, int cutoff) {
  const auto odd = sector_energies(params, cutoff, 2, Parity::Odd);
  const auto even = sector_energies(params, cutoff, 1, Parity::Even);
  return std::min(odd.size() > 1 ? odd[1] : std::numeric_limits<double>::infinity(), even[0]) -
         odd[0];
}

/// Weight carried by photon numbers n > 0.9 N.
inline double tail_weight(const Eigen::VectorXd& v) {
  const auto n = v.size() - 1;
  const auto start = static_cast<Eigen::Index>(std::floor(0.9 * static_cast<double>(n))) + 1;
  if (start > n) return 0.0;
  return v.tail(v.size() - start).squaredNorm();
}

inline QuantumState state_from_sector(const ModelParams& params, int cutoff,
                                      const SectorSolution& s) {
  QuantumState st;
  st.plus = s.vector;
  st.minus.resize(s.vector.size());
  for (Eigen::Index n = 0; n < s.vector.size(); ++n)
    st.minus[n] = ((n % 2 == 0) ? -1.0 : 1.0) * s.vector[n];
  st.energy = s.energy;
  st.cutoff = cutoff;
  st.params = params;
  return st;
}

inline QuantumState ground_state_at_cutoff(const ModelParams& params, int cutoff) {
  return state_from_sector(
      params, cutoff,
      solve_sector(params.frequency(), params.splitting(), params.coupling(), cutoff));
}

/// First cutoff of the doubling schedule: smallest power of two not below
/// max(min_cutoff, 8 g~^2). Displaced states carry ~g~^2 / 2 photons.
inline int initial_cutoff(const ModelParams& params, const SolverOptions& opt = {}) {
  const double gt = params.displacement();
  const double want = std::max(static_cast<double>(opt.min_cutoff), std::ceil(8.0 * gt * gt));
  int n = 32;
  while (n < want && n < (1 << 30)) n *= 2;
  return n;
}

/// Ground state with the cutoff doubled until the relative energy change is
/// below tol and the high-photon tail is negligible.
inline std::pair<QuantumState, ConvergenceReport> ground_state(const ModelParams& params,
                                                               const SolverOptions& opt = {}) {
  if (!(opt.tol > 0.0)) throw DomainError("energy tolerance must be positive");
  ConvergenceReport report;
  report.tol = opt.tol;
  int n = initial_cutoff(params, opt);
  if (n > opt.hard_limit) {
    report.final_cutoff = n;
    throw NonConvergenceError("initial cutoff " + std::to_string(n) + " exceeds hard limit", report);
  }
  auto solve = [&](int cutoff) {
    return solve_sector(params.frequency(), params.splitting(), params.coupling(), cutoff);
  };
  SectorSolution prev = solve(n);
  while (true) {
    const int next = 2 * n;
    if (next > opt.hard_limit) {
      report.final_cutoff = n;
      throw NonConvergenceError("photon cutoff would exceed hard limit " +
                                    std::to_string(opt.hard_limit),
                                report);
    }
    SectorSolution cur = solve(next);
    report.final_cutoff = next;
    report.energy_delta = std::abs(cur.energy - prev.energy);
    report.tail_weight = tail_weight(cur.vector);
    if (report.energy_delta <= opt.tol * std::abs(cur.energy) &&
        report.tail_weight < opt.tail_limit) {
      report.converged = true;
      return {state_from_sector(params, next, cur), report};
    }
    prev = std::move(cur);
    n = next;
  }
}

struct SpinWavefunctions {
  std::vector<double> plus;
  std::vector<double> minus;
};

/// psi_sigma(x) = sum_n c_{sigma,n} h_n(x) on the given positions.
inline SpinWavefunctions position_wavefunction(const QuantumState& state,
                                               std::span<const double> grid) {
  SpinWavefunctions out;
  out.plus.reserve(grid.size());
  out.minus.reserve(grid.size());
  const std::span<const double> cp(state.plus.data(), static_cast<std::size_t>(state.plus.size()));
  const std::span<const double> cm(state.minus.data(), static_cast<std::size_t>(state.minus.size()));
  for (double x : grid) {
    if (!std::isfinite(x)) throw DomainError("grid positions must be finite");
    out.plus.push_back(oscillator_series(cp, x));
    out.minus.push_back(oscillator_series(cm, x));
  }
  return out;
}

namespace detail {

inline double x_moment(const Eigen::VectorXd& c) {
  double s = 0.0;
  for (Eigen::Index n = 0; n + 1 < c.size(); ++n)
    s += c[n] * std::sqrt(static_cast<double>(n + 1)) * c[n + 1];
  return std::numbers::sqrt2 * s;
}

}  // namespace detail

struct SpinExpectation {
  double plus = 0.0;
  double minus = 0.0;
};

/// <x>_sigma = sqrt(2) <psi_sigma| a |psi_sigma> per spin component.
inline SpinExpectation expectation_x(const QuantumState& state) {
  return {detail::x_moment(state.plus), detail::x_moment(state.minus)};
}

inline double photon_number(const QuantumState& state) {
  double s = 0.0;
  for (Eigen::Index n = 0; n < state.plus.size(); ++n)
    s += static_cast<double>(n) * (state.plus[n] * state.plus[n] + state.minus[n] * state.minus[n]);
  return 0.5 * s;
}

}  // namespace qrm
