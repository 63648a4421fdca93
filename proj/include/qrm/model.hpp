#pragma once

// Quantum Rabi model: parameters, truncated Fock-space Hamiltonian, parity,
// and the spin-dependent position-space potentials.
//
//   H = w a^dag a + g sigma_z (a^dag + a) + (W/2) sigma_x
//
// Basis ordering is spin-major: index(s, n) = s * (N + 1) + n with s = 0 for
// sigma_z = +1 and s = 1 for sigma_z = -1, photon number n in [0, N].

#include <cmath>
#include <numbers>

#include <Eigen/Dense>

#include "qrm/errors.hpp"

namespace qrm {

/// Physical parameters of the model in raw energy units. Derived couplings are
/// recomputed on every call and never cached.
class ModelParams {
 public:
  /// frequency: boson mode (> 0); splitting: qubit (>= 0); coupling: >= 0.
  ModelParams(double frequency, double splitting, double coupling)
      : frequency_(frequency), splitting_(splitting), coupling_(coupling) {
    if (!std::isfinite(frequency) || !std::isfinite(splitting) || !std::isfinite(coupling))
      throw DomainError("model parameters must be finite");
    if (frequency <= 0.0) throw DomainError("boson frequency must be positive");
    if (splitting < 0.0) throw DomainError("qubit splitting must be non-negative");
    if (coupling < 0.0) throw DomainError("coupling must be non-negative");
  }

  /// Builds parameters from the relative coupling g / gc0.
  static ModelParams from_relative(double frequency, double splitting, double relative) {
    ModelParams base(frequency, splitting, 0.0);
    return base.with_coupling(relative * base.gc0());
  }

  double frequency() const noexcept { return frequency_; }
  double splitting() const noexcept { return splitting_; }
  double coupling() const noexcept { return coupling_; }

  /// Frequency ratio w / W.
  double ratio() const {
    if (splitting_ == 0.0) throw DomainError("frequency ratio undefined for zero splitting");
    return frequency_ / splitting_;
  }

  /// Conventional critical coupling sqrt(w W) / 2.
  double gc0() const noexcept { return 0.5 * std::sqrt(frequency_ * splitting_); }

  /// g / gc0.
  double relative_coupling() const {
    const double base = gc0();
    if (base == 0.0) throw DomainError("relative coupling undefined for zero splitting");
    return coupling_ / base;
  }

  /// Potential displacement sqrt(2) g / w.
  double displacement() const noexcept { return std::numbers::sqrt2 * coupling_ / frequency_; }

  ModelParams with_coupling(double coupling) const {
    return ModelParams(frequency_, splitting_, coupling);
  }

  bool operator==(const ModelParams&) const = default;

 private:
  double frequency_;
  double splitting_;
  double coupling_;
};

struct FockHamiltonian {
  int cutoff = 0;          ///< photon cutoff N
  Eigen::MatrixXd matrix;  ///< real symmetric, 2 (N + 1) square

  int dimension() const noexcept { return 2 * (cutoff + 1); }
  static int index(int spin, int photons, int cutoff) noexcept {
    return spin * (cutoff + 1) + photons;
  }
};

inline FockHamiltonian build_hamiltonian(const ModelParams& params, int cutoff) {
  if (cutoff < 1) throw DomainError("photon cutoff must be at least 1");
  FockHamiltonian h;
  h.cutoff = cutoff;
  h.matrix = Eigen::MatrixXd::Zero(h.dimension(), h.dimension());
  const double w = params.frequency();
  const double g = params.coupling();
  const double half_split = 0.5 * params.splitting();
  for (int s = 0; s < 2; ++s) {
    const double sz = s == 0 ? 1.0 : -1.0;
    for (int n = 0; n <= cutoff; ++n) {
      const int i = FockHamiltonian::index(s, n, cutoff);
      h.matrix(i, i) = w * n;
      if (n < cutoff) {
        const double c = g * sz * std::sqrt(static_cast<double>(n + 1));
        h.matrix(i, i + 1) = c;
        h.matrix(i + 1, i) = c;
      }
      h.matrix(i, FockHamiltonian::index(1 - s, n, cutoff)) = half_split;
    }
  }
  return h;
}

/// P = sigma_x (-1)^n on the truncated space. Entries are exact integers.
inline Eigen::MatrixXd parity_operator(int cutoff) {
  if (cutoff < 1) throw DomainError("photon cutoff must be at least 1");
  const int dim = 2 * (cutoff + 1);
  Eigen::MatrixXd p = Eigen::MatrixXd::Zero(dim, dim);
  for (int s = 0; s < 2; ++s)
    for (int n = 0; n <= cutoff; ++n)
      p(FockHamiltonian::index(s, n, cutoff), FockHamiltonian::index(1 - s, n, cutoff)) =
          (n % 2 == 0) ? 1.0 : -1.0;
  return p;
}

/// Spin-dependent harmonic potential v(x) = w (x + sz g~)^2 / 2 + offset.
struct PotentialSpec {
  int spin = 1;            ///< sigma_z = +1 or -1
  double curvature = 0.0;  ///< w
  double center = 0.0;     ///< -sigma_z g~
  double offset = 0.0;     ///< -(g~^2 + 1) w / 2

  double operator()(double x) const {
    const double d = x - center;
    return 0.5 * curvature * d * d + offset;
  }
};

inline PotentialSpec potential_spec(const ModelParams& params, int spin) {
  if (spin != 1 && spin != -1) throw DomainError("spin must be +1 or -1");
  const double gt = params.displacement();
  return PotentialSpec{spin, params.frequency(), -spin * gt,
                       -0.5 * (gt * gt + 1.0) * params.frequency()};
}

inline double potential(const ModelParams& params, int spin, double x) {
  return potential_spec(params, spin)(x);
}

}  // namespace qrm
