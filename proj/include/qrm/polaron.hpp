#pragma once

// Two-polaron variational ground state.
//
// The spin-up component is psi_+(x) = alpha phi_a(x) + beta phi_b(x), each
// phi_i a normalized Gaussian with shift x_i = zeta_i g~ and width xi_i; the
// spin-down component follows from parity, psi_-(x) = -psi_+(-x). The energy is
//   E = sum_ij w_i w_j [ <phi_i| w p^2/2 + v_+ |phi_j> - (W/2) <phi_i(x)|phi_j(-x)> ].
// For fixed packets the best weights solve a 2x2 generalized eigenproblem, so
// the search runs over (zeta_a, zeta_b, ln xi_a, ln xi_b) only.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "qrm/errors.hpp"
#include "qrm/gaussian.hpp"
#include "qrm/minimize.hpp"
#include "qrm/model.hpp"

namespace qrm {

struct PolaronAnsatz {
  double alpha = 1.0;
  double beta = 0.0;
  double zeta_alpha = 0.0;
  double zeta_beta = 0.0;
  double xi_alpha = 1.0;
  double xi_beta = 1.0;
  double energy = std::numeric_limits<double>::quiet_NaN();  ///< set by optimize

  std::array<GaussianPacket, 2> packets(double displacement) const {
    return {GaussianPacket{zeta_alpha * displacement, xi_alpha},
            GaussianPacket{zeta_beta * displacement, xi_beta}};
  }
  std::array<double, 2> weights() const { return {alpha, beta}; }
  std::array<double, 2> zetas() const { return {zeta_alpha, zeta_beta}; }
  std::array<double, 2> xis() const { return {xi_alpha, xi_beta}; }

  /// alpha^2 + beta^2 + 2 alpha beta S.
  double normalization(double displacement) const {
    const auto p = packets(displacement);
    return alpha * alpha + beta * beta + 2.0 * alpha * beta * overlap(p[0], p[1]);
  }

  /// Same state with the two polaron labels exchanged.
  PolaronAnsatz swapped() const {
    PolaronAnsatz s = *this;
    std::swap(s.alpha, s.beta);
    std::swap(s.zeta_alpha, s.zeta_beta);
    std::swap(s.xi_alpha, s.xi_beta);
    return s;
  }
};

/// Overlap and Hamiltonian matrices in the two-packet basis.
template <class T>
struct PolaronMatrices {
  T overlap;  ///< off-diagonal S_ab (diagonal is 1)
  T deficit;  ///< 1 - S_ab^2
  T h_aa, h_ab, h_bb;
};

template <class T>
PolaronMatrices<T> polaron_matrices(const ModelParams& params,
                                    const std::array<BasicPacket<T>, 2>& p) {
  const double w = params.frequency();
  const double half_split = 0.5 * params.splitting();
  const double gt = params.displacement();
  const double eps0 = -0.5 * (gt * gt + 1.0) * w;
  const T center = T(-gt);
  auto element = [&](const BasicPacket<T>& a, const BasicPacket<T>& b) {
    return w * (kinetic(a, b) + 0.5 * quadratic_moment(a, b, center)) + eps0 * overlap(a, b) -
           half_split * overlap(a, reflected(b));
  };
  return {overlap(p[0], p[1]), overlap_deficit(p[0], p[1]), element(p[0], p[0]), element(p[0], p[1]),
          element(p[1], p[1])};
}

/// Energy of a given (normalized) ansatz.
inline double energy(const PolaronAnsatz& ansatz, const ModelParams& params) {
  const double gt = params.displacement();
  const double norm = ansatz.normalization(gt);
  if (!(std::abs(norm - 1.0) <= 1e-8))
    throw ContractError("ansatz is not normalized (norm " + std::to_string(norm) + ")");
  const auto m = polaron_matrices(params, ansatz.packets(gt));
  const double a = ansatz.alpha;
  const double b = ansatz.beta;
  return a * a * m.h_aa + 2.0 * a * b * m.h_ab + b * b * m.h_bb;
}

namespace detail {

inline double re(double v) { return v; }
inline double re(const std::complex<double>& v) { return v.real(); }

// Below this 1 - S^2 the pair is numerically one packet: the 2x2 problem loses
// all precision and spurious packet-minus-packet "derivative" states appear.
inline constexpr double kCollapsedPackets = 1e-6;

/// Lowest root of det(H - E S) = 0.
template <class T>
T lowest_generalized_root(const PolaronMatrices<T>& m) {
  using std::sqrt;
  const T a = m.deficit;
  if (re(a) < kCollapsedPackets) return re(m.h_aa) <= re(m.h_bb) ? m.h_aa : m.h_bb;
  const T b = -(m.h_aa + m.h_bb - 2.0 * m.overlap * m.h_ab);
  const T c = m.h_aa * m.h_bb - m.h_ab * m.h_ab;
  const T disc = sqrt(b * b - 4.0 * a * c);
  // Cancellation-free pair of roots.
  const T q = re(b) >= 0.0 ? T(-0.5) * (b + disc) : T(-0.5) * (b - disc);
  const T r1 = q / a;
  const T r2 = c / q;
  return re(r1) < re(r2) ? r1 : r2;
}

template <class T>
std::array<BasicPacket<T>, 2> packets_from(std::span<const T> v, double displacement) {
  using std::exp;
  return {BasicPacket<T>{v[0] * displacement, exp(v[2])},
          BasicPacket<T>{v[1] * displacement, exp(v[3])}};
}

/// Energy after eliminating the weights, as a function of
/// (zeta_a, zeta_b, ln xi_a, ln xi_b).
template <class T>
T reduced_energy(const ModelParams& params, std::span<const T> v) {
  return lowest_generalized_root(polaron_matrices(params, packets_from(v, params.displacement())));
}

inline double reduced_energy(const ModelParams& params, const Eigen::VectorXd& v) {
  return reduced_energy<double>(params, std::span<const double>(v.data(), 4));
}

/// Exact gradient by complex step.
inline Eigen::VectorXd reduced_gradient(const ModelParams& params, const Eigen::VectorXd& v) {
  constexpr double h = 1e-30;
  Eigen::VectorXd g(4);
  std::array<std::complex<double>, 4> z;
  for (int k = 0; k < 4; ++k) {
    for (int i = 0; i < 4; ++i) z[i] = v[i];
    z[k] += std::complex<double>(0.0, h);
    g[k] = reduced_energy<std::complex<double>>(params, z).imag() / h;
  }
  return g;
}

/// Newton iterations on the complex-step gradient with a central-difference
/// Hessian. The energy surface has soft directions (Hessian eigenvalues down to
/// ~1e-7 in weak coupling), so quasi-Newton stopping leaves parameters wandering
/// along them. Curvatures are taken by magnitude and floored, and steps are
/// halved until the gradient shrinks.
inline Eigen::VectorXd newton_polish(const ModelParams& params, Eigen::VectorXd v,
                                     int iterations = 40) {
  constexpr double h = 1e-5;
  Eigen::VectorXd g = reduced_gradient(params, v);
  for (int it = 0; it < iterations && g.norm() > 1e-15; ++it) {
    Eigen::Matrix4d hess;
    for (int k = 0; k < 4; ++k) {
      Eigen::VectorXd vp = v, vm = v;
      vp[k] += h;
      vm[k] -= h;
      hess.col(k) = (reduced_gradient(params, vp) - reduced_gradient(params, vm)) / (2.0 * h);
    }
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix4d> es(0.5 * (hess + hess.transpose()));
    const Eigen::Vector4d lam = es.eigenvalues().cwiseAbs();
    const double floor = std::max(1e-12, 1e-9 * lam.maxCoeff());
    const Eigen::Vector4d inv = lam.unaryExpr([&](double x) { return 1.0 / std::max(x, floor); });
    Eigen::VectorXd step = -(es.eigenvectors() * inv.asDiagonal() * es.eigenvectors().transpose() * g);
    bool moved = false;
    for (int half = 0; half < 30; ++half, step *= 0.5) {
      const Eigen::VectorXd next = v + step;
      const Eigen::VectorXd gn = reduced_gradient(params, next);
      if (gn.allFinite() && gn.norm() < g.norm() &&
          reduced_energy(params, next) <= reduced_energy(params, v) + 1e-15) {
        v = next;
        g = gn;
        moved = true;
        break;
      }
    }
    if (!moved) break;
  }
  return v;
}

inline constexpr double kLabelTie = 1e-8;

/// |alpha| >= |beta| (ties broken by zeta_alpha >= zeta_beta), alpha > 0.
inline PolaronAnsatz canonical(PolaronAnsatz s) {
  const double da = std::abs(s.alpha);
  const double db = std::abs(s.beta);
  if (db > da + kLabelTie || (std::abs(da - db) <= kLabelTie && s.zeta_beta > s.zeta_alpha))
    s = s.swapped();
  if (s.alpha < 0.0) {
    s.alpha = -s.alpha;
    s.beta = -s.beta;
  }
  return s;
}

/// Ansatz (with weights) at a point of the reduced search space.
inline PolaronAnsatz ansatz_at(const ModelParams& params, const Eigen::VectorXd& v) {
  const double gt = params.displacement();
  const auto packets = packets_from<double>(std::span<const double>(v.data(), 4), gt);
  const auto m = polaron_matrices(params, packets);
  PolaronAnsatz s;
  s.zeta_alpha = v[0];
  s.zeta_beta = v[1];
  s.xi_alpha = packets[0].width;
  s.xi_beta = packets[1].width;
  const double e = lowest_generalized_root(m);
  if (m.deficit < kCollapsedPackets) {
    // Coincident packets: one polaron carries the state.
    if (m.h_bb < m.h_aa) s = s.swapped();
    s.alpha = 1.0;
    s.beta = 0.0;
    s.zeta_beta = s.zeta_alpha;
    s.xi_beta = s.xi_alpha;
  } else {
    // Null vector of (H - E S) from whichever row is better conditioned.
    const double r11 = m.h_aa - e, r12 = m.h_ab - e * m.overlap, r22 = m.h_bb - e;
    Eigen::Vector2d w = (std::hypot(r11, r12) >= std::hypot(r12, r22)) ? Eigen::Vector2d(-r12, r11)
                                                                        : Eigen::Vector2d(r22, -r12);
    const double n = w[0] * w[0] + w[1] * w[1] + 2.0 * w[0] * w[1] * m.overlap;
    w /= std::sqrt(n);
    s.alpha = w[0];
    s.beta = w[1];
  }
  // The Rayleigh quotient of the normalized state; the generalized root loses
  // digits as the packets approach each other.
  s.energy = energy(s, params);
  return canonical(s);
}

inline Eigen::VectorXd search_point(const PolaronAnsatz& s) {
  Eigen::VectorXd v(4);
  v << s.zeta_alpha, s.zeta_beta, std::log(s.xi_alpha), std::log(s.xi_beta);
  return v;
}

}  // namespace detail

struct OptimizeOptions {
  double simplex_size = 1e-8;
  int simplex_iterations = 6000;
  double gradient_tol = 1e-11;
  int polish_iterations = 400;
};

/// Optimizer ran out of iterations; carries the best ansatz seen.
class OptimizerError : public Error {
 public:
  OptimizerError(const std::string& what, PolaronAnsatz best) : Error(what), best_(best) {}
  const PolaronAnsatz& best() const noexcept { return best_; }

 private:
  PolaronAnsatz best_;
};

/// Semiclassical displacement factor sqrt(1 - gbar^-4) above gc0, 0 below.
inline double semiclassical_zeta(double relative_coupling) {
  if (relative_coupling <= 1.0) return 0.0;
  return std::sqrt(1.0 - std::pow(relative_coupling, -4.0));
}

/// Multi-start minimization of the energy; returns the lowest local minimum.
inline PolaronAnsatz optimize(const ModelParams& params,
                              const std::optional<PolaronAnsatz>& warm_start = std::nullopt,
                              const OptimizeOptions& opt = {}) {
  const double gbar = params.splitting() > 0.0 ? params.relative_coupling() : 2.0;
  const double zs = gbar > 1.0 ? semiclassical_zeta(gbar) : 0.3;
  std::vector<Eigen::VectorXd> seeds;
  auto seed = [&](double za, double zb, double xa, double xb) {
    Eigen::VectorXd v(4);
    v << za, zb, std::log(xa), std::log(xb);
    seeds.push_back(v);
  };
  seed(0.0, 0.0, 1.0, 0.6);
  seed(zs, -zs, 1.0, 1.0);
  seed(zs, 0.0, 1.0, 1.0);
  seed(zs, -zs, 0.7, 0.7);
  seed(0.3, -0.1, 0.8, 0.7);
  if (warm_start) seeds.push_back(detail::search_point(*warm_start));

  const optim::Objective f = [&](const Eigen::VectorXd& v) { return detail::reduced_energy(params, v); };
  optim::MinimizeResult best;
  for (const auto& s : seeds) {
    auto r = optim::nelder_mead(f, s, 0.1, opt.simplex_size, opt.simplex_iterations);
    if (r.value < best.value) best = std::move(r);
  }
  const optim::Gradient grad = [&](const Eigen::VectorXd& v) {
    return detail::reduced_gradient(params, v);
  };
  const auto polished = optim::bfgs(f, grad, best.x, opt.gradient_tol, opt.polish_iterations);
  if (polished.value <= best.value) {
    best.x = polished.x;
    best.value = polished.value;
  }
  best.x = detail::newton_polish(params, best.x);

  PolaronAnsatz result = detail::ansatz_at(params, best.x);
  if (!best.converged && detail::reduced_gradient(params, best.x).norm() > 1e-6)
    throw OptimizerError("polaron optimizer did not converge", result);
  return result;
}

/// Sequential optimization over an ascending grid of relative couplings.
struct PolaronSweep {
  double frequency = 0.0;
  double splitting = 0.0;
  std::vector<double> gbar;
  std::vector<PolaronAnsatz> states;
  std::vector<bool> discontinuity;  ///< jump between index-1 and index

  ModelParams params_at(std::size_t i) const {
    return ModelParams::from_relative(frequency, splitting, gbar.at(i));
  }
};

namespace detail {

/// Variant of `s` (label exchange and/or global sign) closest to `ref`.
inline PolaronAnsatz aligned_to(const PolaronAnsatz& ref, const PolaronAnsatz& s) {
  auto distance = [&](const PolaronAnsatz& t) {
    return std::abs(t.alpha - ref.alpha) + std::abs(t.beta - ref.beta) +
           std::abs(t.zeta_alpha - ref.zeta_alpha) + std::abs(t.zeta_beta - ref.zeta_beta) +
           std::abs(std::log(t.xi_alpha / ref.xi_alpha)) + std::abs(std::log(t.xi_beta / ref.xi_beta));
  };
  PolaronAnsatz best = s;
  double dbest = distance(s);
  for (const PolaronAnsatz& base : {s, s.swapped()}) {
    for (double sign : {1.0, -1.0}) {
      PolaronAnsatz t = base;
      t.alpha *= sign;
      t.beta *= sign;
      const double d = distance(t);
      if (d < dbest) {
        dbest = d;
        best = t;
      }
    }
  }
  return best;
}

inline double parameter_change(const PolaronAnsatz& a, const PolaronAnsatz& b) {
  const PolaronAnsatz t = aligned_to(a, b);
  return std::max({std::abs(t.alpha - a.alpha), std::abs(t.beta - a.beta),
                   std::abs(t.zeta_alpha - a.zeta_alpha), std::abs(t.zeta_beta - a.zeta_beta),
                   std::abs(std::log(t.xi_alpha / a.xi_alpha)),
                   std::abs(std::log(t.xi_beta / a.xi_beta))});
}

// Absolute floor below which a "jump" is just optimizer noise.
inline constexpr double kJumpFloor = 1e-3;

inline std::vector<bool> find_discontinuities(const std::vector<double>& grid,
                                              const std::vector<PolaronAnsatz>& states) {
  const std::size_t n = states.size();
  std::vector<bool> flags(n, false);
  if (n < 3) return flags;
  std::vector<double> rate(n, 0.0);
  for (std::size_t i = 1; i < n; ++i)
    rate[i] = parameter_change(states[i - 1], states[i]) / (grid[i] - grid[i - 1]);
  for (std::size_t i = 1; i < n; ++i) {
    double local = 0.0;
    if (i > 1) local = std::max(local, rate[i - 1]);
    if (i + 1 < n) local = std::max(local, rate[i + 1]);
    const double step = rate[i] * (grid[i] - grid[i - 1]);
    if (step > kJumpFloor && rate[i] > 10.0 * local) flags[i] = true;
  }
  return flags;
}

}  // namespace detail

inline PolaronSweep continuation_sweep(double frequency, double splitting,
                                       std::span<const double> gbar_grid,
                                       const OptimizeOptions& opt = {}) {
  for (std::size_t i = 1; i < gbar_grid.size(); ++i)
    if (!(gbar_grid[i] > gbar_grid[i - 1])) throw DomainError("coupling grid must be strictly ascending");
  PolaronSweep sweep;
  sweep.frequency = frequency;
  sweep.splitting = splitting;
  sweep.gbar.assign(gbar_grid.begin(), gbar_grid.end());
  std::optional<PolaronAnsatz> warm;
  for (std::size_t i = 0; i < gbar_grid.size(); ++i) {
    try {
      warm = optimize(sweep.params_at(i), warm, opt);
    } catch (const OptimizerError& e) {
      throw OptimizerError(std::string(e.what()) + " at grid index " + std::to_string(i), e.best());
    }
    sweep.states.push_back(*warm);
  }
  sweep.discontinuity = detail::find_discontinuities(sweep.gbar, sweep.states);
  // A jump may be a seed landing on a different local minimum: retry from
  // both neighbours and keep whichever is lower.
  bool retried = false;
  for (std::size_t i = 1; i < sweep.states.size(); ++i) {
    if (!sweep.discontinuity[i]) continue;
    for (std::size_t j : {i - 1, i}) {
      const std::size_t other = (j == i) ? i - 1 : i;
      auto alt = optimize(sweep.params_at(j), sweep.states[other], opt);
      if (alt.energy < sweep.states[j].energy - 1e-14) {
        sweep.states[j] = alt;
        retried = true;
      }
    }
  }
  if (retried) sweep.discontinuity = detail::find_discontinuities(sweep.gbar, sweep.states);
  return sweep;
}

/// Flow of the variational parameters with gbar at one sweep index, for the
/// labels of the ansatz at that index.
struct ParameterFlow {
  std::array<double, 2> dzeta{};
  std::array<double, 2> d2zeta{};
  std::array<double, 2> dxi{};
  std::array<double, 2> dweight{};
  std::array<double, 2> dshift{};  ///< d x_i / d gbar with x_i = zeta_i g~
};

namespace detail {

/// Finite-difference weights on the points index + offsets[k].
struct Stencil {
  std::vector<int> offsets;
  std::vector<double> first;
  std::vector<double> second;
};

inline Stencil three_point(double hm, double hp) {
  return {{-1, 0, 1},
          {-hp / (hm * (hm + hp)), (hp - hm) / (hm * hp), hm / (hp * (hm + hp))},
          {2.0 / (hm * (hm + hp)), -2.0 / (hm * hp), 2.0 / (hp * (hm + hp))}};
}

inline Stencil five_point(double h) {
  return {{-2, -1, 0, 1, 2},
          {1.0 / (12.0 * h), -8.0 / (12.0 * h), 0.0, 8.0 / (12.0 * h), -1.0 / (12.0 * h)},
          {-1.0 / (12.0 * h * h), 16.0 / (12.0 * h * h), -30.0 / (12.0 * h * h),
           16.0 / (12.0 * h * h), -1.0 / (12.0 * h * h)}};
}

inline bool flagged(const PolaronSweep& sweep, std::size_t i) {
  return sweep.discontinuity.size() == sweep.states.size() && sweep.discontinuity[i];
}

/// Fourth-order stencil on uniform, jump-free interiors; three points otherwise.
inline Stencil stencil_at(const PolaronSweep& sweep, std::size_t index) {
  const auto& g = sweep.gbar;
  const double hm = g[index] - g[index - 1];
  const double hp = g[index + 1] - g[index];
  if (index >= 2 && index + 2 < g.size()) {
    const double h = hp;
    bool uniform = true;
    for (std::size_t k = index - 1; k <= index + 2; ++k)
      uniform = uniform && std::abs((g[k] - g[k - 1]) - h) <= 1e-9 * h && !flagged(sweep, k);
    if (uniform) return five_point(h);
  }
  return three_point(hm, hp);
}

}  // namespace detail

inline ParameterFlow parameter_derivatives(const PolaronSweep& sweep, std::size_t index) {
  if (index == 0 || index + 1 >= sweep.states.size())
    throw DerivativeInvalidError("parameter derivatives need both neighbours", index);
  if (detail::flagged(sweep, index) || detail::flagged(sweep, index + 1))
    throw DerivativeInvalidError("branch discontinuity in the stencil", index);
  const auto st = detail::stencil_at(sweep, index);
  const PolaronAnsatz& c = sweep.states[index];
  // Neighbours take the labels and sign of the centre, walking outwards.
  std::vector<PolaronAnsatz> pts(st.offsets.size());
  const auto center = static_cast<std::size_t>(
      std::find(st.offsets.begin(), st.offsets.end(), 0) - st.offsets.begin());
  pts[center] = c;
  for (std::size_t k = center + 1; k < pts.size(); ++k)
    pts[k] = detail::aligned_to(pts[k - 1], sweep.states[index + st.offsets[k]]);
  for (std::size_t k = center; k-- > 0;)
    pts[k] = detail::aligned_to(pts[k + 1], sweep.states[index + st.offsets[k]]);

  const double scale = std::sqrt(sweep.splitting / (2.0 * sweep.frequency));
  const double gbar = sweep.gbar[index];
  ParameterFlow flow;
  for (std::size_t k = 0; k < pts.size(); ++k) {
    for (int i = 0; i < 2; ++i) {
      flow.dzeta[i] += st.first[k] * pts[k].zetas()[i];
      flow.d2zeta[i] += st.second[k] * pts[k].zetas()[i];
      flow.dxi[i] += st.first[k] * pts[k].xis()[i];
      flow.dweight[i] += st.first[k] * pts[k].weights()[i];
    }
  }
  for (int i = 0; i < 2; ++i) flow.dshift[i] = (flow.dzeta[i] * gbar + c.zetas()[i]) * scale;
  return flow;
}

/// Pairwise closed-form overlaps for the packets of an ansatz.
struct OverlapTable {
  std::array<std::array<PairOverlaps, 2>, 2> pairs;
  const PairOverlaps& operator()(int i, int j) const { return pairs[i][j]; }
};

inline OverlapTable derivative_overlaps(const PolaronAnsatz& ansatz, const ModelParams& params) {
  const auto p = ansatz.packets(params.displacement());
  OverlapTable t;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) t.pairs[i][j] = pair_overlaps(p[i], p[j]);
  return t;
}

}  // namespace qrm
