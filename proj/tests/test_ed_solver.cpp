#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "qrm/ed_solver.hpp"
#include "support/oracles.hpp"

namespace {

using qrm::ModelParams;

std::vector<double> linspace(double a, double b, int n) {
  std::vector<double> v(n);
  for (int i = 0; i < n; ++i) v[i] = a + (b - a) * i / (n - 1);
  return v;
}

double trapezoid(const std::vector<double>& x, const std::vector<double>& f) {
  double s = 0.0;
  for (std::size_t i = 1; i < x.size(); ++i) s += 0.5 * (x[i] - x[i - 1]) * (f[i] + f[i - 1]);
  return s;
}

TEST(Tridiagonal, MatchesDenseSolver) {
  std::mt19937 rng(5);
  std::normal_distribution<double> nd;
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 5 + trial * 7;
    qrm::linalg::SymTridiagonal t;
    Eigen::MatrixXd dense = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i) {
      t.diag.push_back(nd(rng));
      dense(i, i) = t.diag.back();
      if (i + 1 < n) {
        t.off.push_back(nd(rng));
        dense(i, i + 1) = dense(i + 1, i) = t.off.back();
      }
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(dense);
    for (std::size_t k : {std::size_t{0}, std::size_t{1}, std::size_t{3}}) {
      const double lam = qrm::linalg::eigenvalue(t, k);
      EXPECT_NEAR(lam, es.eigenvalues()[k], 1e-12);
      const auto v = qrm::linalg::eigenvector(t, lam);
      EXPECT_LT((t.apply(v) - lam * v).norm(), 1e-11);
    }
  }
}

TEST(Oscillator, LowOrdersMatchClosedForm) {
  for (double x : {-2.3, -0.4, 0.0, 0.9, 3.1}) {
    const auto h = qrm::oscillator_functions(x, 3);
    const double h0 = std::pow(std::numbers::pi, -0.25) * std::exp(-0.5 * x * x);
    EXPECT_NEAR(h[0], h0, 1e-15);
    EXPECT_NEAR(h[1], std::sqrt(2.0) * x * h0, 1e-15);
    EXPECT_NEAR(h[2], (2.0 * x * x - 1.0) / std::sqrt(2.0) * h0, 1e-14);
    EXPECT_NEAR(h[3], (2.0 * x * x * x - 3.0 * x) / std::sqrt(3.0) * h0, 1e-14);
  }
}

TEST(Oscillator, HighOrderStaysFiniteAndNormalized) {
  // h_n is normalized: integral of h_n^2 equals 1 even for n in the thousands.
  const int n = 3000;
  const double width = std::sqrt(2.0 * n + 1.0) + 12.0;
  std::vector<double> coeff(n + 1, 0.0);
  coeff[n] = 1.0;
  const double norm = qrm::testing::integrate(
      [&](double x) {
        const double v = qrm::oscillator_series(coeff, x);
        return v * v;
      },
      width, 1e-10);
  EXPECT_NEAR(norm, 1.0, 1e-8);
  // Far outside the classically allowed region the vacuum underflows to 0.
  EXPECT_EQ(qrm::oscillator_series(std::vector<double>{1.0}, 60.0), 0.0);
  // ... while a high-order function at large x is still resolved.
  EXPECT_NE(qrm::oscillator_series(coeff, 70.0), 0.0);
}

TEST(GroundState, DecoupledLimit) {
  const auto [st, rep] = qrm::ground_state(ModelParams(0.1, 1.0, 0.0));
  EXPECT_NEAR(st.energy, -0.5, 1e-12);
  EXPECT_TRUE(rep.converged);
  EXPECT_NEAR(st.plus[0], 1.0, 1e-14);
  EXPECT_NEAR(st.minus[0], -1.0, 1e-14);  // sigma_x = -1 spin state
  EXPECT_NEAR(st.plus.tail(st.plus.size() - 1).norm(), 0.0, 1e-14);
}

TEST(GroundState, DisplacedOscillator) {
  const auto [st, rep] = qrm::ground_state(ModelParams(1.0, 0.0, 1.0));
  EXPECT_NEAR(st.energy, -1.0, 1e-10);
  EXPECT_NEAR(qrm::photon_number(st), 1.0, 1e-9);
  const auto x = qrm::expectation_x(st);
  EXPECT_NEAR(x.plus, -std::sqrt(2.0), 1e-9);
  EXPECT_NEAR(x.minus, std::sqrt(2.0), 1e-9);
}

TEST(GroundState, MatchesGridOracleAcrossTransition) {
  const auto p = ModelParams::from_relative(0.1, 1.0, 1.3);
  const auto [st, rep] = qrm::ground_state(p);
  const auto grid = qrm::testing::grid_ground_state(0.1, 1.0, p.coupling(), 14.0, 561);
  EXPECT_NEAR(st.energy, grid.energy, 1e-6);

  // Position-space reconstruction overlaps the grid eigenfunction.
  const auto psi = qrm::position_wavefunction(st, grid.x);
  double ov = 0.0;
  for (std::size_t i = 0; i < grid.x.size(); ++i)
    ov += 0.5 * (psi.plus[i] * grid.plus[i] + psi.minus[i] * grid.minus[i]) * grid.dx;
  EXPECT_GE(std::abs(ov), 1.0 - 1e-6);
}

TEST(GroundState, StateInvariants) {
  for (double gbar : {0.0, 0.6, 1.0, 1.4, 2.2}) {
    const auto [st, rep] = qrm::ground_state(ModelParams::from_relative(0.1, 1.0, gbar));
    EXPECT_NEAR(st.norm(), 1.0, 1e-12);
    EXPECT_NEAR(st.plus.norm(), 1.0, 1e-12);
    for (Eigen::Index n = 0; n < st.plus.size(); ++n)
      EXPECT_NEAR(st.minus[n], -((n % 2 == 0) ? 1.0 : -1.0) * st.plus[n], 1e-10);
    // Largest coefficient positive.
    Eigen::Index imax;
    st.plus.cwiseAbs().maxCoeff(&imax);
    EXPECT_GT(st.plus[imax], 0.0);
    // Full-space eigen-equation holds.
    const auto h = qrm::build_hamiltonian(st.params, st.cutoff);
    const Eigen::VectorXd v = st.full();
    EXPECT_LT((h.matrix * v - st.energy * v).norm(), 1e-10);
  }
}

TEST(GroundState, AdaptiveCutoffIsConverged) {
  const qrm::SolverOptions opt;
  for (double gbar : {0.5, 1.2, 2.5}) {
    const auto p = ModelParams::from_relative(0.05, 1.0, gbar);
    const auto [st, rep] = qrm::ground_state(p, opt);
    EXPECT_LE(rep.energy_delta, opt.tol * std::abs(st.energy));
    EXPECT_LT(rep.tail_weight, opt.tail_limit);
    const auto doubled = qrm::ground_state_at_cutoff(p, 2 * rep.final_cutoff);
    EXPECT_LT(std::abs(doubled.energy - st.energy), opt.tol * std::abs(st.energy));
  }
}

TEST(GroundState, HardLimitRaisesWithReport) {
  qrm::SolverOptions opt;
  opt.hard_limit = 64;
  try {
    (void)qrm::ground_state(ModelParams::from_relative(0.01, 1.0, 2.0), opt);
    FAIL() << "expected nonconvergence";
  } catch (const qrm::NonConvergenceError& e) {
    EXPECT_FALSE(e.report().converged);
    EXPECT_GT(e.report().final_cutoff, 0);
  }
  EXPECT_THROW(qrm::ground_state(ModelParams(0.1, 1.0, 0.1), qrm::SolverOptions{.tol = 0.0}),
               qrm::DomainError);
}

// Ground state is in the odd sector across w/W in [0.005, 3], gbar in [0, 3].
TEST(GroundState, OddParityAcrossParameterRange) {
  for (double r : {0.005, 0.05, 0.3, 1.0, 3.0}) {
    for (double gbar : {0.0, 0.5, 1.0, 1.5, 2.0, 3.0}) {
      const auto p = ModelParams::from_relative(r, 1.0, gbar);
      const int n = std::min(4096, qrm::initial_cutoff(p) * 2);
      const double odd = qrm::sector_energies(p, n, 1, qrm::Parity::Odd)[0];
      const double even = qrm::sector_energies(p, n, 1, qrm::Parity::Even)[0];
      EXPECT_LE(odd, even + 1e-12) << r << " " << gbar;
    }
  }
  // Small instance cross-checked against the full-space dense solver.
  const auto p = ModelParams::from_relative(0.3, 1.0, 1.7);
  const double dense = qrm::testing::dense_ground_energy(0.3, 1.0, p.coupling(), 120);
  EXPECT_NEAR(qrm::ground_state_at_cutoff(p, 120).energy, dense, 1e-12);
}

TEST(PositionWavefunction, VacuumIsGaussian) {
  const auto [st, rep] = qrm::ground_state(ModelParams(0.1, 1.0, 0.0));
  const auto grid = linspace(-5.0, 5.0, 41);
  const auto psi = qrm::position_wavefunction(st, grid);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double ref = std::pow(std::numbers::pi, -0.25) * std::exp(-0.5 * grid[i] * grid[i]);
    EXPECT_NEAR(psi.plus[i], ref, 1e-14);
    EXPECT_NEAR(psi.minus[i], -ref, 1e-14);
  }
}

TEST(PositionWavefunction, ComponentsNormalized) {
  const auto [st, rep] = qrm::ground_state(ModelParams::from_relative(0.1, 1.0, 1.1));
  const auto grid = linspace(-20.0, 20.0, 8001);
  const auto psi = qrm::position_wavefunction(st, grid);
  std::vector<double> dens(grid.size()), densm(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    dens[i] = psi.plus[i] * psi.plus[i];
    densm[i] = psi.minus[i] * psi.minus[i];
  }
  EXPECT_NEAR(trapezoid(grid, dens), 1.0, 1e-8);
  EXPECT_NEAR(trapezoid(grid, densm), 1.0, 1e-8);
  EXPECT_THROW(qrm::position_wavefunction(st, std::vector<double>{NAN}), qrm::DomainError);
}

TEST(PositionWavefunction, DisplacedPastTransition) {
  // Deep in the displaced phase the spin-up density peaks near -zeta g~ with
  // zeta ~ sqrt(1 - gbar^-4).
  const double gbar = 2.0;
  const auto p = ModelParams::from_relative(0.1, 1.0, gbar);
  const auto [st, rep] = qrm::ground_state(p);
  const auto grid = linspace(-15.0, 15.0, 3001);
  const auto psi = qrm::position_wavefunction(st, grid);
  std::size_t imax = 0;
  for (std::size_t i = 0; i < grid.size(); ++i)
    if (std::abs(psi.plus[i]) > std::abs(psi.plus[imax])) imax = i;
  const double zeta = std::sqrt(1.0 - std::pow(gbar, -4.0));
  EXPECT_LT(grid[imax], 0.0);
  EXPECT_NEAR(grid[imax], -zeta * p.displacement(), 0.1 * p.displacement());
  // Mirror relation psi_-(x) = -psi_+(-x).
  for (std::size_t i = 0; i < grid.size(); i += 97)
    EXPECT_NEAR(psi.minus[i], -psi.plus[grid.size() - 1 - i], 1e-10);
}

TEST(ExpectationX, DecoupledIsZero) {
  const auto [st, rep] = qrm::ground_state(ModelParams(0.1, 1.0, 0.0));
  const auto x = qrm::expectation_x(st);
  EXPECT_NEAR(x.plus, 0.0, 1e-30);
  EXPECT_NEAR(x.minus, 0.0, 1e-30);
}

TEST(ExpectationX, SpinComponentsAreMirrored) {
  for (double r : {0.02, 0.1, 0.5}) {
    for (double gbar : {0.3, 0.9, 1.3, 2.0}) {
      const auto [st, rep] = qrm::ground_state(ModelParams::from_relative(r, 1.0, gbar));
      const auto x = qrm::expectation_x(st);
      EXPECT_NEAR(x.minus, -x.plus, 1e-10);
    }
  }
}

TEST(ExpectationX, WeakCouplingLimit) {
  // Second-order perturbation theory: <x>_+ = -g~ w / (w + W) + O(g^3).
  const auto p = ModelParams(0.1, 1.0, 1e-4);
  const auto [st, rep] = qrm::ground_state(p);
  EXPECT_NEAR(qrm::expectation_x(st).plus / p.displacement(), -0.1 / 1.1, 1e-6);
}

TEST(PhotonNumber, Limits) {
  EXPECT_NEAR(qrm::photon_number(qrm::ground_state(ModelParams(0.1, 1.0, 0.0)).first), 0.0, 1e-30);
  EXPECT_NEAR(qrm::photon_number(qrm::ground_state(ModelParams(1.0, 0.0, 1.0)).first), 1.0, 1e-9);
}

TEST(PhotonNumber, IncreasesAcrossTransition) {
  double prev = -1.0;
  for (double gbar = 0.0; gbar <= 2.5; gbar += 0.05) {
    const double n = qrm::photon_number(qrm::ground_state(ModelParams::from_relative(0.1, 1.0, gbar)).first);
    EXPECT_GT(n, prev) << gbar;
    prev = n;
  }
}

}  // namespace
