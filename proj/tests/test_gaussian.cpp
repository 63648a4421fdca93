#include <cmath>
#include <complex>
#include <random>

#include <gtest/gtest.h>

#include "qrm/gaussian.hpp"
#include "support/oracles.hpp"

namespace {

using qrm::GaussianPacket;
using qrm::testing::gaussian_packet;
using qrm::testing::integrate;

double span_of(const GaussianPacket& a, const GaussianPacket& b) {
  return std::max(std::abs(a.shift), std::abs(b.shift)) + 14.0 / std::sqrt(std::min(a.width, b.width));
}

TEST(Overlap, KnownValues) {
  EXPECT_NEAR(qrm::overlap(GaussianPacket{0.0, 1.0}, GaussianPacket{0.0, 4.0}), 2.0 / std::sqrt(5.0), 1e-15);
  for (double xi : {0.3, 1.0, 2.5})
    for (double d : {0.0, 0.7, 3.0})
      EXPECT_NEAR(qrm::overlap(GaussianPacket{0.4, xi}, GaussianPacket{0.4 + d, xi}),
                  std::exp(-xi * d * d / 4.0), 1e-15);
}

TEST(Overlap, RejectsNonPositiveWidth) {
  EXPECT_THROW(qrm::overlap(GaussianPacket{0.0, 0.0}, GaussianPacket{}), qrm::DomainError);
  EXPECT_THROW(qrm::pair_overlaps(GaussianPacket{}, GaussianPacket{1.0, -2.0}), qrm::DomainError);
}

TEST(Overlap, DeficitHasNoCancellation) {
  const GaussianPacket a{0.0, 1.3};
  const GaussianPacket b{1e-9, 1.3};
  EXPECT_NEAR(qrm::overlap_deficit(a, b) / (-std::expm1(-1.3 * 1e-18 / 2.0)), 1.0, 1e-12);
  const GaussianPacket c{-1.1, 0.6};
  const GaussianPacket d{0.5, 2.2};
  const double s = qrm::overlap(c, d);
  EXPECT_NEAR(qrm::overlap_deficit(c, d), 1.0 - s * s, 1e-15);
}

TEST(Moments, MatchQuadrature) {
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> width(0.1, 5.0), shift(-4.0, 4.0);
  for (int trial = 0; trial < 30; ++trial) {
    const GaussianPacket a{shift(rng), width(rng)};
    const GaussianPacket b{shift(rng), width(rng)};
    const double c = shift(rng);
    const double half = span_of(a, b);
    auto fa = [&](double x) { return gaussian_packet(x, a.shift, a.width); };
    auto fb = [&](double x) { return gaussian_packet(x, b.shift, b.width); };
    const double s = integrate([&](double x) { return fa(x) * fb(x); }, half);
    const double x1 = integrate([&](double x) { return x * fa(x) * fb(x); }, half);
    const double x2 = integrate([&](double x) { return (x - c) * (x - c) * fa(x) * fb(x); }, half);
    const double kin = integrate(
        [&](double x) {
          return 0.5 * qrm::testing::derivative(fa, x, 1e-3) * qrm::testing::derivative(fb, x, 1e-3);
        },
        half);
    const double tol = 1e-9 * std::max(s, 1e-300);
    EXPECT_NEAR(qrm::overlap(a, b), s, tol);
    EXPECT_NEAR(qrm::linear_moment(a, b), x1, 1e-9 * std::abs(x1) + tol);
    EXPECT_NEAR(qrm::quadratic_moment(a, b, c), x2, 1e-9 * x2);
    EXPECT_NEAR(qrm::kinetic(a, b), kin, 1e-8 * std::abs(kin) + tol);
  }
}

TEST(Moments, ReflectionMirrorsShift) {
  const GaussianPacket a{0.8, 1.7};
  EXPECT_EQ(qrm::reflected(a).shift, -0.8);
  EXPECT_EQ(qrm::reflected(a).width, 1.7);
  EXPECT_NEAR(qrm::linear_moment(a, a), -0.8, 1e-15);
}

TEST(PairOverlaps, NineFormsMatchQuadratureOracle) {
  std::mt19937 rng(2024);
  std::uniform_real_distribution<double> width(0.1, 5.0), shift(-6.0, 6.0);
  for (int trial = 0; trial < 100; ++trial) {
    const GaussianPacket a{shift(rng), width(rng)};
    const GaussianPacket b{shift(rng), width(rng)};
    const auto o = qrm::pair_overlaps(a, b);
    const auto ref = qrm::testing::pair_overlaps_oracle(a.shift, a.width, b.shift, b.width);
    const double got[9] = {o.overlap, o.ds_left, o.ds_right, o.dw_left, o.dw_right,
                           o.ds_ds,   o.ds_dw,   o.dw_ds,    o.dw_dw};
    // Entries that vanish by accident are compared on the overlap's scale.
    for (int k = 0; k < 9; ++k)
      EXPECT_NEAR(got[k], ref[k], 1e-7 * std::abs(ref[k]) + 1e-10 * ref[0])
          << "entry " << k << " trial " << trial;
  }
}

TEST(PairOverlaps, ComplexStepAgrees) {
  using C = std::complex<double>;
  const double h = 1e-30;
  const GaussianPacket a{0.9, 0.7};
  const GaussianPacket b{-1.4, 2.1};
  const auto o = qrm::pair_overlaps(a, b);
  using P = qrm::BasicPacket<C>;
  const P pa{a.shift, a.width}, pb{b.shift, b.width};
  EXPECT_NEAR(qrm::overlap(P{C(a.shift, h), a.width}, pb).imag() / h, o.ds_left, 1e-14);
  EXPECT_NEAR(qrm::overlap(pa, P{C(b.shift, h), b.width}).imag() / h, o.ds_right, 1e-14);
  EXPECT_NEAR(qrm::overlap(P{a.shift, C(a.width, h)}, pb).imag() / h, o.dw_left, 1e-14);
  EXPECT_NEAR(qrm::overlap(pa, P{b.shift, C(b.width, h)}).imag() / h, o.dw_right, 1e-14);
}

TEST(PairOverlaps, DiagonalShiftTermsVanish) {
  const GaussianPacket a{0.3, 1.9};
  const auto o = qrm::pair_overlaps(a, a);
  EXPECT_NEAR(o.overlap, 1.0, 1e-15);
  EXPECT_NEAR(o.ds_left, 0.0, 1e-15);
  EXPECT_NEAR(o.dw_left, 0.0, 1e-15);
  EXPECT_NEAR(o.ds_ds, 1.9 / 2.0, 1e-14);
  EXPECT_NEAR(o.dw_dw, 1.0 / (8.0 * 1.9 * 1.9), 1e-14);
}

}  // namespace
