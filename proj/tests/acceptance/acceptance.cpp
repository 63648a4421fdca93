// Acceptance gate: one PASS/FAIL line per criterion, exit status 1 if any fail.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <complex>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "qrm/qrm.hpp"
#include "support/oracles.hpp"

namespace {

const std::vector<double> kRatios = {0.005, 0.01, 0.02, 0.05, 0.1, 0.2, 0.3, 0.4, 0.5};

std::vector<double> linspace(double a, double b, int n) {
  std::vector<double> v(n);
  for (int i = 0; i < n; ++i) v[i] = n == 1 ? a : a + (b - a) * i / (n - 1);
  return v;
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void criterion(int id, const char* name, double budget_s, const std::function<Outcome()>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome r;
  try {
    r = body();
  } catch (const std::exception& e) {
    r = {false, std::string("exception: ") + e.what()};
  }
  const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (elapsed > budget_s) {
    r.pass = false;
    r.detail += " [over time budget]";
  }
  std::printf("%s %2d %s: %s (%.1f s)\n", r.pass ? "PASS" : "FAIL", id, name, r.detail.c_str(), elapsed);
  std::fflush(stdout);
  if (!r.pass) ++failures;
}

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

// ED QFI peaks shared by the peak-location and fit criteria.
std::vector<double> peak_ratios;

}  // namespace

int main() {
  criterion(1, "decoupled limit", 1.0, [] {
    double worst_e = 0.0, worst_f = 0.0;
    for (double w : {0.05, 0.1, 0.5, 2.0}) {
      for (double W : {0.5, 1.0}) {
        const qrm::ModelParams p(w, W, 0.0);
        worst_e = std::max(worst_e, std::abs(qrm::ground_state(p).first.energy + W / 2));
        const double f = qrm::qfi_ed(p).qfi_coupling;
        worst_f = std::max(worst_f, std::abs(f / (4.0 / ((w + W) * (w + W))) - 1.0));
      }
    }
    return Outcome{worst_e < 1e-12 && worst_f < 1e-4, fmt("max |E+W/2| = %.2e, max rel F error = %.2e", worst_e, worst_f)};
  });

  criterion(2, "vanishing first-derivative term", 300.0, [] {
    double worst_first = 0.0, worst_rel = 0.0;
    for (double r : {0.05, 0.1, 0.5}) {
      for (double gbar : linspace(0.0, 3.0, 50)) {
        const auto s = qrm::qfi_ed(qrm::ModelParams::from_relative(r, 1.0, gbar));
        const double first = std::abs(s.first_derivative_term);
        // F = 4(<d|d> - |<d|psi>|^2), so |F - 4<d|d>| / F = 4 |<d|psi>|^2 / F.
        worst_first = std::max(worst_first, first);
        worst_rel = std::max(worst_rel, 4.0 * first * first / s.qfi_relative);
      }
    }
    return Outcome{worst_first < 1e-8 && worst_rel < 1e-8,
                   fmt("max |<psi'|psi>| = %.2e, max |F - 4<psi'|psi'>|/F = %.2e", worst_first, worst_rel)};
  });

  criterion(3, "peak location", 3600.0, [] {
    double worst_gc2 = 0.0, least_gc0 = INFINITY;
    for (double r : kRatios) {
      const auto peak = qrm::find_peak(r, 1.0, qrm::PeakMethod::Ed);
      if (peak.flat) return Outcome{false, fmt("no interior QFI maximum at w/W = %g", r)};
      peak_ratios.push_back(peak.relative);
      worst_gc2 = std::max(worst_gc2, std::abs(peak.relative / qrm::gc2(r, 1.0).ratio - 1.0));
      if (r >= 0.05) least_gc0 = std::min(least_gc0, std::abs(peak.relative - 1.0));
    }
    return Outcome{worst_gc2 < 0.01 && least_gc0 > 0.05,
                   fmt("max |gcF/gc2 - 1| = %.2e, min |gcF/gc0 - 1| (w/W >= 0.05) = %.3f", worst_gc2, least_gc0)};
  });

  criterion(4, "series expansions", 10.0, [] {
    const auto t = qrm::taylor_coefficients([](std::complex<double> r) { return qrm::gc1_ratio(r); }, 0.1, 4);
    const double expect[4] = {2.0, 2.0, -4.0, -10.0};
    double taylor_err = 0.0;
    for (int k = 0; k < 4; ++k) taylor_err = std::max(taylor_err, std::abs(t[k] - expect[k]));
    const double dc = qrm::kDefaultSeparation;
    const auto c = qrm::fractional_expansion([dc](double r) { return qrm::gc_xi(r, 1.0, dc).ratio; }, 2);
    const double half = dc / 2.0;
    const double frac_err = std::max(std::abs(c[0] - std::pow(half, 4.0 / 3.0)),
                                     std::abs(c[1] - 7.0 / 6.0 * std::pow(half, 8.0 / 3.0)));
    return Outcome{taylor_err < 1e-4 && frac_err < 1e-3,
                   fmt("gc1 Taylor max error %.2e, gc_xi fractional max error %.2e", taylor_err, frac_err)};
  });

  criterion(5, "squeezing coupling self-consistency", 1.0, [] {
    double worst = 0.0;
    for (int i = 0; i < 200; ++i) {
      const double r = 1e-4 * std::pow(1e4, i / 199.0);
      const auto e = qrm::gc_xi(r, 1.0);
      worst = std::max(worst, std::abs(qrm::separation_residual(r, 1.0, e.value, qrm::kDefaultSeparation, true)));
    }
    return Outcome{worst < 1e-10, fmt("max relative residual %.2e over w/W in [1e-4, 1]", worst)};
  });

  criterion(6, "overlap and derivative closed forms", 60.0, [] {
    std::mt19937 rng(20240601);
    std::uniform_real_distribution<double> width(0.2, 4.0), shift(-3.0, 3.0);
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
      const qrm::GaussianPacket a{shift(rng), width(rng)};
      const qrm::GaussianPacket b{shift(rng), width(rng)};
      const auto o = qrm::pair_overlaps(a, b);
      const auto ref = qrm::testing::pair_overlaps_oracle(a.shift, a.width, b.shift, b.width);
      const double got[9] = {o.overlap, o.ds_left, o.ds_right, o.dw_left, o.dw_right,
                             o.ds_ds,   o.ds_dw,   o.dw_ds,    o.dw_dw};
      for (int k = 0; k < 9; ++k) worst = std::max(worst, std::abs(got[k] - ref[k]) / std::abs(ref[k]));
    }
    return Outcome{worst < 1e-7, fmt("max relative deviation %.2e over 100 draws x 9 forms", worst)};
  });

  criterion(7, "polaron fidelity to exact", 600.0, [] {
    const double r = 0.1;
    double worst_qfi = 0.0;
    for (double gbar : linspace(0.8, 1.6, 41)) {
      const double ed = qrm::qfi_ed(qrm::ModelParams::from_relative(r, 1.0, gbar)).qfi_relative;
      const double pp = qrm::qfi_pp_at(r, 1.0, gbar).qfi_relative;
      worst_qfi = std::max(worst_qfi, std::abs(pp / ed - 1.0));
    }
    const double peak = qrm::find_peak(r, 1.0, qrm::PeakMethod::Ed).relative;
    const auto past = linspace(peak, 2.5, 41);
    const auto ed_x = qrm::susceptibility_sweep(r, 1.0, past, qrm::ObservableMethod::Ed);
    const auto pp_x = qrm::susceptibility_sweep(r, 1.0, past, qrm::ObservableMethod::Pp);
    double worst_x = 0.0;
    for (std::size_t i = 0; i < past.size(); ++i)
      worst_x = std::max({worst_x, std::abs(pp_x[i].x_plus / ed_x[i].x_plus - 1.0),
                          std::abs(pp_x[i].x_minus / ed_x[i].x_minus - 1.0)});
    double worst_bound = INFINITY;
    for (double gbar : linspace(0.0, 3.0, 31)) {
      const auto p = qrm::ModelParams::from_relative(r, 1.0, gbar);
      worst_bound = std::min(worst_bound, qrm::optimize(p).energy - qrm::ground_state(p).first.energy);
    }
    return Outcome{worst_qfi < 0.10 && worst_x < 0.02 && worst_bound >= 0.0,
                   fmt("max QFI deviation %.3f on [0.8,1.6], max <x> deviation %.2e past gcF, min E_pp - E_ed = %.2e",
                       worst_qfi, worst_x, worst_bound)};
  });

  criterion(8, "triple bridge", 600.0, [] {
    const double r = 0.1;
    const double peak = qrm::find_peak(r, 1.0, qrm::PeakMethod::Ed).relative;
    const auto grid = linspace(0.9, 1.7, 321);
    const double root = qrm::acceleration_condition(qrm::continuation_sweep(r, 1.0, grid)).estimate.ratio;
    const auto chi = qrm::susceptibility_sweep(r, 1.0, grid, qrm::ObservableMethod::Ed);
    std::size_t best = 0;
    for (std::size_t i = 1; i < chi.size(); ++i)
      if (chi[i].susceptibility > chi[best].susceptibility) best = i;
    const double chi_max = grid[best];
    const double spread = std::max({std::abs(root / peak - 1.0), std::abs(chi_max / peak - 1.0),
                                    std::abs(chi_max / root - 1.0)});
    return Outcome{spread < 0.03, fmt("F peak %.4f, a=0 root %.4f, susceptibility peak %.4f (g/gc0)", peak, root, chi_max)};
  });

  criterion(9, "fit basis comparison", 60.0, [] {
    if (peak_ratios.size() != kRatios.size()) return Outcome{false, "peak data unavailable"};
    std::vector<qrm::FitPoint> data;
    for (std::size_t i = 0; i < kRatios.size(); ++i) data.push_back({kRatios[i], peak_ratios[i] - 1.0});
    const auto frac = qrm::fit_fractional(data, 2);
    const auto integer = qrm::fit_fourier(data, 2);
    const double c1 = frac.coefficients[0];
    return Outcome{5.0 * frac.residual_sum_squares <= integer.residual_sum_squares && std::abs(c1 / 1.3715 - 1.0) < 0.10,
                   fmt("rss fractional %.2e vs integer %.2e, c1 = %.4f", frac.residual_sum_squares,
                       integer.residual_sum_squares, c1)};
  });

  criterion(10, "coincidence map", 3600.0, [] {
    const auto ratios = linspace(0.02, 0.5, 25);
    const auto grid = linspace(0.8, 2.0, 121);
    const auto m = qrm::coincidence_map(ratios, grid, 1);
    const double cell = grid[1] - grid[0];
    double worst_cells = 0.0, worst_gc2 = 0.0;
    for (std::size_t i = 0; i < ratios.size(); ++i) {
      if (!m.row_ok[i]) return Outcome{false, "row failed at w/W = " + std::to_string(ratios[i]) + ": " + m.row_error[i]};
      worst_cells = std::max(worst_cells, std::abs(m.qfi_argmax[i] - m.susceptibility_argmax[i]) / cell);
      worst_gc2 = std::max({worst_gc2, std::abs(m.qfi_argmax[i] / m.gc2_overlay[i] - 1.0),
                            std::abs(m.susceptibility_argmax[i] / m.gc2_overlay[i] - 1.0)});
    }
    return Outcome{worst_cells <= 2.0 + 1e-9 && worst_gc2 < 0.02,
                   fmt("max argmax separation %.0f cells, max ridge deviation from gc2 %.3f", worst_cells, worst_gc2)};
  });

  std::printf("%d criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
