#pragma once

// Displacement <x>_sigma of the spin components, its coupling derivative (the
// single-photon absorption susceptibility), and frequency-by-coupling maps
// comparing that derivative with the QFI.

#include <algorithm>
#include <cmath>
#include <future>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "qrm/critical.hpp"
#include "qrm/ed_solver.hpp"
#include "qrm/errors.hpp"
#include "qrm/gaussian.hpp"
#include "qrm/polaron.hpp"
#include "qrm/qfi.hpp"

namespace qrm {

/// <x>_+ = sum_ij w_i w_j <phi_i|x|phi_j> for the spin-up component.
inline double x_expectation_pp(const PolaronAnsatz& ansatz, const ModelParams& params) {
  const auto p = ansatz.packets(params.displacement());
  const auto w = ansatz.weights();
  double s = 0.0;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) s += w[i] * w[j] * linear_moment(p[i], p[j]);
  return s;
}

enum class ObservableMethod { Ed, Pp };

struct ObservableSample {
  double coupling = 0.0;
  double relative = 0.0;
  double x_plus = 0.0;
  double x_minus = 0.0;
  double abs_x = 0.0;
  double susceptibility = 0.0;  ///< d|<x>|/dg
  double velocity = std::numeric_limits<double>::quiet_NaN();      ///< d x_p / dg (PP)
  double acceleration = std::numeric_limits<double>::quiet_NaN();  ///< d^2 x_p / dg^2 (PP)
};

namespace detail {

/// Central differences inside the grid, one-sided at the ends. Zero-width
/// intervals (repeated grid points) contribute a zero slope.
inline std::vector<double> grid_derivative(std::span<const double> x, std::span<const double> y) {
  const std::size_t n = x.size();
  std::vector<double> d(n, 0.0);
  if (n < 2) return d;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t lo = i == 0 ? 0 : i - 1;
    const std::size_t hi = i + 1 == n ? n - 1 : i + 1;
    const double dx = x[hi] - x[lo];
    d[i] = dx > 0.0 ? (y[hi] - y[lo]) / dx : 0.0;
  }
  return d;
}

inline void require_non_decreasing(std::span<const double> grid) {
  for (std::size_t i = 1; i < grid.size(); ++i)
    if (grid[i] < grid[i - 1]) throw DomainError("coupling grid must be ascending");
}

}  // namespace detail

/// |<x>| and its g-derivative along a grid of relative couplings.
inline std::vector<ObservableSample> susceptibility_sweep(double frequency, double splitting,
                                                          std::span<const double> gbar_grid,
                                                          ObservableMethod method,
                                                          const SolverOptions& solver = {}) {
  detail::require_non_decreasing(gbar_grid);
  const double base = 0.5 * std::sqrt(frequency * splitting);
  std::vector<ObservableSample> out(gbar_grid.size());
  std::vector<double> g(gbar_grid.size());
  std::vector<double> absx(gbar_grid.size());
  if (method == ObservableMethod::Ed) {
    for (std::size_t i = 0; i < gbar_grid.size(); ++i) {
      const auto params = ModelParams::from_relative(frequency, splitting, gbar_grid[i]);
      const auto x = expectation_x(ground_state(params, solver).first);
      out[i].x_plus = x.plus;
      out[i].x_minus = x.minus;
    }
  } else {
    const auto sweep = continuation_sweep(frequency, splitting, gbar_grid);
    const double scale = std::sqrt(splitting / (2.0 * frequency));
    for (std::size_t i = 0; i < gbar_grid.size(); ++i) {
      const double xp = x_expectation_pp(sweep.states[i], sweep.params_at(i));
      out[i].x_plus = xp;
      out[i].x_minus = -xp;
    }
    for (const auto& k : polaron_kinematics(sweep)) {
      const auto it = std::find(gbar_grid.begin(), gbar_grid.end(), k.gbar);
      auto& s = out[static_cast<std::size_t>(it - gbar_grid.begin())];
      s.velocity = scale * k.velocity / base;
      s.acceleration = scale * k.acceleration / (base * base);
    }
  }
  for (std::size_t i = 0; i < gbar_grid.size(); ++i) {
    out[i].relative = gbar_grid[i];
    out[i].coupling = g[i] = gbar_grid[i] * base;
    out[i].abs_x = absx[i] = std::abs(out[i].x_plus);
  }
  const auto d = detail::grid_derivative(g, absx);
  for (std::size_t i = 0; i < out.size(); ++i) out[i].susceptibility = d[i];
  return out;
}

/// Row-normalized QFI and susceptibility over (frequency ratio, gbar).
struct CoincidenceMap {
  std::vector<double> ratios;  ///< w / W per row
  std::vector<double> gbar;    ///< columns
  Eigen::MatrixXd qfi;
  Eigen::MatrixXd susceptibility;
  std::vector<bool> row_ok;
  std::vector<std::string> row_error;
  std::vector<double> qfi_argmax;  ///< gbar of the row maximum, NaN for failed rows
  std::vector<double> susceptibility_argmax;
  std::vector<double> gc2_overlay;  ///< gc2 / gc0 per row (gc0 overlay is 1)
};

struct MapRow {
  std::vector<double> qfi;
  std::vector<double> susceptibility;
};

inline MapRow coincidence_row(double ratio, std::span<const double> gbar_grid,
                              const QfiOptions& opt = {}) {
  MapRow row;
  for (double gb : gbar_grid)
    row.qfi.push_back(qfi_ed(ModelParams::from_relative(ratio, 1.0, gb), opt).qfi_relative);
  for (const auto& s : susceptibility_sweep(ratio, 1.0, gbar_grid, ObservableMethod::Ed, opt.solver))
    row.susceptibility.push_back(s.susceptibility);
  return row;
}

inline CoincidenceMap coincidence_map(std::span<const double> ratios,
                                      std::span<const double> gbar_grid, int jobs = 1,
                                      const QfiOptions& opt = {}) {
  for (std::size_t i = 1; i < ratios.size(); ++i)
    if (!(ratios[i] > ratios[i - 1])) throw DomainError("frequency grid must be ascending");
  for (std::size_t i = 1; i < gbar_grid.size(); ++i)
    if (!(gbar_grid[i] > gbar_grid[i - 1])) throw DomainError("coupling grid must be ascending");
  CoincidenceMap m;
  m.ratios.assign(ratios.begin(), ratios.end());
  m.gbar.assign(gbar_grid.begin(), gbar_grid.end());
  const auto rows = static_cast<Eigen::Index>(ratios.size());
  const auto cols = static_cast<Eigen::Index>(gbar_grid.size());
  m.qfi = Eigen::MatrixXd::Zero(rows, cols);
  m.susceptibility = Eigen::MatrixXd::Zero(rows, cols);
  m.row_ok.assign(ratios.size(), false);
  m.row_error.assign(ratios.size(), "");
  const double nan = std::numeric_limits<double>::quiet_NaN();
  m.qfi_argmax.assign(ratios.size(), nan);
  m.susceptibility_argmax.assign(ratios.size(), nan);
  for (double r : ratios) m.gc2_overlay.push_back(gc2(r, 1.0).ratio);

  // Rows are independent; at most `jobs` in flight, results gathered in order.
  const std::size_t width = static_cast<std::size_t>(std::max(1, jobs));
  for (std::size_t start = 0; start < ratios.size(); start += width) {
    std::vector<std::future<MapRow>> batch;
    for (std::size_t i = start; i < std::min(ratios.size(), start + width); ++i)
      batch.push_back(std::async(std::launch::async, [&, i] {
        return coincidence_row(ratios[i], gbar_grid, opt);
      }));
    for (std::size_t k = 0; k < batch.size(); ++k) {
      const std::size_t i = start + k;
      try {
        const MapRow row = batch[k].get();
        const Eigen::Map<const Eigen::RowVectorXd> q(row.qfi.data(), cols);
        const Eigen::Map<const Eigen::RowVectorXd> s(row.susceptibility.data(), cols);
        Eigen::Index iq, is;
        const double qmax = q.maxCoeff(&iq);
        const double smax = s.maxCoeff(&is);
        if (!(qmax > 0.0) || !(smax > 0.0)) throw Error("row has no positive maximum");
        m.qfi.row(static_cast<Eigen::Index>(i)) = q / qmax;
        m.susceptibility.row(static_cast<Eigen::Index>(i)) = s / smax;
        m.qfi_argmax[i] = gbar_grid[static_cast<std::size_t>(iq)];
        m.susceptibility_argmax[i] = gbar_grid[static_cast<std::size_t>(is)];
        m.row_ok[i] = true;
      } catch (const Error& e) {
        m.row_error[i] = e.what();
      }
    }
  }
  return m;
}

}  // namespace qrm
