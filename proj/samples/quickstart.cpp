// Locate the transition at one frequency three ways and compare with the
// closed forms.
#include <cstdio>
#include <vector>

#include "qrm/qrm.hpp"

int main() {
  const double w = 0.1, W = 1.0;

  const auto peak = qrm::find_peak(w, W, qrm::PeakMethod::Ed);
  std::printf("ED QFI peak       g/gc0 = %.5f  (F = %.4g)\n", peak.relative, peak.qfi_max);

  const auto pp_peak = qrm::find_peak(w, W, qrm::PeakMethod::PpFull);
  std::printf("polaron QFI peak  g/gc0 = %.5f\n", pp_peak.relative);

  std::vector<double> grid;
  for (int i = 0; i <= 160; ++i) grid.push_back(0.8 + 0.01 * i);
  const auto root = qrm::acceleration_condition(qrm::continuation_sweep(w, W, grid));
  std::printf("a = 0 root        g/gc0 = %.5f\n", root.estimate.ratio);

  std::printf("gc1 %.5f  gc_xi %.5f  gc2 %.5f\n", qrm::gc1(w, W).ratio, qrm::gc_xi(w, W).ratio,
              qrm::gc2(w, W).ratio);

  const auto at = qrm::ModelParams::from_relative(w, W, peak.relative);
  const auto [state, report] = qrm::ground_state(at);
  std::printf("ground energy %.10f with %d photons kept\n", state.energy, report.final_cutoff);
}
