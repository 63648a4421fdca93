#include <iostream>
#include <thread>

#include <CLI11.hpp>

#include "commands.hpp"

namespace {

using qrm::cli::RunConfig;

void add_common(CLI::App* sub, RunConfig& c) {
  sub->add_option("--omega-ratio,--freq", c.ratios, "w/W values")->capture_default_str();
  sub->add_option("--splitting", c.splitting, "Qubit splitting W (energy unit of w and g)")->capture_default_str();
  sub->add_option("--gbar-min", c.gbar_min, "Lowest g/gc0 on the grid")->capture_default_str();
  sub->add_option("--gbar-max", c.gbar_max, "Highest g/gc0 on the grid")->capture_default_str();
  sub->add_option("--gbar-steps", c.gbar_steps, "Grid points, endpoints included")->capture_default_str();
  sub->add_option("--method", c.method, "ed, pp or both")->capture_default_str();
  sub->add_option("--tol", c.tol, "Relative ground-energy tolerance for the photon cutoff")->capture_default_str();
  sub->add_option("--step-h", c.step_h, "QFI finite-difference step in units of gc0")->capture_default_str();
  sub->add_option("--dc1", c.dc1, "Polaron separation at the transition for gc_xi")->capture_default_str();
  sub->add_option("--gc2-variant", c.gc2_variant, "alphaFS, fourThirds or fitted")->capture_default_str();
  sub->add_option("--out", c.out, "Output directory")->capture_default_str();
  sub->add_option("--cache", c.cache, "Cache directory (QRM_CACHE_DIR overrides)")->capture_default_str();
  sub->add_option("--jobs", c.jobs, "Worker threads")->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Quantum Rabi model transition: QFI sweeps, critical couplings, fits and maps"};
  app.require_subcommand(1, 1);
  RunConfig c;
  c.jobs = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));

  struct Spec {
    const char* name;
    const char* help;
  };
  const Spec specs[] = {
      {"qfi-sweep", "QFI curves per frequency (g, g/gc0, g/gc2 scalings) to qfi_sweep_r<w>.csv"},
      {"gc", "Closed-form critical couplings, plus cached QFI peaks and a=0 roots, to gc.csv"},
      {"fit", "Fractional and integer power fits of the QFI peak, n = 2..9, to fit.json"},
      {"map", "Row-normalized QFI and susceptibility matrices with overlays (default grid 0.8..2.0, 121 points)"},
      {"pp-sweep", "Two-polaron parameters, <x> and QFI per grid point"},
      {"verify", "Quick invariant checks"},
  };
  for (const auto& s : specs) {
    auto* sub = app.add_subcommand(s.name, s.help);
    add_common(sub, c);
    sub->callback([&c, name = s.name] { c.command = name; });
    if (std::string_view(s.name) == "gc")
      sub->add_flag("--with-peaks", c.with_peaks, "Compute missing QFI peaks and a=0 roots");
    if (std::string_view(s.name) == "map") {
      sub->add_option("--rows", c.map_rows, "Number of frequencies")->capture_default_str();
      sub->add_option("--ratio-min", c.map_ratio_min, "Lowest w/W")->capture_default_str();
      sub->add_option("--ratio-max", c.map_ratio_max, "Highest w/W")->capture_default_str();
    }
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return qrm::cli::kConfigError;
  }

  if (c.command == "map") {
    // The map has its own default window around the transition.
    auto* sub = app.get_subcommand("map");
    if (sub->count("--gbar-min") == 0) c.gbar_min = 0.8;
    if (sub->count("--gbar-max") == 0) c.gbar_max = 2.0;
    if (sub->count("--gbar-steps") == 0) c.gbar_steps = 121;
  }

  try {
    qrm::cli::validate(c);
    if (c.command == "qfi-sweep") return qrm::cli::cmd_qfi_sweep(c);
    if (c.command == "gc") return qrm::cli::cmd_gc(c);
    if (c.command == "fit") return qrm::cli::cmd_fit(c);
    if (c.command == "map") return qrm::cli::cmd_map(c);
    if (c.command == "pp-sweep") return qrm::cli::cmd_pp_sweep(c);
    return qrm::cli::cmd_verify(c);
  } catch (const qrm::cli::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return qrm::cli::kConfigError;
  } catch (const qrm::NonConvergenceError& e) {
    std::cerr << "nonconvergence: " << e.what() << '\n';
    return qrm::cli::kNonConvergence;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return qrm::cli::kPartialFailure;
  }
}
