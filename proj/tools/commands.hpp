#pragma once

// Subcommand implementations for the qrm tool. Each returns a process exit code.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <future>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "qrm/qrm.hpp"

namespace qrm::cli {

namespace fs = std::filesystem;

enum ExitCode : int { kOk = 0, kConfigError = 2, kPartialFailure = 3, kNonConvergence = 4 };

inline const std::vector<double> kDefaultRatios = {0.005, 0.01, 0.02, 0.05, 0.1, 0.2, 0.3, 0.4, 0.5};

class ConfigError : public Error {
 public:
  using Error::Error;
};

struct RunConfig {
  std::string command;
  std::vector<double> ratios = kDefaultRatios;
  double splitting = 1.0;
  double gbar_min = 0.5;
  double gbar_max = 3.0;
  int gbar_steps = 101;
  std::string method = "ed";
  double tol = 1e-10;
  double step_h = 1e-4;
  double dc1 = kDefaultSeparation;
  std::string gc2_variant = "alphaFS";
  fs::path out = ".";
  fs::path cache = ".qrm-cache";
  int jobs = 1;
  bool with_peaks = false;
  int map_rows = 25;
  double map_ratio_min = 0.02;
  double map_ratio_max = 0.5;
};

inline void validate(const RunConfig& c) {
  if (c.ratios.empty()) throw ConfigError("at least one --omega-ratio is required");
  for (double r : c.ratios)
    if (!(r > 0.0) || !std::isfinite(r)) throw ConfigError("--omega-ratio values must be positive");
  if (!(c.splitting > 0.0)) throw ConfigError("--splitting must be positive");
  if (!(c.gbar_min >= 0.0) || !(c.gbar_max > c.gbar_min))
    throw ConfigError("need 0 <= --gbar-min < --gbar-max");
  if (c.gbar_steps < 2) throw ConfigError("--gbar-steps must be at least 2");
  if (c.method != "ed" && c.method != "pp" && c.method != "both")
    throw ConfigError("--method must be ed, pp or both");
  if (!(c.tol > 0.0)) throw ConfigError("--tol must be positive");
  if (!(c.step_h > 0.0)) throw ConfigError("--step-h must be positive");
  if (!(c.dc1 > 0.0)) throw ConfigError("--dc1 must be positive");
  if (c.jobs < 1) throw ConfigError("--jobs must be at least 1");
  if (c.map_rows < 1 || !(c.map_ratio_min > 0.0) || !(c.map_ratio_max >= c.map_ratio_min))
    throw ConfigError("map rows and ratio range must be positive and ascending");
  try {
    parse_gc2_variant(c.gc2_variant);
  } catch (const DomainError& e) {
    throw ConfigError(e.what());
  }
}

inline fs::path cache_dir(const RunConfig& c) {
  if (const char* env = std::getenv("QRM_CACHE_DIR"); env && *env) return env;
  return c.cache;
}

inline std::vector<double> gbar_grid(const RunConfig& c) {
  std::vector<double> g(c.gbar_steps);
  for (int i = 0; i < c.gbar_steps; ++i)
    g[i] = c.gbar_min + (c.gbar_max - c.gbar_min) * i / (c.gbar_steps - 1);
  return g;
}

inline QfiOptions qfi_options(const RunConfig& c) {
  QfiOptions o;
  o.step = c.step_h;
  o.solver.tol = c.tol;
  return o;
}

/// Shortest round-trip form, for file names and column labels.
inline std::string ratio_tag(double r) {
  char buf[32];
  return {buf, std::to_chars(buf, buf + sizeof buf, r).ptr};
}

inline std::ofstream open_output(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out.precision(17);
  return out;
}

/// Evaluates f(i) for i in [0, n) on up to `jobs` threads; results keep index order.
template <class T, class F>
std::vector<T> parallel_map(std::size_t n, int jobs, F f) {
  std::vector<T> out(n);
  const std::size_t batch = static_cast<std::size_t>(std::max(1, jobs));
  for (std::size_t start = 0; start < n; start += batch) {
    std::vector<std::future<T>> running;
    for (std::size_t i = start; i < std::min(n, start + batch); ++i)
      running.push_back(std::async(jobs > 1 ? std::launch::async : std::launch::deferred, f, i));
    for (std::size_t i = 0; i < running.size(); ++i) out[start + i] = running[i].get();
  }
  return out;
}

struct PointResult {
  double qfi = 0.0;  ///< F with respect to g
  std::string status = "ok";
  bool nonconvergence = false;
};

inline PointResult guarded(const std::function<double()>& f) {
  PointResult r;
  try {
    r.qfi = f();
    if (!std::isfinite(r.qfi)) throw Error("non-finite QFI");
  } catch (const NonConvergenceError&) {
    r = {0.0, "nonconvergence", true};
  } catch (const OptimizerError&) {
    r = {0.0, "nonconvergence", true};
  } catch (const Error& e) {
    r = {0.0, std::string("error: ") + e.what(), false};
    std::replace(r.status.begin(), r.status.end(), ',', ';');
    std::replace(r.status.begin(), r.status.end(), '\n', ' ');
  }
  return r;
}

struct FailureTally {
  std::size_t points = 0;
  std::size_t failed = 0;
  std::size_t nonconverged = 0;

  void add(const std::vector<std::string>& status) {
    for (const auto& s : status) {
      ++points;
      if (s != "ok") ++failed;
      if (s == "nonconvergence") ++nonconverged;
    }
  }

  int exit_code() const {
    if (points == 0 || 10 * failed <= points) return kOk;
    return nonconverged == failed ? kNonConvergence : kPartialFailure;
  }
};

/// One QFI curve per frequency, computed or taken from the cache.
inline SweepRecord qfi_record(const RunConfig& c, double ratio, bool& hit) {
  const double w = ratio * c.splitting;
  SweepKey key;
  key.frequency = w;
  key.splitting = c.splitting;
  key.grid = {c.gbar_min, c.gbar_max, c.gbar_steps};
  key.method = "qfi-" + c.method + "-" + c.gc2_variant;
  key.tolerance = c.tol;
  key.step = c.step_h;
  const auto dir = cache_dir(c);
  if (auto cached = lookup(dir, sweep_hash(key))) {
    hit = true;
    return *cached;
  }
  hit = false;

  const auto grid = gbar_grid(c);
  const auto opt = qfi_options(c);
  const double base = 0.5 * std::sqrt(w * c.splitting);
  const double gc2_value = gc2(w, c.splitting, parse_gc2_variant(c.gc2_variant)).value;
  const bool ed = c.method != "pp", pp = c.method != "ed";

  std::vector<PointResult> ed_points, pp_points;
  if (ed)
    ed_points = parallel_map<PointResult>(grid.size(), c.jobs, [&](std::size_t i) {
      return guarded([&] { return qfi_ed(ModelParams::from_relative(w, c.splitting, grid[i]), opt).qfi_coupling; });
    });
  if (pp)
    pp_points = parallel_map<PointResult>(grid.size(), c.jobs, [&](std::size_t i) {
      return guarded([&] { return qfi_pp_at(w, c.splitting, grid[i]).qfi_coupling; });
    });

  auto top = [](const std::vector<PointResult>& v) {
    double m = 0.0;
    for (const auto& p : v) m = std::max(m, p.qfi);
    return m;
  };
  const double ed_max = top(ed_points), pp_max = top(pp_points);

  SweepRecord rec;
  rec.key = key;
  rec.columns = {"g", "gbar", "g_over_gc2"};
  if (c.method == "both") {
    rec.columns.insert(rec.columns.end(), {"F_ed", "F_ed_over_max", "F_pp", "F_pp_over_max"});
  } else {
    rec.columns.insert(rec.columns.end(), {"F", "F_over_max"});
  }
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double g = grid[i] * base;
    std::vector<double> row = {g, grid[i], g / gc2_value};
    std::string status = "ok";
    auto append = [&](const PointResult& p, double m) {
      row.push_back(p.qfi);
      row.push_back(m > 0.0 ? p.qfi / m : 0.0);
      if (p.status != "ok") status = p.status;
    };
    if (ed) append(ed_points[i], ed_max);
    if (pp) append(pp_points[i], pp_max);
    rec.rows.push_back(std::move(row));
    rec.status.push_back(status);
  }
  store(dir, rec);
  return rec;
}

inline void write_csv(const SweepRecord& rec, const fs::path& path) {
  auto out = open_output(path);
  for (const auto& name : rec.columns) out << name << ',';
  out << "status\n";
  for (std::size_t i = 0; i < rec.rows.size(); ++i) {
    for (double v : rec.rows[i]) out << detail::format_double(v) << ',';
    out << rec.status[i] << '\n';
  }
}

inline int cmd_qfi_sweep(const RunConfig& c) {
  FailureTally tally;
  for (double r : c.ratios) {
    bool hit = false;
    const auto rec = qfi_record(c, r, hit);
    const auto path = c.out / ("qfi_sweep_r" + ratio_tag(r) + ".csv");
    write_csv(rec, path);
    tally.add(rec.status);
    std::cerr << "w/W=" << r << (hit ? " cached " : " computed ") << path.string() << '\n';
  }
  return tally.exit_code();
}

// Cached single-number estimates per frequency.

inline SweepKey estimate_key(const RunConfig& c, double ratio, const std::string& kind,
                             const GridSpec& grid) {
  SweepKey key;
  key.frequency = ratio * c.splitting;
  key.splitting = c.splitting;
  key.grid = grid;
  key.method = kind;
  key.tolerance = c.tol;
  key.step = c.step_h;
  return key;
}

inline const PeakOptions kPeakScan{};
inline const GridSpec kAccelerationGrid{0.8, 2.4, 161};

inline GridSpec peak_grid() { return {kPeakScan.gbar_min, kPeakScan.gbar_max, kPeakScan.scan_points}; }

/// ED QFI peak (gbar); nullopt when absent from the cache and `compute` is false.
inline std::optional<double> qfi_peak(const RunConfig& c, double ratio, bool compute) {
  const auto key = estimate_key(c, ratio, "peak-ed", peak_grid());
  const auto dir = cache_dir(c);
  if (auto cached = lookup(dir, sweep_hash(key))) return cached->rows.at(0).at(0);
  if (!compute) return std::nullopt;
  PeakOptions opt = kPeakScan;
  opt.qfi = qfi_options(c);
  const auto peak = find_peak(ratio * c.splitting, c.splitting, PeakMethod::Ed, opt);
  SweepRecord rec;
  rec.key = key;
  rec.columns = {"gbar", "F_max", "bracket_low", "bracket_high"};
  rec.rows = {{peak.relative, peak.qfi_max, peak.bracket_low, peak.bracket_high}};
  rec.status = {peak.flat ? "flat" : "ok"};
  store(dir, rec);
  return peak.relative;
}

inline std::optional<double> acceleration_root(const RunConfig& c, double ratio, bool compute) {
  const auto key = estimate_key(c, ratio, "accel-pp", kAccelerationGrid);
  const auto dir = cache_dir(c);
  if (auto cached = lookup(dir, sweep_hash(key))) return cached->rows.at(0).at(0);
  if (!compute) return std::nullopt;
  std::vector<double> grid(kAccelerationGrid.steps);
  for (int i = 0; i < kAccelerationGrid.steps; ++i)
    grid[i] = kAccelerationGrid.gbar_min +
              (kAccelerationGrid.gbar_max - kAccelerationGrid.gbar_min) * i / (kAccelerationGrid.steps - 1);
  const auto root = acceleration_condition(continuation_sweep(ratio * c.splitting, c.splitting, grid));
  SweepRecord rec;
  rec.key = key;
  rec.columns = {"gbar", "crossing", "velocity"};
  rec.rows = {{root.estimate.ratio, root.crossing, root.velocity}};
  rec.status = {"ok"};
  store(dir, rec);
  return root.estimate.ratio;
}

inline int cmd_gc(const RunConfig& c) {
  const auto variant = parse_gc2_variant(c.gc2_variant);
  auto out = open_output(c.out / "gc.csv");
  out << "omega_ratio,scaling,gc0,gc1,gcxi,gc2_alphaFS,gc2_fourThirds,gc2_fitted,gcF,g_accel\n";
  for (double r : c.ratios) {
    const double w = r * c.splitting;
    const double base = gc0(w, c.splitting).value;
    const double g2 = gc2(w, c.splitting, variant).value;
    std::optional<double> peak, accel;
    try {
      peak = qfi_peak(c, r, c.with_peaks);
      accel = acceleration_root(c, r, c.with_peaks);
    } catch (const Error& e) {
      std::cerr << "w/W=" << r << ": " << e.what() << '\n';
    }
    const std::vector<std::optional<double>> values = {
        base,
        gc1(w, c.splitting).value,
        gc_xi(w, c.splitting, c.dc1).value,
        gc2(w, c.splitting, Gc2Variant::AlphaFs).value,
        gc2(w, c.splitting, Gc2Variant::FourThirds).value,
        gc2(w, c.splitting, Gc2Variant::Fitted).value,
        peak ? std::optional<double>(*peak * base) : std::nullopt,
        accel ? std::optional<double>(*accel * base) : std::nullopt};
    for (auto [name, scale] : {std::pair{"g", 1.0}, {"g_over_gc0", base}, {"g_over_gc2", g2}}) {
      out << detail::format_double(r) << ',' << name;
      for (const auto& v : values) {
        out << ',';
        if (v) out << detail::format_double(*v / scale);
      }
      out << '\n';
    }
  }
  return kOk;
}

inline int cmd_fit(const RunConfig& c) {
  std::vector<FitPoint> data;
  for (double r : c.ratios) data.push_back({r, *qfi_peak(c, r, true) - 1.0});
  if (data.size() < 3) throw ConfigError("fit needs at least three frequencies");
  nlohmann::json doc = {{"data", nlohmann::json::array()}, {"fits", nlohmann::json::array()}};
  for (const auto& p : data) doc["data"].push_back({{"omega_ratio", p.ratio}, {"gcF_over_gc0", 1.0 + p.shift}});
  for (auto basis : {FitBasis::FractionalPowers, FitBasis::IntegerPowers}) {
    for (int order = 2; order <= 9; ++order) {
      nlohmann::json entry = {{"basis", to_string(basis)}, {"order", order}};
      if (static_cast<std::size_t>(order) > data.size()) {
        entry["error"] = "insufficient data points";
      } else {
        try {
          const auto fit = basis == FitBasis::FractionalPowers ? fit_fractional(data, order) : fit_fourier(data, order);
          entry["coefficients"] = fit.coefficients;
          entry["residual_sum_squares"] = fit.residual_sum_squares;
        } catch (const Error& e) {
          entry["error"] = e.what();
        }
      }
      doc["fits"].push_back(entry);
    }
  }
  auto out = open_output(c.out / "fit.json");
  out << doc.dump(2) << '\n';
  return kOk;
}

inline int cmd_map(const RunConfig& c) {
  std::vector<double> ratios(c.map_rows);
  for (int i = 0; i < c.map_rows; ++i)
    ratios[i] = c.map_rows == 1 ? c.map_ratio_min
                                : c.map_ratio_min + (c.map_ratio_max - c.map_ratio_min) * i / (c.map_rows - 1);
  const auto grid = gbar_grid(c);
  const auto m = coincidence_map(ratios, grid, c.jobs, qfi_options(c));
  auto write_matrix = [&](const Eigen::MatrixXd& mat, const fs::path& path) {
    auto out = open_output(path);
    out << "omega_ratio";
    for (double g : grid) out << ",gbar=" << ratio_tag(g);
    out << '\n';
    for (Eigen::Index i = 0; i < mat.rows(); ++i) {
      out << detail::format_double(ratios[i]);
      for (Eigen::Index j = 0; j < mat.cols(); ++j) out << ',' << detail::format_double(mat(i, j));
      out << '\n';
    }
  };
  write_matrix(m.qfi, c.out / "map_qfi.csv");
  write_matrix(m.susceptibility, c.out / "map_susceptibility.csv");
  auto out = open_output(c.out / "map_overlay.csv");
  out << "omega_ratio,gc0_over_gc0,gc2_over_gc0,qfi_argmax,susceptibility_argmax,status\n";
  std::vector<std::string> status;
  for (std::size_t i = 0; i < ratios.size(); ++i) {
    status.push_back(m.row_ok[i] ? "ok" : "failed");
    out << detail::format_double(ratios[i]) << ",1," << detail::format_double(m.gc2_overlay[i]) << ',';
    if (m.row_ok[i])
      out << detail::format_double(m.qfi_argmax[i]) << ',' << detail::format_double(m.susceptibility_argmax[i]);
    else
      out << ',';
    out << ',' << status.back() << '\n';
  }
  FailureTally tally;
  tally.add(status);
  return tally.exit_code() == kOk ? kOk : kPartialFailure;
}

inline int cmd_pp_sweep(const RunConfig& c) {
  FailureTally tally;
  const auto grid = gbar_grid(c);
  for (double r : c.ratios) {
    const double w = r * c.splitting;
    struct Row {
      std::vector<double> values;
      std::string status = "ok";
    };
    const auto rows = parallel_map<Row>(grid.size(), c.jobs, [&](std::size_t i) {
      Row row;
      try {
        const auto sweep = local_sweep(w, c.splitting, grid[i], kLocalSweepStep);
        const auto& s = sweep.states[2];
        const auto p = sweep.params_at(2);
        const auto full = qfi_pp_full(sweep, 2);
        const auto simple = qfi_pp_simplified(sweep, 2);
        row.values = {p.coupling(), grid[i], s.energy, s.alpha, s.beta, s.zeta_alpha, s.zeta_beta,
                      s.xi_alpha, s.xi_beta, x_expectation_pp(s, p), full.qfi_coupling,
                      simple.sample.qfi_coupling};
      } catch (const Error& e) {
        row.values.assign(12, 0.0);
        row.values[1] = grid[i];
        row.status = dynamic_cast<const OptimizerError*>(&e) ? "nonconvergence" : "error";
      }
      return row;
    });
    auto out = open_output(c.out / ("pp_sweep_r" + ratio_tag(r) + ".csv"));
    out << "g,gbar,energy,alpha,beta,zeta_alpha,zeta_beta,xi_alpha,xi_beta,x_plus,F_full,F_simplified,status\n";
    std::vector<std::string> status;
    for (const auto& row : rows) {
      for (double v : row.values) out << detail::format_double(v) << ',';
      out << row.status << '\n';
      status.push_back(row.status);
    }
    tally.add(status);
  }
  return tally.exit_code();
}

/// Quick invariant checks on the library; prints one line per check.
inline int cmd_verify(const RunConfig& c) {
  int failures = 0;
  auto check = [&](const std::string& name, const std::function<bool()>& f) {
    bool ok = false;
    try {
      ok = f();
    } catch (const std::exception& e) {
      std::cout << "  " << e.what() << '\n';
    }
    std::cout << (ok ? "PASS " : "FAIL ") << name << '\n';
    if (!ok) ++failures;
  };
  const double w = c.ratios.front() * c.splitting, W = c.splitting;
  check("decoupled ground energy", [&] {
    return std::abs(ground_state(ModelParams(w, W, 0.0)).first.energy + W / 2) < 1e-12 * W;
  });
  check("decoupled QFI", [&] {
    const double f = qfi_ed(ModelParams(w, W, 0.0), qfi_options(c)).qfi_coupling;
    return std::abs(f * (w + W) * (w + W) / 4.0 - 1.0) < 1e-4;
  });
  check("first-derivative term vanishes", [&] {
    for (double gbar : {0.5, 1.0, 1.5, 2.0})
      if (std::abs(qfi_ed(ModelParams::from_relative(w, W, gbar), qfi_options(c)).first_derivative_term) > 1e-8)
        return false;
    return true;
  });
  check("variational bound", [&] {
    for (double gbar : {0.5, 1.0, 1.5}) {
      const auto p = ModelParams::from_relative(w, W, gbar);
      if (optimize(p).energy < ground_state(p).first.energy - 1e-12) return false;
    }
    return true;
  });
  check("squeezing critical coupling self-consistent", [&] {
    const auto e = gc_xi(w, W, c.dc1);
    return std::abs(separation_residual(w, W, e.value, c.dc1, true)) < 1e-10;
  });
  check("critical couplings ordered above gc0", [&] {
    return gc1(w, W).ratio > 1.0 && gc_xi(w, W, c.dc1).ratio > 1.0 && gc2(w, W).ratio > 1.0;
  });
  check("sweep record round trip", [&] {
    SweepRecord rec;
    rec.key.frequency = w;
    rec.key.method = "verify";
    rec.columns = {"x"};
    rec.rows = {{1.0 / 3.0}, {-0.0}};
    rec.status = {"ok", "ok"};
    return parse(serialize(rec)) == rec;
  });
  return failures == 0 ? kOk : kPartialFailure;
}

}  // namespace qrm::cli
