#pragma once

// Experiment operations: each runs one sweep described by an ExperimentConfig
// and returns a Record plus CSV summaries.

#include <nlohmann/json.hpp>

#include <chrono>
#include <string>
#include <vector>

#include "bergman_lab/analysis.hpp"
#include "bergman_lab/harness/config.hpp"
#include "bergman_lab/harness/record.hpp"

namespace bergman_lab::harness {

// Sets the worker count for the lifetime of the object.
class WorkerScope {
 public:
  explicit WorkerScope(int n) : saved_(worker_count()) { set_worker_count(n); }
  ~WorkerScope() { set_worker_count(saved_); }
  WorkerScope(const WorkerScope&) = delete;
  WorkerScope& operator=(const WorkerScope&) = delete;

 private:
  int saved_;
};

class Stopwatch {
 public:
  double seconds() const { return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0_).count(); }

 private:
  std::chrono::steady_clock::time_point t0_ = std::chrono::steady_clock::now();
};

struct RunOutput {
  Record record;
  std::vector<std::pair<std::string, CsvTable>> tables;
};

inline Weight config_weight(const ExperimentConfig& c) { return parse_preset(c.preset, c.model_space()); }

inline ZeroTolerances config_tolerances(const ExperimentConfig& c) { return {c.cluster_tol, c.residual_tol}; }

inline RateBoundSpec config_rate_spec(const ExperimentConfig& c) {
  RateBoundSpec s;
  s.A = c.rate_A;
  s.target_exponent = c.rate_exponent;
  s.c = c.rate_c;
  return s;
}

// The selected battery: the sphere battery, or the toric moment on the product.
inline std::vector<TestFunction> config_battery(const ExperimentConfig& c, const Weight& w) {
  const auto all = w.space.dim() == 1 ? test_battery(w) : std::vector<TestFunction>{toric_moment()};
  std::vector<TestFunction> out;
  for (const auto& f : all)
    if (c.battery_selects(f.name)) out.push_back(f);
  for (const auto& b : c.battery) {
    bool known = b == "all";
    for (const auto& f : all) known = known || f.name == b;
    if (!known) throw ConfigError("config key 'battery': no test function named '" + b + "' for this space");
  }
  return out;
}

inline bool flat_near_sigma(const TestFunction& chi, const Weight& w) {
  for (const auto& c : w.singular_set)
    if (c.divisor_factor >= 0 || !chi.is_flat_near(c.point[0])) return false;
  return true;
}

// Kernel sample points avoiding Σ: the sphere grid, or a tensor grid on the product.
inline std::vector<ChartPoint> kernel_grid(const Weight& w, double margin = 0.05) {
  if (w.space.dim() == 1) return sphere_sample_grid(w, 16, 16, margin);
  std::vector<ChartPoint> out;
  const auto g = sphere_sample_grid(fs_weight(), 4, 6);
  for (const auto& a : g)
    for (const auto& b : g) {
      const ChartPoint x(a[0], b[0]);
      if (dist_to_sing(w, x) >= margin) out.push_back(x);
    }
  return out;
}

inline nlohmann::json json_number(double x) { return std::isfinite(x) ? nlohmann::json(x) : nlohmann::json(nullptr); }

// ---- kernel --------------------------------------------------------------------

inline RunOutput run_kernel(const ExperimentConfig& c) {
  WorkerScope workers(c.threads);
  Stopwatch clock;
  RunOutput out;
  auto& r = out.record;
  r.kind = "kernel";
  r.config = to_json(c);
  const Weight w = config_weight(c);
  const auto grid = kernel_grid(w);
  CsvTable t{{"p", "dim", "min_kernel", "max_kernel", "scaled_sup", "cond", "error"}, {}};
  for (int p : c.p_ladder) {
    try {
      const auto sp = build_space(w, p);
      std::vector<double> P(grid.size());
      parallel_for(grid.size(), [&](size_t i) { P[i] = bergman_kernel(*sp, grid[i]); });
      const auto rep = kernel_bound_report(*sp, grid, w.holder);
      const double mx = *std::max_element(P.begin(), P.end());
      r.add({{"p", p}, {"dim", sp->dim()}, {"grid_points", grid.size()}, {"min_kernel", rep.min_kernel},
             {"max_kernel", mx}, {"scaled_sup", rep.scaled_sup}, {"cond", sp->cond},
             {"extended_precision", sp->extended_precision}});
      t.row(p, sp->dim(), rep.min_kernel, mx, rep.scaled_sup, sp->cond, "");
    } catch (const Error& e) {
      r.pass = false;
      r.add({{"p", p}, {"error", e.what()}});
      t.row(p, "", "", "", "", "", std::string("\"") + e.what() + "\"");
    }
  }
  r.summary = {{"cells", c.p_ladder.size()}};
  r.wall_seconds = clock.seconds();
  out.tables.push_back({"kernel_summary", t});
  return out;
}

// ---- dimensions ----------------------------------------------------------------

inline RunOutput run_dim(const ExperimentConfig& c) {
  Stopwatch clock;
  RunOutput out;
  auto& r = out.record;
  r.kind = "dim";
  r.config = to_json(c);
  const Weight w = config_weight(c);
  const auto poles = log_poles(w);
  const bool formula = w.space.dim() == 1 && poles.size() == 1;
  CsvTable t{{"p", "dim", "lower_ratio", "upper_ok", "formula"}, {}};
  for (const auto& row : dimension_report(w, c.p_ladder)) {
    nlohmann::json u{{"p", row.p}, {"dim", row.dim}, {"lower_ratio", row.lower_ratio}, {"upper_ok", row.upper_ok}};
    int f = -1;
    if (formula) {
      f = sphere_dimension_formula(row.p, poles.front().eps);
      u["formula"] = f;
      if (f != row.dim) r.pass = false;
    }
    if (!row.upper_ok) r.pass = false;
    r.add(u);
    t.row(row.p, row.dim, row.lower_ratio, row.upper_ok, f);
  }
  r.wall_seconds = clock.seconds();
  out.tables.push_back({"dim_summary", t});
  return out;
}

// ---- deterministic FS-current errors --------------------------------------------

inline RunOutput run_converge_fs(const ExperimentConfig& c) {
  WorkerScope workers(c.threads);
  Stopwatch clock;
  RunOutput out;
  auto& r = out.record;
  r.kind = "converge-fs";
  r.config = to_json(c);
  const Weight w = config_weight(c);
  CsvTable t{{"function", "p", "value", "error_estimate", "flat"}, {}};
  nlohmann::json per_function = nlohmann::json::object();
  for (const auto& chi : config_battery(c, w)) {
    const bool flat = flat_near_sigma(chi, w);
    ErrorSeries s;
    s.statistic = "fs_error";
    nlohmann::json f{{"flat", flat}};
    try {
      for (int p : c.p_ladder) {
        const auto e = fs_current_error(build_space(w, p), chi, !flat, c.quad_tol);
        s.push(p, e.value, e.error_estimate);
        r.add({{"function", chi.name}, {"p", p}, {"value", e.value}, {"error_estimate", e.error_estimate},
               {"flat", flat}, {"log_dist", json_number(e.log_dist)}});
        t.row(chi.name, p, e.value, e.error_estimate, flat);
      }
      const auto conv = fswedge_convergence(s);
      f["identically_zero"] = conv.identically_zero;
      f["convergence_pass"] = conv.pass;
      f["max_ratio"] = conv.max_ratio;
      if (flat && !conv.identically_zero && s.points.size() >= 2) {
        const auto env = envelope_check(s);
        f["envelope_C"] = env.C;
        f["envelope_pass"] = env.pass;
        f["strictly_decreasing"] = env.strictly_decreasing;
        if (!env.pass || !env.strictly_decreasing) r.pass = false;
      }
      if (flat && !conv.pass) r.pass = false;
    } catch (const Error& e) {
      f["error"] = e.what();
      r.pass = false;
    }
    per_function[chi.name] = f;
  }
  r.summary = {{"functions", per_function}};
  r.wall_seconds = clock.seconds();
  out.tables.push_back({"converge_fs_summary", t});
  return out;
}

// ---- Monte Carlo zero ensembles -----------------------------------------------

inline RunOutput run_converge_zeros(const ExperimentConfig& c) {
  WorkerScope workers(c.threads);
  Stopwatch clock;
  RunOutput out;
  auto& r = out.record;
  r.kind = "converge-zeros";
  r.config = to_json(c);
  const Weight w = config_weight(c);
  const RateBoundSpec spec = config_rate_spec(c);
  const auto tol = config_tolerances(c);
  CsvTable t{{"function", "p", "n_used", "n_excluded", "n_flagged", "mean", "se", "q05", "q50", "q95", "threshold",
              "exceedance"},
             {}};
  nlohmann::json summary{{"functions", nlohmann::json::object()}};
  const auto battery = config_battery(c, w);
  if (w.space.dim() == 2) {
    nlohmann::json wm = nlohmann::json::array();
    for (int p : c.p_ladder) {
      const auto sp = build_space(w, p);
      const auto rep = wedge_mass_check({sp, sp}, c.samples, c.seed, 1, tol);
      wm.push_back({{"p", p}, {"expected", rep.expected}, {"n_ok", rep.n_ok}, {"n_excluded", rep.n_excluded},
                    {"n_flagged", rep.n_flagged}, {"fraction_ok", rep.fraction_ok()}});
      if (!rep.pass) r.pass = false;
    }
    summary["wedge_mass"] = wm;
  }
  for (size_t k = 0; k < battery.size(); ++k) {
    const auto& chi = battery[k];
    ErrorSeries mean;
    mean.statistic = "mc_mean";
    nlohmann::json f{{"entries", nlohmann::json::array()}};
    try {
      for (int p : c.p_ladder) {
        const auto sp = build_space(w, p);
        std::vector<SpacePtr> spaces(static_cast<size_t>(w.space.dim()), sp);
        const auto e = mc_zero_error(spaces, chi, c.samples, c.seed, 100 + k, spec, std::nullopt, tol);
        for (size_t i = 0; i < e.samples.size(); ++i)
          r.add({{"function", chi.name}, {"p", p}, {"k", i}, {"e", e.samples[i]}});
        f["entries"].push_back({{"p", p}, {"limit", e.limit}, {"n_used", e.n_used}, {"n_excluded", e.n_excluded},
                                {"n_flagged", e.n_flagged}, {"mean", e.mean}, {"se", e.se}, {"q05", e.q05},
                                {"q50", e.q50}, {"q95", e.q95}, {"threshold", e.threshold},
                                {"exceedance", e.exceedance}});
        t.row(chi.name, p, e.n_used, e.n_excluded, e.n_flagged, e.mean, e.se, e.q05, e.q50, e.q95, e.threshold,
              e.exceedance);
        mean.push(p, e.mean, e.se);
      }
      if (mean.points.size() >= 4) {
        const auto fit = rate_fit(mean, spec);
        f["rate_fit"] = fit.to_json();
        if (!fit.pass) r.pass = false;
      } else {
        f["rate_fit"] = nullptr;
      }
    } catch (const Error& e) {
      f["error"] = e.what();
      r.pass = false;
    }
    summary["functions"][chi.name] = f;
  }
  r.summary = summary;
  r.wall_seconds = clock.seconds();
  out.tables.push_back({"converge_zeros_summary", t});
  return out;
}

inline RunOutput run_converge(const ExperimentConfig& c, const std::string& mode) {
  if (mode == "fs") return run_converge_fs(c);
  if (mode == "zeros") return run_converge_zeros(c);
  throw ConfigError("converge mode must be 'fs' or 'zeros'");
}

// ---- empirical Bertini ---------------------------------------------------------

inline RunOutput run_bertini(const ExperimentConfig& c) {
  WorkerScope workers(c.threads);
  Stopwatch clock;
  RunOutput out;
  auto& r = out.record;
  r.kind = "bertini";
  r.config = to_json(c);
  const Weight w = config_weight(c);
  if (w.space.dim() != 2) throw ConfigError("config key 'space': bertini runs on the product");
  CsvTable t{{"p", "pairs", "fraction_nonzero"}, {}};
  for (int p : c.p_ladder) {
    const double f = bertini_fraction(build_space(w, p), c.bertini_pairs, c.seed, 2);
    r.add({{"p", p}, {"pairs", c.bertini_pairs}, {"fraction_nonzero", f}});
    t.row(p, c.bertini_pairs, f);
    if (f != 1.0) r.pass = false;
  }
  r.wall_seconds = clock.seconds();
  out.tables.push_back({"bertini_summary", t});
  return out;
}

inline void write_output(const RunOutput& o, const std::string& out_dir) {
  write_record(o.record, out_dir);
  for (const auto& [name, table] : o.tables) write_csv(table, out_dir, name);
}

}  // namespace bergman_lab::harness
