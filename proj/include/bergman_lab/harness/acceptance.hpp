#pragma once

// The acceptance suite: nine criteria, each a pass/fail with its measured
// quantities. Tolerances are fixed here; the config supplies the seed, N,
// worker count, zero-finding tolerances and the criteria to run.

#include <nlohmann/json.hpp>

#include <cmath>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "bergman_lab/analysis.hpp"
#include "bergman_lab/harness/experiments.hpp"

namespace bergman_lab::harness {

inline constexpr const char* kPolePreset = "fs+logpole(0,0.3)";
inline constexpr const char* kProductPreset = "fs+jointpole(0,0,0.5)";
inline constexpr double kSuiteBudgetSeconds = 900.0;

struct CriterionResult {
  int id = 0;
  std::string title;
  bool pass = false;
  std::string detail;
  nlohmann::json metrics = nlohmann::json::object();
  double seconds = 0.0;
};

struct VerifyReport {
  std::vector<CriterionResult> criteria;
  double seconds = 0.0;
  bool pass() const {
    for (const auto& c : criteria)
      if (!c.pass) return false;
    return !criteria.empty();
  }
};

namespace acceptance {

inline std::string fmt(double x) {
  std::ostringstream os;
  os.precision(3);
  os << x;
  return os.str();
}

inline double log_beta(int j, int p) { return std::lgamma(j + 1.0) + std::lgamma(p - j + 1.0) - std::lgamma(p + 2.0); }

// 1. Pure FS: P_p ≡ p+1 and the Gram matrix is the Beta diagonal.
inline void exact_fs(const ExperimentConfig&, CriterionResult& r) {
  const Weight w = fs_weight();
  auto grid = sphere_sample_grid(w, 10, 20);
  grid.resize(200);
  double kernel_err = 0.0, gram_err = 0.0;
  for (int p : {4, 8, 16, 32, 64}) {
    const auto sp = build_space(w, p);
    std::vector<double> P(grid.size());
    parallel_for(grid.size(), [&](size_t i) { P[i] = bergman_kernel(*sp, grid[i]); });
    for (double v : P) kernel_err = std::max(kernel_err, std::abs(v - (p + 1.0)) / (p + 1.0));
  }
  for (int p : {4, 8, 16, 32}) {
    BuildOptions opt;
    opt.force_dense = true;
    const auto sp = build_space(w, p, opt);
    for (int j = 0; j <= p; ++j)
      for (int k = 0; k <= p; ++k) {
        const double lj = log_beta(j, p), lk = log_beta(k, p);
        // Raw entry G_jk = D_j D_k G̃_jk, measured against sqrt(B_j B_k).
        const Complex g = sp->gram(j, k) * std::exp(sp->log_scale(j) + sp->log_scale(k) - 0.5 * (lj + lk));
        gram_err = std::max(gram_err, std::abs(g - (j == k ? 1.0 : 0.0)));
      }
  }
  r.metrics = {{"kernel_rel_error", kernel_err}, {"gram_rel_error", gram_err}};
  r.pass = kernel_err <= 1e-6 && gram_err <= 1e-8;
  r.detail = "max rel |P_p-(p+1)| " + fmt(kernel_err) + " (tol 1e-6), Gram vs Beta " + fmt(gram_err) + " (tol 1e-8)";
}

// 2. dim H⁰ against the exponent rule and dim/p within [1/C, C].
inline void base_locus(const ExperimentConfig&, CriterionResult& r) {
  constexpr double kC = 3.0;
  int mismatches = 0;
  double lo = kInf, hi = 0.0;
  for (double eps : {0.2, 0.35}) {
    const Weight w = parse_preset("fs+logpole(0," + std::to_string(eps) + ")");
    std::vector<int> ladder;
    for (int p = 1; p <= 64; ++p) ladder.push_back(p);
    for (const auto& row : dimension_report(w, ladder)) {
      int rule = 0;
      for (int j = 0; j <= row.p; ++j)
        if (2.0 * j - 2.0 * row.p * eps + 2.0 > 1e-9) ++rule;
      const int built = build_space(w, row.p)->dim();
      if (built != rule || row.dim != rule || !row.upper_ok) ++mismatches;
      lo = std::min(lo, row.lower_ratio);
      hi = std::max(hi, row.lower_ratio);
    }
  }
  r.metrics = {{"mismatches", mismatches}, {"min_ratio", lo}, {"max_ratio", hi}, {"C", kC}};
  r.pass = mismatches == 0 && lo >= 1.0 / kC && hi <= kC;
  r.detail = std::to_string(mismatches) + " dimension mismatches, dim/p in [" + fmt(lo) + ", " + fmt(hi) + "] (C = 3)";
}

// 3. Total multiplicities on both spaces and the resultant genericity rate.
inline void mass_conservation(const ExperimentConfig& c, CriterionResult& r) {
  const auto tol = config_tolerances(c);
  bool ok = true;
  nlohmann::json sphere = nlohmann::json::array(), product = nlohmann::json::array();
  int sphere_bad = 0;
  for (int p : {8, 16, 32, 64}) {
    const auto rep = wedge_mass_check({build_space(parse_preset(kPolePreset), p)}, c.samples, c.seed, 31, tol);
    sphere.push_back({{"p", p}, {"n_ok", rep.n_ok}, {"n", rep.n}, {"n_flagged", rep.n_flagged}});
    sphere_bad += rep.n - rep.n_ok;
  }
  ok = sphere_bad == 0;
  double worst = 1.0;
  for (int p : {2, 4, 6, 8}) {
    const auto sp = build_space(parse_preset(kProductPreset, ModelSpace::product()), p);
    const auto rep = wedge_mass_check({sp, sp}, c.samples, c.seed, 32, tol);
    product.push_back({{"p", p}, {"n_ok", rep.n_ok}, {"n", rep.n}, {"n_flagged", rep.n_flagged},
                       {"n_excluded", rep.n_excluded}});
    worst = std::min(worst, rep.fraction_ok());
  }
  ok = ok && worst >= 0.99;
  const double bertini =
      bertini_fraction(build_space(parse_preset(kProductPreset, ModelSpace::product()), 6), 500, c.seed, 33);
  ok = ok && bertini == 1.0;
  r.metrics = {{"sphere", sphere}, {"product", product}, {"bertini_fraction", bertini}};
  r.pass = ok;
  r.detail = "sphere failures " + std::to_string(sphere_bad) + " (need 0), product min fraction " + fmt(worst) +
             " (need 0.99), Bertini nonzero fraction " + fmt(bertini) + " (need 1)";
}

inline const std::vector<std::string>& sphere_presets() {
  static const std::vector<std::string> v{"fs", "fs+logpole(0,0.3)", "fs+logpole_step(0.2,0.2)",
                                          "fs+cone(0,0.5,0.05)", "fs+poincare(0,0.3)"};
  return v;
}

// 4. Poincaré–Lelong residual on random sections of every sphere preset.
inline void poincare_lelong(const ExperimentConfig& c, CriterionResult& r) {
  const auto chi = gaussian_bump(Complex(0.1, 0.0));
  double worst = 0.0;
  nlohmann::json per = nlohmann::json::object();
  for (const auto& preset : sphere_presets()) {
    const Weight w = parse_preset(preset);
    const auto ctx = poincare_lelong_context(w, chi, 1e-6);
    double m = 0.0;
    for (int p : {8, 16, 32}) {
      const auto sp = build_space(w, p);
      std::vector<double> res(static_cast<size_t>(c.pl_sections));
      parallel_for(res.size(), [&](size_t i) {
        const auto t = sample_tuple({sp}, c.seed, 41, i);
        res[i] = poincare_lelong_residual(t[0], ctx);
      });
      for (double x : res) m = std::max(m, std::isfinite(x) ? x : kInf);
    }
    per[preset] = json_number(m);
    worst = std::max(worst, m);
  }
  r.metrics = {{"max_residual", per}, {"sections_per_p", c.pl_sections}};
  r.pass = worst <= 1e-4;
  r.detail = "max residual " + fmt(worst) + " over " + std::to_string(c.pl_sections) +
             " sections x 5 presets x p in {8,16,32} (tol 1e-4)";
}

// FS-current errors shared by criteria 5 and 6.
class FsErrorCache {
 public:
  explicit FsErrorCache(double tol) : tol_(tol) {}
  double get(const Weight& w, const TestFunction& chi, int p) {
    const auto key = std::make_pair(chi.name, p);
    auto it = cache_.find(key);
    if (it != cache_.end()) return it->second;
    const double v = fs_current_error(build_space(w, p), chi, !flat_near_sigma(chi, w), tol_).value;
    cache_[key] = v;
    return v;
  }

 private:
  double tol_;
  std::map<std::pair<std::string, int>, double> cache_;
};

// 5. MC mean of the zero pairings against the FS-current pairing.
inline void expectation_identity(const ExperimentConfig& c, CriterionResult& r, FsErrorCache& fs) {
  const Weight w = parse_preset(kPolePreset);
  const auto battery = test_battery(w);
  int failures = 0;
  double worst = 0.0;
  nlohmann::json rows = nlohmann::json::array();
  for (size_t k = 0; k < battery.size(); ++k)
    for (int p : {8, 16, 32}) {
      const auto e = mc_zero_error({build_space(w, p)}, battery[k], c.samples, c.seed, 50 + k, {}, std::nullopt,
                                   config_tolerances(c));
      const double target = fs.get(w, battery[k], p);
      const double z = e.se > 0.0 ? std::abs(e.mean - target) / e.se : (e.mean == target ? 0.0 : kInf);
      worst = std::max(worst, z);
      if (z > 3.0) ++failures;
      rows.push_back({{"function", battery[k].name}, {"p", p}, {"mean", e.mean}, {"se", e.se}, {"fs", target},
                      {"z", json_number(z)}});
    }
  r.metrics = {{"rows", rows}, {"max_z", json_number(worst)}};
  r.pass = failures == 0;
  r.detail = std::to_string(failures) + " of " + std::to_string(rows.size()) + " pairings beyond 3 SE (max " +
             fmt(worst) + " SE, N = " + std::to_string(c.samples) + ")";
}

// 6. Deterministic error envelope for functions flat near Σ.
inline void envelope(const ExperimentConfig&, CriterionResult& r, FsErrorCache& fs) {
  const Weight w = parse_preset(kPolePreset);
  bool ok = true;
  int n = 0;
  nlohmann::json per = nlohmann::json::object();
  for (const auto& chi : test_battery(w)) {
    if (!flat_near_sigma(chi, w)) continue;
    ++n;
    ErrorSeries s;
    for (int p : {8, 16, 32, 64}) s.push(p, fs.get(w, chi, p));
    const auto conv = fswedge_convergence(s);
    nlohmann::json f{{"values", nlohmann::json::array()}};
    for (const auto& pt : s.points) f["values"].push_back(pt.value);
    if (conv.identically_zero) {
      f["identically_zero"] = true;
    } else {
      const auto env = envelope_check(s);
      f["C8"] = env.C;
      f["ratios"] = env.ratios;
      f["strictly_decreasing"] = env.strictly_decreasing;
      if (!env.pass || !env.strictly_decreasing) ok = false;
    }
    per[chi.name] = f;
  }
  r.metrics = per;
  r.pass = ok && n > 0;
  r.detail = std::to_string(n) + " flat functions; |e_p| <= 2 C8 log p/p and strictly decreasing for p in {16,32,64}";
}

// 7. Uniform lower bound and the scaled upper bound of the kernel.
inline void kernel_bounds(const ExperimentConfig&, CriterionResult& r) {
  const Weight w = parse_preset(kPolePreset);
  const auto grid = sphere_sample_grid(w, 16, 16, 0.05);
  const auto a = kernel_bound_report(*build_space(w, 8), grid, w.holder);
  const auto b = kernel_bound_report(*build_space(w, 64), grid, w.holder);
  r.metrics = {{"min8", a.min_kernel}, {"min64", b.min_kernel}, {"sup8", a.scaled_sup}, {"sup64", b.scaled_sup}};
  r.pass = b.min_kernel >= 0.5 * a.min_kernel && b.scaled_sup <= 2.0 * a.scaled_sup;
  r.detail = "grid min " + fmt(a.min_kernel) + " -> " + fmt(b.min_kernel) + ", scaled sup " + fmt(a.scaled_sup) +
             " -> " + fmt(b.scaled_sup);
}

// 8. Exceedance decay on the sphere and the isolated-singularity rate on the product.
inline void rates(const ExperimentConfig& c, CriterionResult& r) {
  const Weight w = parse_preset(kPolePreset);
  const auto gauss = battery_member(w, "gauss");
  RateBoundSpec spec;
  spec.A = 10.0;
  std::vector<McErrorEntry> entries;
  for (int p : {8, 16, 32}) {
    entries.push_back(mc_zero_error({build_space(w, p)}, gauss, c.samples, c.seed, 81, spec, std::nullopt,
                                    config_tolerances(c)));
    if (p == 8) spec.c = fit_threshold_constant(entries.back(), spec);
  }
  std::vector<double> frac;
  bool monotone = true;
  for (const auto& e : entries) {
    int over = 0;
    for (double x : e.samples) over += std::abs(x) > spec.threshold(e.p);
    frac.push_back(double(over) / e.n_used);
    if (frac.size() > 1 && frac.back() > frac[frac.size() - 2]) monotone = false;
  }
  const Weight wp = parse_preset(kProductPreset, ModelSpace::product());
  ErrorSeries mean;
  for (int p : {4, 6, 8, 10, 12}) {
    const auto sp = build_space(wp, p);
    const auto e = mc_zero_error({sp, sp}, toric_moment(), c.samples, c.seed, 82, {}, std::nullopt,
                                 config_tolerances(c));
    mean.push(p, e.mean, e.se);
  }
  RateBoundSpec third;
  third.target_exponent = 1.0 / 3.0;
  const auto fit = rate_fit(mean, third);
  nlohmann::json series = nlohmann::json::array();
  for (const auto& pt : mean.points) series.push_back({{"p", pt.p}, {"mean", pt.value}, {"se", pt.se}});
  r.metrics = {{"c", spec.c}, {"exceedance", frac}, {"product_series", series}, {"rate_fit", fit.to_json()}};
  r.pass = monotone && fit.pass;
  r.detail = "exceedance " + fmt(frac[0]) + ", " + fmt(frac[1]) + ", " + fmt(frac[2]) + (monotone ? "" : " (increasing)") +
             "; product fit exponent " + fmt(fit.exponent) + (fit.pass ? " within" : " outside") +
             " the 1/3 envelope";
}

// Reduced copies of the stochastic criteria; their serialized output must not
// depend on the run or on the worker count.
inline std::string determinism_probe(const ExperimentConfig& c) {
  const Weight w = parse_preset(kPolePreset);
  const Weight wp = parse_preset(kProductPreset, ModelSpace::product());
  const auto tol = config_tolerances(c);
  nlohmann::json j;
  const auto s16 = build_space(w, 16);
  const auto p4 = build_space(wp, 4);
  j["sphere_mass"] = wedge_mass_check({s16}, 40, c.seed, 91, tol).counts;
  j["product_mass"] = wedge_mass_check({p4, p4}, 30, c.seed, 92, tol).counts;
  j["sphere_mc"] = mc_zero_error({s16}, battery_member(w, "gauss"), 40, c.seed, 93, {}, std::nullopt, tol).samples;
  j["product_mc"] = mc_zero_error({p4, p4}, toric_moment(), 30, c.seed, 94, {}, std::nullopt, tol).samples;
  const auto ctx = poincare_lelong_context(w, gaussian_bump(Complex(0.1, 0.0)), 1e-6);
  std::vector<double> pl(8);
  parallel_for(pl.size(), [&](size_t i) { pl[i] = poincare_lelong_residual(sample_tuple({s16}, c.seed, 95, i)[0], ctx); });
  j["pl"] = pl;
  j["fs_error"] = fs_current_error(s16, battery_member(w, "bump_0")).value;
  return j.dump();
}

// 9. Determinism and the runtime budget; `elapsed` covers the other criteria.
inline void determinism(const ExperimentConfig& c, CriterionResult& r, double elapsed) {
  std::string a, b, d;
  {
    WorkerScope one(1);
    a = determinism_probe(c);
    b = determinism_probe(c);
  }
  {
    WorkerScope eight(8);
    d = determinism_probe(c);
  }
  const bool same_runs = a == b, same_workers = a == d;
  r.metrics = {{"identical_across_runs", same_runs}, {"identical_across_workers", same_workers}};
  r.pass = same_runs && same_workers;
  r.detail = std::string("probe ") + (same_runs ? "identical" : "differs") + " across runs, " +
             (same_workers ? "identical" : "differs") + " at 1 vs 8 workers";
  r.metrics["suite_seconds_before"] = elapsed;
}

}  // namespace acceptance

inline const std::vector<std::string>& criterion_titles() {
  static const std::vector<std::string> t{"exact smooth benchmark",
                                          "base-locus law",
                                          "mass conservation",
                                          "Poincare-Lelong self-consistency",
                                          "expectation identity",
                                          "deterministic error envelope",
                                          "kernel bounds",
                                          "rate behavior",
                                          "determinism and runtime"};
  return t;
}

// Runs the selected criteria in order; `on_result` sees each as it finishes.
inline VerifyReport run_verify(const ExperimentConfig& c,
                               const std::function<void(const CriterionResult&)>& on_result = {}) {
  validate(c);
  WorkerScope workers(c.threads);
  Stopwatch total;
  VerifyReport rep;
  acceptance::FsErrorCache fs(c.quad_tol);
  for (int id = 1; id <= 9; ++id) {
    if (!c.runs_criterion(id)) continue;
    CriterionResult r;
    r.id = id;
    r.title = criterion_titles()[static_cast<size_t>(id - 1)];
    Stopwatch clock;
    try {
      switch (id) {
        case 1: acceptance::exact_fs(c, r); break;
        case 2: acceptance::base_locus(c, r); break;
        case 3: acceptance::mass_conservation(c, r); break;
        case 4: acceptance::poincare_lelong(c, r); break;
        case 5: acceptance::expectation_identity(c, r, fs); break;
        case 6: acceptance::envelope(c, r, fs); break;
        case 7: acceptance::kernel_bounds(c, r); break;
        case 8: acceptance::rates(c, r); break;
        case 9: acceptance::determinism(c, r, total.seconds()); break;
      }
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception& e) {
      r.pass = false;
      r.detail = std::string("error: ") + e.what();
    }
    r.seconds = clock.seconds();
    if (id == 1 && r.seconds > 120.0) {
      r.pass = false;
      r.detail += "; runtime " + acceptance::fmt(r.seconds) + " s exceeds 120 s";
    }
    if (id == 9) {
      const double t = total.seconds();
      r.metrics["suite_seconds"] = t;
      if (t > kSuiteBudgetSeconds) {
        r.pass = false;
        r.detail += "; suite runtime " + acceptance::fmt(t) + " s exceeds 900 s";
      } else {
        r.detail += "; suite runtime " + acceptance::fmt(t) + " s";
      }
    }
    rep.criteria.push_back(r);
    if (on_result) on_result(rep.criteria.back());
  }
  rep.seconds = total.seconds();
  return rep;
}

// The verify record: one unit per criterion; runtimes go to the timing line only.
inline Record verify_record(const ExperimentConfig& c, const VerifyReport& rep) {
  Record r;
  r.kind = "verify";
  r.config = to_json(c);
  for (const auto& k : rep.criteria) {
    nlohmann::json m = k.metrics;
    m.erase("suite_seconds");
    m.erase("suite_seconds_before");
    r.add({{"criterion", k.id}, {"title", k.title}, {"pass", k.pass}, {"metrics", m}});
  }
  r.pass = rep.pass();
  r.wall_seconds = rep.seconds;
  return r;
}

inline RunOutput run_verify_output(const ExperimentConfig& c,
                                   const std::function<void(const CriterionResult&)>& on_result = {}) {
  const auto rep = run_verify(c, on_result);
  RunOutput out{verify_record(c, rep), {}};
  CsvTable t{{"criterion", "title", "pass"}, {}};
  for (const auto& k : rep.criteria) t.row(k.id, k.title, k.pass);
  out.tables.push_back({"verify_summary", t});
  return out;
}

// Dispatch by record kind, used by the CLI and by replay.
inline RunOutput run_by_kind(const std::string& kind, const ExperimentConfig& c) {
  if (kind == "kernel") return run_kernel(c);
  if (kind == "dim") return run_dim(c);
  if (kind == "converge-fs") return run_converge_fs(c);
  if (kind == "converge-zeros") return run_converge_zeros(c);
  if (kind == "bertini") return run_bertini(c);
  if (kind == "verify") return run_verify_output(c);
  throw ConfigError("unknown record kind '" + kind + "'");
}

// Re-runs a record's config and compares the replayable lines.
inline bool replay_matches(const Record& r) {
  const auto cfg = parse_config_string(config_text_from_json(r.config));
  return run_by_kind(r.kind, cfg).record.body() == r.body();
}

}  // namespace bergman_lab::harness
