#pragma once

// Test-function battery, FS-current and zero-ensemble errors against the limit
// measures, and rate fitting.

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "bergman_lab/bergman.hpp"
#include "bergman_lab/curvature.hpp"
#include "bergman_lab/parallel.hpp"
#include "bergman_lab/sampling.hpp"
#include "bergman_lab/test_function.hpp"
#include "bergman_lab/zeros.hpp"

namespace bergman_lab {

// ---- battery ------------------------------------------------------------------

// Re(z−a)·η(|z−a|) (or Im), η ≡ 1 on r ≤ R1 and 0 beyond R2 (quintic smoothstep).
// The leading term is harmonic, so dd^cχ vanishes on the disc r < R1.
inline TestFunction harmonic_cutoff(Complex a, bool imag, double R1, double R2) {
  if (!(R1 > 0.0 && R2 > R1)) throw Error("harmonic_cutoff: need 0 < R1 < R2");
  const double L = R2 - R1;
  auto eta = [R1, R2, L](double r, double& d1, double& d2) {
    d1 = d2 = 0.0;
    if (r <= R1) return 1.0;
    if (r >= R2) return 0.0;
    const double t = (r - R1) / L;
    d1 = -30.0 * t * t * (t - 1.0) * (t - 1.0) / L;
    d2 = -60.0 * t * (t - 1.0) * (2.0 * t - 1.0) / (L * L);
    return 1.0 - t * t * t * (10.0 + t * (-15.0 + 6.0 * t));
  };
  auto part = [imag](Complex w) { return imag ? w.imag() : w.real(); };
  TestFunction f;
  f.name = imag ? "harmonic_im" : "harmonic_re";
  f.value = [=](const ChartPoint& x) {
    if (x[0].is_inf()) return 0.0;
    const Complex w = x[0].value() - a;
    double d1, d2;
    return part(w) * eta(std::abs(w), d1, d2);
  };
  // Δ(hη) = h(η'' + 3η'/r) for h linear.
  f.ddc_density = [=](Complex z) {
    const Complex w = z - a;
    const double r = std::abs(w);
    if (r <= R1 || r >= R2) return 0.0;
    double d1, d2;
    eta(r, d1, d2);
    return part(w) * (d2 + 3.0 * d1 / r) / (2.0 * kPi);
  };
  f.ddc_support = Disc{a, R2};
  f.ddc_breaks = {R1};
  f.center = a;
  f.flat_near = {Coord(a)};
  f.clearance = R1;
  f.c2_norm = 1.0 + 2.0 / L + 6.0 * R2 / (L * L);
  return f;
}

// Point the battery is organized around: the first singular point, else the
// location of the first localized weight term, else 0.
inline Complex battery_anchor(const Weight& w) {
  for (const auto& c : w.singular_set)
    if (!c.point.any_inf() && c.divisor_factor < 0) return c.point[0].value();
  for (const auto& t : w.terms) {
    if (auto* c = std::get_if<ConeTerm>(&t)) return c->a;
    if (auto* c = std::get_if<CutoffLogPole>(&t)) return c->a;
    if (auto* c = std::get_if<PoincareLogTerm>(&t)) return c->a;
  }
  return 0.0;
}

inline constexpr double kBatteryBumpRadius = 0.25;
inline constexpr double kBatteryClearances[3] = {0.1, 0.25, 0.5};

// Eight sphere test functions: three bumps at increasing clearance from Σ, two
// harmonic-leading-term cutoffs centered on Σ, two moments, and a Gaussian
// centered on Σ.
inline std::vector<TestFunction> test_battery(const Weight& w) {
  if (w.space.dim() != 1) throw UnsupportedConfiguration("the test-function battery is defined on the sphere");
  const Complex a = battery_anchor(w);
  std::vector<Coord> sigma;
  for (const auto& c : w.singular_set) sigma.push_back(c.point[0]);
  std::vector<TestFunction> out;
  for (int k = 0; k < 3; ++k) {
    const double d = kBatteryClearances[k];
    auto f = radial_bump(a + d + kBatteryBumpRadius, kBatteryBumpRadius, "bump_" + std::to_string(k));
    f.flat_near = sigma;
    f.clearance = d;
    out.push_back(std::move(f));
  }
  for (bool im : {false, true}) {
    auto f = harmonic_cutoff(a, im, 0.15, 0.6);
    f.flat_near = sigma;
    out.push_back(std::move(f));
  }
  out.push_back(fs_moment());
  out.push_back(fs_moment_sq());
  out.push_back(gaussian_bump(a));
  return out;
}

inline TestFunction battery_member(const Weight& w, const std::string& name) {
  for (auto& f : test_battery(w))
    if (f.name == name) return f;
  throw Error("no battery member named '" + name + "'");
}

// ∫ dd^cχ, zero for every test function on a compact space.
inline double ddc_total(const TestFunction& chi, double tol = 1e-12) {
  if (chi.constant_value) return 0.0;
  return pair_laplacian(chi.space, [](Complex) { return 1.0; }, chi, {}, false, tol).value;
}

// Toric moment 1/((1+|z₁|²)(1+|z₂|²)) on the product.
inline TestFunction toric_moment() {
  auto g = [](double s) { return 1.0 / (1.0 + s); };
  return toric_product("toric_moment", g, g);
}

// ---- rate bounds and series --------------------------------------------------

struct RateBoundSpec {
  double A = 10.0;                // λ_p = A log p
  double target_exponent = 1.0;   // 1 for log p/p, 1/3 for log p/p^{1/3}
  double c = 1.0;                 // fitted threshold constant
  double xi = 0.0;                // fitted exceedance exponent

  double lambda(int p) const { return A * std::log(double(p)); }
  double threshold(int p) const { return c * lambda(p) / p; }
  double budget(int p, int n) const { return c * std::pow(double(p), xi * n) * std::exp(-lambda(p) / c); }
};

struct ErrorPoint {
  int p;
  double value;
  double se = 0.0;
};

struct ErrorSeries {
  std::string statistic;  // fs_error, mc_mean, mc_q05, mc_q50, mc_q95, exceedance
  std::vector<ErrorPoint> points;

  void push(int p, double value, double se = 0.0) {
    if (!points.empty() && p <= points.back().p) throw Error("ErrorSeries: p must be strictly increasing");
    if (!std::isfinite(value) || !std::isfinite(se)) throw Error("ErrorSeries: non-finite statistic");
    points.push_back({p, value, se});
  }
  std::vector<int> ps() const {
    std::vector<int> out;
    for (const auto& e : points) out.push_back(e.p);
    return out;
  }
};

inline void write_series_csv(std::ostream& os, const ErrorSeries& s) {
  os << "p,statistic,se\n";
  os.precision(17);
  for (const auto& e : s.points) os << e.p << ',' << e.value << ',' << e.se << '\n';
}

// ---- FS-current error --------------------------------------------------------

struct FsErrorReport {
  double value = 0.0;           // ⟨γ_p/p − c₁, χ⟩
  double error_estimate = 0.0;
  double log_dist = 0.0;        // |log dist(supp dd^cχ, Σ)|, ∞ when they meet
  bool flat = true;             // χ flat near every point of Σ
};

// Euclidean (chart) distance from supp dd^cχ to Σ; 0 when they meet.
inline double support_distance(const TestFunction& chi, const std::vector<Coord>& sigma) {
  double d = kInf;
  for (const auto& a : sigma) {
    if (chi.is_flat_near(a)) {
      d = std::min(d, chi.clearance);
    } else if (chi.ddc_support && !a.is_inf()) {
      d = std::min(d, std::max(0.0, std::abs(a.value() - chi.ddc_support->center) - chi.ddc_support->radius));
    } else {
      d = 0.0;
    }
  }
  return d;
}

// (1/2p) ∫ log P_p dd^cχ. Test functions whose dd^c support meets Σ are
// rejected unless allow_singular is set; then the log singularity of P_p at Σ
// is integrated on a grid graded at the singular point.
inline FsErrorReport fs_current_error(const SpacePtr& sp, const TestFunction& chi, bool allow_singular = false,
                                      double tol = 1e-9) {
  FsErrorReport rep;
  const auto& w = sp->weight;
  if (w.space.dim() != 1) {
    for (const auto& t : w.terms)
      if (!std::holds_alternative<FSReference>(t))
        throw UnsupportedConfiguration("fs_current_error on the product supports the pure FS weight only");
    // P_p is constant, so γ_p/p = c₁ and the wedge difference vanishes.
    return rep;
  }
  if (chi.constant_value) return rep;
  std::vector<Coord> sigma;
  std::vector<Pole> sing;
  for (const auto& c : w.singular_set) {
    sigma.push_back(c.point[0]);
    sing.push_back({c.point, 0.0});
    if (!chi.is_flat_near(c.point[0])) rep.flat = false;
  }
  const double d = sigma.empty() ? kInf : support_distance(chi, sigma);
  rep.log_dist = sigma.empty() ? 0.0 : (d > 0.0 ? std::abs(std::log(d)) : kInf);
  if (d == 0.0 && !allow_singular)
    throw Error("supp dd^c(" + chi.name + ") meets the singular set where log P_p is singular; use a test function flat near it");
  auto g = [&](Complex z) {
    const double v = std::log(bergman_kernel(*sp, ChartPoint(z)));
    return std::isfinite(v) ? v : 0.0;
  };
  const auto r = pair_laplacian(w.space, g, chi, sing, false, tol);
  rep.value = r.value / (2.0 * sp->p);
  rep.error_estimate = r.error_estimate / (2.0 * sp->p);
  return rep;
}

// |e_p| ≤ 2C·(log p + L)/p · ‖χ‖_{C²} with C fitted at the first p; L = |log dist|.
struct EnvelopeReport {
  double C = 0.0;
  std::vector<double> ratios;  // |e_p| / (C·bound_p)
  bool pass = true;
  bool strictly_decreasing = true;
};

inline EnvelopeReport envelope_check(const ErrorSeries& s, double log_dist = 0.0, double c2 = 1.0) {
  if (s.points.size() < 2) throw Error("envelope_check: need at least two p values");
  EnvelopeReport rep;
  auto bound = [&](int p) { return (std::log(double(p)) + log_dist) / p * c2; };
  rep.C = std::abs(s.points[0].value) / bound(s.points[0].p);
  for (size_t k = 0; k < s.points.size(); ++k) {
    const double e = std::abs(s.points[k].value);
    rep.ratios.push_back(rep.C > 0.0 ? e / (rep.C * bound(s.points[k].p)) : (e == 0.0 ? 0.0 : kInf));
    if (k > 0) {
      if (e > 2.0 * rep.C * bound(s.points[k].p)) rep.pass = false;
      if (!(e < std::abs(s.points[k - 1].value))) rep.strictly_decreasing = false;
    }
  }
  return rep;
}

// ---- Monte Carlo zero error --------------------------------------------------

struct McErrorEntry {
  int p = 0;
  int n_requested = 0, n_used = 0, n_excluded = 0, n_flagged = 0;
  double limit = 0.0;  // ⟨⋀c₁, χ⟩
  double mean = 0.0, se = 0.0;
  double q05 = 0.0, q50 = 0.0, q95 = 0.0;
  double threshold = 0.0;
  double exceedance = 0.0;
  std::vector<double> samples;  // e_i in sample order, excluded samples omitted
};

// Type-7 sample quantile.
inline double quantile(std::vector<double> xs, double q) {
  if (xs.empty()) throw Error("quantile of an empty sample");
  std::sort(xs.begin(), xs.end());
  const double h = (xs.size() - 1) * q;
  const size_t lo = static_cast<size_t>(std::floor(h));
  const size_t hi = std::min(lo + 1, xs.size() - 1);
  return xs[lo] + (h - lo) * (xs[hi] - xs[lo]);
}

inline constexpr double kMaxExcludedFraction = 0.01;

// e_i = ⟨(1/p^m)[s=0] − ⋀c₁, χ⟩ over N sampled tuples. Samples that violate
// general position are excluded and counted; more than 1% fails the run.
inline McErrorEntry mc_zero_error(const std::vector<SpacePtr>& spaces, const TestFunction& chi, int N,
                                  std::uint64_t seed, std::uint64_t experiment, const RateBoundSpec& spec = {},
                                  std::optional<double> limit = std::nullopt, ZeroTolerances tol = {}) {
  if (N < 30) throw ConfigError("mc_zero_error: N must be at least 30");
  if (spaces.empty()) throw Error("mc_zero_error: no spaces");
  for (const auto& s : spaces)
    if (s->weight.name != spaces.front()->weight.name)
      throw UnsupportedConfiguration("mc_zero_error: all factors must carry the same weight");
  McErrorEntry out;
  out.p = spaces.front()->p;
  out.n_requested = N;
  out.limit = limit ? *limit : curvature_pairing(spaces.front()->weight, chi).value;
  std::vector<double> e(static_cast<size_t>(N), 0.0);
  std::vector<char> excluded(static_cast<size_t>(N), 0), flagged(static_cast<size_t>(N), 0);
  parallel_for(static_cast<size_t>(N), [&](size_t i) {
    const auto t = sample_tuple(spaces, seed, experiment, i);
    try {
      const auto mu = zero_measure(t, tol);
      e[i] = zero_measure_pairing(mu, chi) - out.limit;
      flagged[i] = mu.flagged;
    } catch (const GeneralPositionError&) {
      excluded[i] = 1;
    }
  });
  for (int i = 0; i < N; ++i) {
    if (excluded[i]) {
      ++out.n_excluded;
      continue;
    }
    out.n_flagged += flagged[i];
    out.samples.push_back(e[i]);
  }
  if (out.n_excluded > kMaxExcludedFraction * N)
    throw GeneralPositionError("mc_zero_error: " + std::to_string(out.n_excluded) + " of " + std::to_string(N) +
                               " samples not in general position");
  out.n_used = static_cast<int>(out.samples.size());
  double s1 = 0.0, s2 = 0.0;
  for (double x : out.samples) s1 += x;
  out.mean = s1 / out.n_used;
  for (double x : out.samples) s2 += (x - out.mean) * (x - out.mean);
  out.se = std::sqrt(s2 / (out.n_used - 1) / out.n_used);
  out.q05 = quantile(out.samples, 0.05);
  out.q50 = quantile(out.samples, 0.5);
  out.q95 = quantile(out.samples, 0.95);
  out.threshold = spec.threshold(out.p);
  int over = 0;
  for (double x : out.samples) over += std::abs(x) > out.threshold;
  out.exceedance = double(over) / out.n_used;
  return out;
}

// Threshold constant c placing c·λ_p/p at the given quantile of |e_i| at p.
inline double fit_threshold_constant(const McErrorEntry& e, const RateBoundSpec& spec, double q = 0.5) {
  std::vector<double> a;
  for (double x : e.samples) a.push_back(std::abs(x));
  const double c = quantile(a, q) * e.p / spec.lambda(e.p);
  if (!(c > 0.0)) throw Error("fit_threshold_constant: non-positive constant");
  return c;
}

// ξ from the slope s of log(exceedance) against log p:
// log budget = log c + (ξn − A/c) log p. Zero fractions are skipped.
inline double fit_exceedance_exponent(const ErrorSeries& fractions, const RateBoundSpec& spec, int n) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int m = 0;
  for (const auto& e : fractions.points) {
    if (!(e.value > 0.0)) continue;
    const double x = std::log(double(e.p)), y = std::log(e.value);
    sx += x, sy += y, sxx += x * x, sxy += x * y, ++m;
  }
  if (m < 2) return 0.0;
  const double slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
  return (slope + spec.A / spec.c) / n;
}

// ---- rate fit ------------------------------------------------------------------

struct RateFitReport {
  double exponent = 0.0;   // b in |e| ≈ C log p / p^b
  double constant = 0.0;   // C
  std::vector<double> residuals;
  double target = 1.0;
  double slack_constant = 0.0;  // 2 × the constant implied at the smallest p
  bool pass = false;

  nlohmann::json to_json() const {
    return {{"exponent", exponent}, {"constant", constant}, {"residuals", residuals},
            {"target", target},     {"slack_constant", slack_constant}, {"pass", pass}};
  }
};

// Least squares of log|e_p| − log log p against log p (the log log p column is
// fixed at coefficient 1). Pass iff |e_p| ≤ C log p p^{−target} everywhere with
// C twice the constant implied at the smallest p.
inline RateFitReport rate_fit(const ErrorSeries& s, const RateBoundSpec& spec) {
  std::vector<int> ps;
  for (const auto& e : s.points) {
    if (!std::isfinite(e.value)) throw Error("rate_fit: non-finite error");
    if (e.p < 2) throw Error("rate_fit: p must be at least 2");
    if (std::find(ps.begin(), ps.end(), e.p) == ps.end()) ps.push_back(e.p);
  }
  if (ps.size() < 4) throw Error("rate_fit: need at least 4 distinct p values");
  RateFitReport rep;
  rep.target = spec.target_exponent;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int m = 0;
  std::vector<std::pair<double, double>> xy;
  for (const auto& e : s.points) {
    if (e.value == 0.0) continue;
    const double x = std::log(double(e.p)), y = std::log(std::abs(e.value)) - std::log(x);
    xy.push_back({x, y});
    sx += x, sy += y, sxx += x * x, sxy += x * y, ++m;
  }
  if (m >= 2) {
    const double slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
    const double icpt = (sy - slope * sx) / m;
    rep.exponent = -slope;
    rep.constant = std::exp(icpt);
    for (const auto& [x, y] : xy) rep.residuals.push_back(y - (icpt + slope * x));
  } else {
    rep.exponent = kInf;
  }
  auto shape = [&](int p) { return std::log(double(p)) * std::pow(double(p), -spec.target_exponent); };
  const auto& first = s.points.front();
  rep.slack_constant = 2.0 * std::abs(first.value) / shape(first.p);
  rep.pass = true;
  for (const auto& e : s.points)
    if (std::abs(e.value) > rep.slack_constant * shape(e.p)) rep.pass = false;
  return rep;
}

// ---- mass and convergence checks -----------------------------------------------

struct WedgeMassReport {
  int expected = 0;  // p^m · ∫⋀c₁
  int n = 0, n_ok = 0, n_excluded = 0, n_flagged = 0;
  std::vector<std::uint64_t> failing_samples;
  std::vector<int> counts;  // total multiplicity per sample, −1 if excluded
  bool pass = false;
  double fraction_ok() const { return n > 0 ? double(n_ok) / n : 0.0; }
};

// Total multiplicity of the common zeros of sampled tuples (one section per
// factor) against the topological count p^m·volume. A sample counts when its total multiplicity is p^m·vol and no residual or
// recovery flag was raised.
inline WedgeMassReport wedge_mass_check(const std::vector<SpacePtr>& spaces, int n_samples, std::uint64_t seed,
                                        std::uint64_t experiment = 0, ZeroTolerances tol = {}) {
  if (spaces.empty()) throw Error("wedge_mass_check: no spaces");
  const auto ms = spaces.front()->weight.space;
  if (static_cast<int>(spaces.size()) != ms.dim())
    throw UnsupportedConfiguration("wedge_mass_check: one section per dimension is required");
  WedgeMassReport rep;
  const int p = spaces.front()->p;
  rep.expected = static_cast<int>(std::lround(std::pow(double(p), ms.dim()) * ms.volume()));
  rep.n = n_samples;
  rep.counts.assign(static_cast<size_t>(n_samples), -1);
  std::vector<char> flagged(static_cast<size_t>(n_samples), 0);
  parallel_for(static_cast<size_t>(n_samples), [&](size_t i) {
    try {
      const auto mu = zero_measure(sample_tuple(spaces, seed, experiment, i), tol);
      rep.counts[i] = mu.total_multiplicity();
      flagged[i] = mu.flagged;
    } catch (const GeneralPositionError&) {
      rep.counts[i] = -1;
    }
  });
  for (int i = 0; i < n_samples; ++i) {
    if (flagged[static_cast<size_t>(i)]) ++rep.n_flagged;
    if (rep.counts[i] == rep.expected && !flagged[static_cast<size_t>(i)]) {
      ++rep.n_ok;
    } else {
      if (rep.counts[i] < 0) ++rep.n_excluded;
      rep.failing_samples.push_back(static_cast<std::uint64_t>(i));
    }
  }
  rep.pass = rep.failing_samples.empty();
  return rep;
}

struct ConvergenceReport {
  bool pass = false;
  bool identically_zero = false;
  double max_ratio = 0.0;  // max |e_{k+1}| / |e_k|
};

inline constexpr double kMonotoneSlack = 1.2;

// Errors tend to 0 monotonically up to a 20% slack per step.
inline ConvergenceReport fswedge_convergence(const ErrorSeries& s, double zero_tol = 1e-12) {
  ConvergenceReport rep;
  if (s.points.empty()) return rep;
  rep.identically_zero = std::all_of(s.points.begin(), s.points.end(),
                                     [&](const ErrorPoint& e) { return std::abs(e.value) <= zero_tol; });
  if (rep.identically_zero) {
    rep.pass = true;
    return rep;
  }
  rep.pass = true;
  for (size_t k = 1; k < s.points.size(); ++k) {
    const double a = std::abs(s.points[k - 1].value), b = std::abs(s.points[k].value);
    const double r = a > 0.0 ? b / a : (b > zero_tol ? kInf : 0.0);
    rep.max_ratio = std::max(rep.max_ratio, r);
    if (b > kMonotoneSlack * a && b > zero_tol) rep.pass = false;
  }
  if (!(std::abs(s.points.back().value) < std::abs(s.points.front().value))) rep.pass = false;
  return rep;
}

}  // namespace bergman_lab
