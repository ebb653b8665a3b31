#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "bergman_lab/analysis.hpp"

using namespace bergman_lab;

namespace {

const char* kPole = "fs+logpole(0,0.3)";

ErrorSeries series(std::vector<std::pair<int, double>> v) {
  ErrorSeries s;
  for (auto [p, e] : v) s.push(p, e);
  return s;
}

}  // namespace

TEST(Battery, ShapeAndExactness) {
  for (const char* preset : {"fs", "fs+logpole(0.3,0.3)", "fs+cone(0.2,0.5,0.05)", "fs+poincare(0,0.3)"}) {
    const auto bat = test_battery(parse_preset(preset));
    ASSERT_EQ(bat.size(), 8u) << preset;
    for (const auto& f : bat) {
      EXPECT_LE(std::abs(ddc_total(f)), 1e-10) << preset << " " << f.name;
      if (!f.flat_near.empty()) EXPECT_GT(f.clearance, 0.0) << f.name;
    }
  }
}

TEST(Battery, FlatMembersClearSigma) {
  const auto w = parse_preset("fs+logpole(0.3,0.3)");
  std::vector<Coord> sigma{Coord(Complex(0.3))};
  int flat = 0;
  for (const auto& f : test_battery(w)) {
    if (f.flat_near.empty()) continue;
    ++flat;
    EXPECT_NEAR(support_distance(f, sigma), f.clearance, 1e-15);
    // dd^cχ vanishes inside the clearance.
    for (double r : {0.0, 0.5 * f.clearance, 0.99 * f.clearance})
      for (double th : {0.0, 1.0, 2.5}) EXPECT_EQ(f.ddc_density(0.3 + std::polar(r, th)), 0.0) << f.name;
  }
  EXPECT_EQ(flat, 5);
}

TEST(Battery, HarmonicCutoffDensityMatchesFiniteDifferences) {
  const auto f = harmonic_cutoff(Complex(0.1, -0.2), false, 0.15, 0.6);
  auto v = [&](Complex z) { return f(ChartPoint(z)); };
  auto lap = [&](Complex z, double h) {
    return (v(z + h) + v(z - h) + v(z + Complex(0, h)) + v(z - Complex(0, h)) - 4.0 * v(z)) / (h * h);
  };
  for (Complex z : {Complex(0.4, -0.1), Complex(-0.2, 0.1), Complex(0.1, 0.2), Complex(0.5, -0.5)}) {
    const double rich = (4.0 * lap(z, 1e-3) - lap(z, 2e-3)) / 3.0;
    EXPECT_NEAR(f.ddc_density(z), rich / (2.0 * kPi), 1e-7) << z;
  }
}

TEST(FsCurrentError, PureFsVanishes) {
  const auto w = fs_weight();
  const auto sp = build_space(w, 5);
  for (const auto& f : test_battery(w)) EXPECT_NEAR(fs_current_error(sp, f).value, 0.0, 1e-12) << f.name;
  const auto prod = build_space(fs_weight(ModelSpace::product()), 3);
  EXPECT_EQ(fs_current_error(prod, toric_moment()).value, 0.0);
  EXPECT_THROW(fs_current_error(build_space(parse_preset("fs+jointpole(0,0,0.5)", ModelSpace::product()), 2),
                                toric_moment()),
               UnsupportedConfiguration);
}

TEST(FsCurrentError, SupportMeetingSigmaRejected) {
  const auto w = parse_preset(kPole);
  const auto sp = build_space(w, 8);
  const auto m = battery_member(w, "moment1");
  EXPECT_THROW(fs_current_error(sp, m), Error);
  const auto r = fs_current_error(sp, m, true);
  EXPECT_TRUE(std::isfinite(r.value));
  EXPECT_FALSE(r.flat);
  EXPECT_EQ(r.log_dist, kInf);
  const auto b = fs_current_error(sp, battery_member(w, "bump_0"));
  EXPECT_TRUE(b.flat);
  EXPECT_NEAR(b.log_dist, std::abs(std::log(0.1)), 1e-12);
}

TEST(FsCurrentError, DecaysAndStaysInEnvelope) {
  const auto w = parse_preset(kPole);
  for (const char* name : {"bump_0", "bump_1"}) {
    const auto chi = battery_member(w, name);
    ErrorSeries s;
    for (int p : {8, 16, 32, 64}) s.push(p, fs_current_error(build_space(w, p), chi).value);
    EXPECT_LT(std::abs(s.points.back().value), std::abs(s.points.front().value)) << name;
    const auto env = envelope_check(s, std::abs(std::log(chi.clearance)), chi.c2_norm);
    EXPECT_TRUE(env.pass) << name;
    EXPECT_TRUE(env.strictly_decreasing) << name;
    EXPECT_TRUE(fswedge_convergence(s).pass) << name;
  }
}

TEST(FsCurrentError, ConeSeriesDecreases) {
  // Σ is empty, so a global test function carries no log-dist term.
  const auto w = parse_preset("fs+cone(0,0.5,0.05)");
  const auto chi = battery_member(w, "moment1");
  ErrorSeries s;
  for (int p : {8, 16, 32}) s.push(p, fs_current_error(build_space(w, p), chi).value);
  EXPECT_TRUE(fswedge_convergence(s).pass);
  EXPECT_FALSE(fswedge_convergence(s).identically_zero);
}

TEST(McZeroError, PureFsCoordinateMoment) {
  const auto sp = build_space(fs_weight(), 10);
  const auto e = mc_zero_error({sp}, coordinate_moment(false), 300, 11, 1);
  EXPECT_EQ(e.n_used, 300);
  EXPECT_NEAR(e.limit, 0.0, 1e-12);
  EXPECT_LE(std::abs(e.mean), 3.0 * e.se);
  EXPECT_LE(e.q05, e.q50);
  EXPECT_LE(e.q50, e.q95);
}

TEST(McZeroError, ExpectationIdentity) {
  const auto w = parse_preset(kPole);
  const auto sp = build_space(w, 16);
  for (const char* name : {"bump_0", "gauss"}) {
    const auto chi = battery_member(w, name);
    const auto e = mc_zero_error({sp}, chi, 200, 12, 2);
    const double fs = fs_current_error(sp, chi, true).value;
    EXPECT_LE(std::abs(e.mean - fs), 3.0 * e.se) << name << " mean " << e.mean << " fs " << fs;
  }
}

TEST(McZeroError, DeterministicAcrossWorkers) {
  const auto sp = build_space(parse_preset(kPole), 8);
  const auto chi = radial_bump(0.5, 0.3);
  set_worker_count(1);
  const auto a = mc_zero_error({sp}, chi, 40, 13, 3);
  set_worker_count(8);
  const auto b = mc_zero_error({sp}, chi, 40, 13, 3);
  set_worker_count(1);
  ASSERT_EQ(a.samples.size(), b.samples.size());
  for (size_t i = 0; i < a.samples.size(); ++i) EXPECT_EQ(a.samples[i], b.samples[i]);
  EXPECT_EQ(a.mean, b.mean);
}

TEST(McZeroError, ExceedanceDecreases) {
  const auto w = parse_preset(kPole);
  // A global test function, so every sample contributes zeros to the pairing.
  const auto chi = battery_member(w, "gauss");
  RateBoundSpec spec;
  std::vector<McErrorEntry> entries;
  for (int p : {8, 16, 32}) {
    entries.push_back(mc_zero_error({build_space(w, p)}, chi, 200, 14, 4, spec));
    if (p == 8) spec.c = fit_threshold_constant(entries.back(), spec);
  }
  ErrorSeries frac;
  for (auto& e : entries) {
    int over = 0;
    for (double x : e.samples) over += std::abs(x) > spec.threshold(e.p);
    frac.push(e.p, double(over) / e.n_used);
  }
  EXPECT_NEAR(frac.points[0].value, 0.5, 0.01);
  for (size_t k = 1; k < frac.points.size(); ++k)
    EXPECT_LE(frac.points[k].value, frac.points[k - 1].value + 1.0 / 200) << frac.points[k].p;
  EXPECT_TRUE(std::isfinite(fit_exceedance_exponent(frac, spec, 1)));
}

TEST(McZeroError, Preconditions) {
  const auto sp = build_space(fs_weight(), 4);
  EXPECT_THROW(mc_zero_error({sp}, fs_moment(), 10, 1, 1), ConfigError);
  EXPECT_THROW(mc_zero_error({}, fs_moment(), 30, 1, 1), Error);
}

TEST(RateFit, SyntheticLogOverP) {
  ErrorSeries s;
  for (int p : {4, 8, 16, 32, 64}) s.push(p, 5.0 * std::log(double(p)) / p);
  RateBoundSpec spec;
  const auto r = rate_fit(s, spec);
  EXPECT_NEAR(r.exponent, 1.0, 0.05);
  EXPECT_NEAR(r.constant, 5.0, 1e-9);
  EXPECT_TRUE(r.pass);
  for (double x : r.residuals) EXPECT_NEAR(x, 0.0, 1e-12);
  const auto j = r.to_json();
  EXPECT_TRUE(j["pass"].get<bool>());
  EXPECT_EQ(j["residuals"].size(), 5u);
}

TEST(RateFit, ConstantFailsAndSlowerTargetPasses) {
  const auto c = series({{4, 0.1}, {8, 0.1}, {16, 0.1}, {32, 0.1}, {64, 0.1}});
  EXPECT_FALSE(rate_fit(c, {}).pass);
  ErrorSeries s;
  for (int p : {4, 6, 8, 10, 12}) s.push(p, 0.3 * std::log(double(p)) / std::cbrt(double(p)));
  RateBoundSpec third;
  third.target_exponent = 1.0 / 3.0;
  EXPECT_TRUE(rate_fit(s, third).pass);
  EXPECT_FALSE(rate_fit(s, {}).pass);
}

TEST(RateFit, Preconditions) {
  EXPECT_THROW(rate_fit(series({{4, 1}, {8, 1}, {16, 1}}), {}), Error);
  ErrorSeries bad;
  bad.points = {{4, 1.0}, {8, NAN}, {16, 1.0}, {32, 1.0}};
  EXPECT_THROW(rate_fit(bad, {}), Error);
  ErrorSeries s;
  s.push(4, 1.0);
  EXPECT_THROW(s.push(4, 1.0), Error);
  EXPECT_THROW(s.push(8, INFINITY), Error);
}

TEST(ErrorSeries, Csv) {
  ErrorSeries s;
  s.statistic = "mc_mean";
  s.push(8, 0.25, 0.125);
  s.push(16, 0.5);
  std::ostringstream os;
  write_series_csv(os, s);
  EXPECT_EQ(os.str(), "p,statistic,se\n8,0.25,0.125\n16,0.5,0\n");
}

TEST(WedgeMass, SphereAndProduct) {
  for (int p : {1, 7, 20}) {
    const auto r = wedge_mass_check({build_space(parse_preset(kPole), p)}, 30, 21);
    EXPECT_EQ(r.expected, p);
    EXPECT_TRUE(r.pass) << p;
  }
  for (const char* preset : {"fs", "fs+jointpole(0,0,0.5)"}) {
    const auto sp = build_space(parse_preset(preset, ModelSpace::product()), 3);
    const auto r = wedge_mass_check({sp, sp}, 30, 22);
    EXPECT_EQ(r.expected, 18);
    EXPECT_TRUE(r.pass) << preset;
    EXPECT_EQ(r.fraction_ok(), 1.0);
  }
  EXPECT_THROW(wedge_mass_check({build_space(fs_weight(ModelSpace::product()), 2)}, 5, 1), UnsupportedConfiguration);
}

TEST(FsWedgeConvergence, Reports) {
  EXPECT_TRUE(fswedge_convergence(series({{4, 0.0}, {8, 1e-14}, {16, 0.0}})).identically_zero);
  EXPECT_TRUE(fswedge_convergence(series({{4, 1.0}, {8, 1.1}, {16, 0.5}})).pass);
  EXPECT_FALSE(fswedge_convergence(series({{4, 1.0}, {8, 1.3}, {16, 0.5}})).pass);
  EXPECT_FALSE(fswedge_convergence(series({{4, 1.0}, {8, 1.1}, {16, 1.15}})).pass);
}

TEST(Envelope, FitsAtSmallestP) {
  ErrorSeries s;
  for (int p : {8, 16, 32, 64}) s.push(p, 3.0 * std::log(double(p)) / p);
  const auto r = envelope_check(s);
  EXPECT_NEAR(r.C, 3.0, 1e-12);
  EXPECT_TRUE(r.pass);
  EXPECT_TRUE(r.strictly_decreasing);
  EXPECT_FALSE(envelope_check(series({{8, 0.1}, {16, 0.3}})).pass);
}

TEST(Quantile, Type7) {
  EXPECT_DOUBLE_EQ(quantile({3, 1, 2, 4}, 0.5), 2.5);
  EXPECT_DOUBLE_EQ(quantile({3, 1, 2, 4}, 0.0), 1.0);
  EXPECT_DOUBLE_EQ(quantile({3, 1, 2, 4}, 1.0), 4.0);
}
