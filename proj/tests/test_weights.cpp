#include <gtest/gtest.h>

#include <cmath>

#include "bergman_lab/curvature.hpp"

using namespace bergman_lab;

namespace {

// Independent oracle: 9-point stencil Laplacian of ½ log(1+|z|²) divided by 2π.
double fs_laplacian_oracle(Complex z) {
  auto f = [](Complex x) { return 0.5 * std::log1p(std::norm(x)); };
  const double h = 2e-4;
  double s = 0.0;
  for (auto [dx, dy] : {std::pair{1, 0}, {-1, 0}, {0, 1}, {0, -1}}) s += 4.0 * f(z + h * Complex(dx, dy));
  for (auto [dx, dy] : {std::pair{1, 1}, {-1, 1}, {1, -1}, {-1, -1}}) s += f(z + h * Complex(dx, dy));
  s -= 20.0 * f(z);
  return s / (6.0 * h * h) / (2.0 * kPi);
}

}  // namespace

TEST(Weights, EvalExamples) {
  const auto fs = fs_weight();
  EXPECT_DOUBLE_EQ(eval_weight(fs, Complex(0.0)), 0.0);
  EXPECT_NEAR(eval_weight(fs, Complex(1.0)), 0.5 * std::log(2.0), 1e-15);
  const auto lp = parse_preset("fs+logpole(0,0.3)");
  EXPECT_EQ(eval_weight(lp, Complex(0.0)), -kInf);
  EXPECT_EQ(eval_weight(parse_preset("fs+logpole_step(0,0.3)"), Complex(0.0)), -kInf);
  EXPECT_EQ(eval_weight(parse_preset("fs+poincare(0,0.3)"), Complex(0.0)), -kInf);
  EXPECT_TRUE(std::isfinite(eval_weight(parse_preset("fs+cone(0,0.5,0.05)"), Complex(0.0))));
}

TEST(Weights, TransitionAtInfinityIsContinuous) {
  for (const char* name : {"fs", "fs+logpole(0.2,0.3)", "fs+logpole_step(0,0.3)", "fs+cone(0.1,0.5,0.05)",
                           "fs+poincare(0,0.3)", "fs+poincare(0.3,0.2,0.7)"}) {
    const auto w = parse_preset(name);
    const double at_inf = eval_weight(w, ChartPoint(Coord::infinity()));
    const double near = eval_weight_chart(w, {Complex(1e-7, 2e-7)}, {true});
    EXPECT_NEAR(at_inf, near, 1e-6) << name;
    // Chart consistency at |z| = 2: φ(1/w) + log|w| against φ(z) + log|1/z|.
    const Complex z(1.2, -1.6);
    EXPECT_NEAR(eval_weight_chart(w, {1.0 / z}, {true}), eval_weight(w, z) - std::log(std::abs(z)), 1e-12) << name;
  }
  const auto fs = fs_weight();
  EXPECT_DOUBLE_EQ(eval_weight(fs, ChartPoint(Coord::infinity())), 0.0);
  const auto jp = parse_preset("fs+jointpole(0,0,0.5)", ModelSpace::product());
  EXPECT_NEAR(eval_weight(jp, ChartPoint(Coord::infinity(), Coord(0.3))),
              eval_weight_chart(jp, {Complex(1e-9), Complex(0.3)}, {true, false}), 1e-8);
}

TEST(Weights, PoincareLimitAtInfinity) {
  const auto w = parse_preset("fs+poincare(0,0.3,0.5)");
  EXPECT_NEAR(eval_weight(w, ChartPoint(Coord::infinity())), -0.3 * std::log(0.5), 1e-14);
}

TEST(Weights, FSCurvatureDensity) {
  const auto fs = fs_weight();
  for (Complex z : {Complex(0.0), Complex(0.5, 0.2), Complex(-2.0, 1.0)})
    EXPECT_NEAR(curvature_density_lebesgue(fs, z), fs_laplacian_oracle(z), 1e-7);
  const auto cm = curvature(fs);
  EXPECT_TRUE(cm.atoms.empty());
  EXPECT_NEAR(cm.total_mass, 1.0, 1e-6);
  EXPECT_NEAR(cm.density(ChartPoint(Complex(0.4, 0.1))), 1.0, 1e-14);
}

TEST(Weights, LogPoleCurvature) {
  for (const char* name : {"fs+logpole(0,0.3)", "fs+logpole_step(0,0.3)", "fs+logpole(0.4,0.3,0.6)"}) {
    const auto cm = curvature(parse_preset(name));
    ASSERT_EQ(cm.atoms.size(), 1u) << name;
    EXPECT_DOUBLE_EQ(cm.atoms[0].second, 0.3);
    EXPECT_NEAR(cm.total_mass, 1.0, 1e-4) << name;
  }
}

TEST(Weights, DegreeConservationForEveryPreset) {
  for (const char* name : {"fs", "fs+logpole(0,0.3)", "fs+logpole_step(0.1,0.2,0.3)", "fs+cone(0,0.5,0.05)",
                           "fs+cone(0.3,0.25,0.02)", "fs+poincare(0,0.3)", "fs+poincare(0.2,0.5,0.8)"}) {
    const auto cm = curvature(parse_preset(name));
    EXPECT_NEAR(cm.total_mass, 1.0, 1e-4) << name;
  }
  for (const char* name : {"fs", "fs+jointpole(0,0,0.5)", "fs+jointpole(0,0,0.3,0.7)"}) {
    const auto cm = curvature(parse_preset(name, ModelSpace::product()), std::nullopt);
    EXPECT_NEAR(cm.total_mass, 2.0, 1e-4) << name;
  }
  const auto jp = curvature(parse_preset("fs+jointpole(0,0,0.5)", ModelSpace::product()));
  ASSERT_EQ(jp.atoms.size(), 1u);
  EXPECT_DOUBLE_EQ(jp.atoms[0].second, 0.25);
}

TEST(Weights, ProductFSDensityIsOne) {
  const auto cm = curvature(fs_weight(ModelSpace::product()));
  EXPECT_NEAR(cm.density(ChartPoint(Coord(0.3), Coord(Complex(1.0, 2.0)))), 1.0, 1e-13);
}

TEST(Weights, Positivity) {
  const auto fs = verify_positivity(fs_weight(), 0.99);
  EXPECT_TRUE(fs.pass);
  EXPECT_NEAR(fs.min_ratio, 1.0, 1e-9);

  // Regularized pole at 0: ratio(r) = 1 − ε r0² (1+r²)²/(r²+r0²)², minimal at r = 0.
  const auto lp = verify_positivity(parse_preset("fs+logpole(0,0.3)"), 0.25);
  EXPECT_TRUE(lp.pass);
  EXPECT_NEAR(lp.min_ratio, 1.0 - 0.3 / (0.75 * 0.75), 1e-6);

  const auto small_r0 = verify_positivity(parse_preset("fs+logpole(0,0.3,0.2)"), 0.25);
  EXPECT_FALSE(small_r0.pass);
  EXPECT_NEAR(small_r0.min_ratio, 1.0 - 0.3 / 0.04, 1e-6);

  // The compactly cut-off pole goes negative in the cutoff annulus.
  const auto step = verify_positivity(parse_preset("fs+logpole_step(0,0.3,0.2)"), 0.25);
  EXPECT_FALSE(step.pass);
  EXPECT_LT(step.min_ratio, 0.0);

  EXPECT_TRUE(verify_positivity(parse_preset("fs+cone(0,0.5,0.05)"), 0.5).pass);
  const auto pc = verify_positivity(parse_preset("fs+poincare(0,0.3)"), 0.5);
  EXPECT_TRUE(pc.pass);
  EXPECT_GE(pc.min_ratio, 0.7 - 1e-9);

  const auto jp = verify_positivity(parse_preset("fs+jointpole(0,0,0.5)", ModelSpace::product()), 0.25);
  EXPECT_TRUE(jp.pass);
  EXPECT_NEAR(jp.min_ratio, 1.0 - 0.5 / 0.81, 1e-3);
  EXPECT_THROW(verify_positivity(fs_weight(), 0.0), Error);
}

TEST(Weights, Hoelder) {
  EXPECT_TRUE(verify_hoelder(fs_weight(), {1.0, 0.0, 10.0}, 2000, 7).pass);
  const auto lp = parse_preset("fs+logpole(0,0.3)");
  const auto ok = verify_hoelder(lp, {1.0, 1.0, 5.0}, 2000, 7);
  EXPECT_TRUE(ok.pass) << ok.empirical_constant;
  const auto bad = verify_hoelder(lp, {1.0, 0.05, 5.0}, 2000, 7);
  EXPECT_FALSE(bad.pass) << bad.empirical_constant;
  // Monotone in the pair count and bounded.
  double prev = 0.0;
  for (int n : {100, 400, 1600, 6400}) {
    const double c = verify_hoelder(lp, {1.0, 1.0, 5.0}, n, 11).empirical_constant;
    EXPECT_GE(c, prev);
    EXPECT_LE(c, 5.0);
    prev = c;
  }
  for (const char* name : {"fs+logpole_step(0,0.3)", "fs+logpole(0.5,0.3)"})
    EXPECT_TRUE(verify_hoelder(parse_preset(name), {1.0, 1.0, 5.0}, 2000, 3).pass) << name;
  EXPECT_THROW(verify_hoelder(lp, {1.0, 1.0, 5.0}, 0, 1), Error);
}

TEST(Weights, DistToSing) {
  const std::vector<SingularComponent> origin{{ChartPoint(Complex(0.0)), -1}};
  EXPECT_DOUBLE_EQ(dist_to_sing(ChartPoint(Complex(0.0)), origin), 0.0);
  EXPECT_DOUBLE_EQ(dist_to_sing(ChartPoint(Coord::infinity()), origin), 1.0);
  EXPECT_EQ(dist_to_sing(ChartPoint(Complex(0.3)), {}), kInf);
  const std::vector<SingularComponent> div{{ChartPoint(Coord(0.5), Coord(0.0)), 0}};
  const ChartPoint x(Coord(Complex(0.1, 0.2)), Coord(7.0));
  EXPECT_DOUBLE_EQ(dist_to_sing(x, div), chordal(Coord(Complex(0.1, 0.2)), Coord(0.5)));
}

TEST(Weights, FiniteAwayFromSingularSet) {
  for (const char* name : {"fs+logpole(0,0.3)", "fs+logpole_step(0,0.3)", "fs+poincare(0,0.3)", "fs+cone(0,0.5,0.1)"}) {
    const auto w = parse_preset(name);
    for (int i = 1; i <= 400; ++i) {
      const Complex z = std::polar(0.05 + 3.0 * i / 400.0, 0.37 * i);
      EXPECT_TRUE(std::isfinite(eval_weight(w, z))) << name;
      // Small steps give small changes.
      EXPECT_LT(std::abs(eval_weight(w, z * (1.0 + 1e-9)) - eval_weight(w, z)), 1e-6) << name;
    }
  }
}

TEST(Weights, Presets) {
  EXPECT_THROW(parse_preset("fs+banana(0)"), ConfigError);
  EXPECT_THROW(parse_preset("fs+logpole(0)"), ConfigError);
  EXPECT_THROW(parse_preset("fs+jointpole(0,0,0.5)"), UnsupportedConfiguration);
  EXPECT_THROW(parse_preset("fs+logpole(x,0.3)"), ConfigError);
  const auto w = parse_preset("fs+logpole(0.5-0.25i,0.3,0.6)");
  const auto& t = std::get<CutoffLogPole>(w.terms[1]);
  EXPECT_EQ(t.a, Complex(0.5, -0.25));
  EXPECT_DOUBLE_EQ(t.r0, 0.6);
  ASSERT_EQ(w.singular_set.size(), 1u);
  EXPECT_TRUE(parse_preset("fs+cone(0,0.5,0.05)").singular_set.empty());
  EXPECT_NEAR(factor_degree(parse_preset("fs+poincare(0,0.3)"), 0), 1.0, 1e-15);
}
