#include <gtest/gtest.h>

#include <cmath>

#include "bergman_lab/quadrature.hpp"

using namespace bergman_lab;

namespace {

double beta_oracle(int j, int p) { return std::tgamma(j + 1.0) * std::tgamma(p - j + 1.0) / std::tgamma(p + 2.0); }

}  // namespace

TEST(Quadrature, GaussLegendreIntegratesPolynomialsExactly) {
  const auto& [x, w] = gauss_legendre(12);
  double s = 0.0;
  for (size_t i = 0; i < x.size(); ++i) s += w[i] * std::pow(x[i], 22);
  EXPECT_NEAR(s, 2.0 / 23.0, 1e-14);
}

TEST(Quadrature, SphereVolumeIsOne) {
  auto r = integrate(ModelSpace::sphere(), [](const ChartPoint&) { return 1.0; }, {}, 1e-10);
  EXPECT_NEAR(r.value, 1.0, 1e-10);
  EXPECT_GT(r.node_count, 0);
}

TEST(Quadrature, BetaMoments) {
  for (auto [j, p] : {std::pair{2, 5}, {0, 3}, {7, 12}, {10, 20}}) {
    auto f = [j = j, p = p](const ChartPoint& x) {
      const double s = std::norm(x[0].value());
      return std::pow(s, j) / std::pow(1.0 + s, p);
    };
    auto r = integrate(ModelSpace::sphere(), f, {}, 1e-12);
    EXPECT_NEAR(r.value, beta_oracle(j, p), 1e-11) << j << "," << p;
  }
  auto r = integrate(
      ModelSpace::sphere(),
      [](const ChartPoint& x) {
        const double s = std::norm(x[0].value());
        return s * s / std::pow(1.0 + s, 5);
      },
      {}, 1e-12);
  EXPECT_NEAR(r.value, 1.0 / 60.0, 1e-12);
}

TEST(Quadrature, InverseModulusOnUnitDisc) {
  GridSpec g;
  g.max_radius = 1.0;
  g.inner_exponent = -1.0;
  auto r = integrate_plane_adaptive(g, [](Complex z) { return fs_density(z) / std::abs(z); }, 1e-10);
  EXPECT_NEAR(r.value, 0.5 + kPi / 4.0, 1e-10);
}

TEST(Quadrature, PoleGradingForNegativePowers) {
  for (double s : {-0.1, -0.5, -0.8, -0.89}) {
    GridSpec g;
    g.max_radius = 1.0;
    g.inner_exponent = 2.0 * s;
    auto r = integrate_plane_adaptive(g, [s](Complex z) { return std::pow(std::norm(z), s); }, 1e-10);
    const double exact = 2.0 * kPi / (2.0 * s + 2.0);
    EXPECT_LE(std::abs(r.value - exact) / exact, 1e-10) << s;
  }
}

TEST(Quadrature, DeclaredPoleOnSphere) {
  // |z−a|^{-1} against ω, pole declared at a = 0.3.
  const Complex a(0.3, 0.0);
  auto f = [a](const ChartPoint& x) { return 1.0 / std::abs(x[0].value() - a); };
  auto r = integrate(ModelSpace::sphere(), f, {{ChartPoint(a), -1.0}}, 1e-9);
  auto r2 = integrate(ModelSpace::sphere(), f, {{ChartPoint(a), -1.0}}, 1e-11);
  EXPECT_NEAR(r.value, r2.value, 1e-9);
}

TEST(Quadrature, RejectsNonIntegrableExponent) {
  auto f = [](const ChartPoint&) { return 1.0; };
  EXPECT_THROW(integrate(ModelSpace::sphere(), f, {{ChartPoint(Complex(0.0)), -2.0}}, 1e-8), QuadratureError);
  EXPECT_THROW(integrate(ModelSpace::product(), f, {{ChartPoint(Coord(0.0), Coord(0.0)), -4.5}}, 1e-8),
               QuadratureError);
}

TEST(Quadrature, ToleranceFailureReportsEstimate) {
  // Discontinuous integrand across a circle that is not a panel boundary.
  auto f = [](const ChartPoint& x) { return std::abs(x[0].value() - 0.37) < 0.11 ? 1.0 : 0.0; };
  try {
    integrate(ModelSpace::sphere(), f, {}, 1e-14);
    FAIL() << "expected QuadratureError";
  } catch (const QuadratureError& e) {
    EXPECT_GT(e.achieved_estimate, 0.0);
    EXPECT_TRUE(std::isfinite(e.achieved_estimate));
  }
}

TEST(Quadrature, ProductVolumeIsTwo) {
  auto r = integrate(ModelSpace::product(), [](const ChartPoint&) { return 1.0; }, {}, 1e-8);
  EXPECT_NEAR(r.value, 2.0, 1e-8);
}

TEST(Quadrature, ToricVolumeIsTwo) {
  ToricGridSpec tg;
  const double v = integrate_toric(tg, [](double r1, double r2) {
    return 2.0 * fs_density(r1) * fs_density(r2);
  });
  EXPECT_NEAR(v, 2.0, 1e-8);
}

TEST(Quadrature, Linearity) {
  auto f = [](const ChartPoint& x) { return std::cos(x[0].value().real()) / (1.0 + std::norm(x[0].value())); };
  auto g = [](const ChartPoint& x) { return std::exp(-std::norm(x[0].value() - 0.5)); };
  const double a = 0.7, b = -1.3;
  auto rf = integrate(ModelSpace::sphere(), f, {}, 1e-10);
  auto rg = integrate(ModelSpace::sphere(), g, {}, 1e-10);
  auto rl = integrate(ModelSpace::sphere(), [&](const ChartPoint& x) { return a * f(x) + b * g(x); }, {}, 1e-10);
  const double bound = 2.0 * (std::abs(a) * rf.error_estimate + std::abs(b) * rg.error_estimate + rl.error_estimate);
  EXPECT_LE(std::abs(rl.value - (a * rf.value + b * rg.value)), std::max(bound, 1e-14));
}

TEST(Quadrature, DoublingStaysWithinEstimate) {
  auto f = [](Complex z) { return fs_density(z) * std::exp(-std::norm(z - Complex(0.2, 0.4))); };
  GridSpec g;
  auto r = integrate_plane_adaptive(g, f, 1e-10);
  GridSpec d = g;
  d.uniform_panels *= 2;
  d.angular *= 2;
  EXPECT_LE(std::abs(integrate_plane(d, f) - r.value), std::max(r.error_estimate, 1e-14));
}

TEST(Quadrature, PairLaplacianConstantIsZero) {
  for (const auto& chi : {radial_bump(Complex(0.3, 0.1), 0.2), coordinate_moment(false), fs_moment(),
                          fs_moment_sq(), gaussian_bump(Complex(0.5, -0.2))}) {
    auto r = pair_laplacian(ModelSpace::sphere(), [](Complex) { return 3.0; }, chi);
    EXPECT_NEAR(r.value, 0.0, 1e-10) << chi.name;
  }
}

TEST(Quadrature, PairLaplacianAgainstClosedForms) {
  const double R = 0.2;
  const auto chi = radial_bump(Complex(0.3, 0.1), R);
  // dd^c|z|² = (2/π) dA, so ∫|z|² dd^cχ = (2/π)∫χ dA = 0.4 R².
  auto r = pair_laplacian(ModelSpace::sphere(), [](Complex z) { return std::norm(z); }, chi);
  EXPECT_NEAR(r.value, 0.4 * R * R, 1e-12);
  // Re z is harmonic.
  auto h = pair_laplacian(ModelSpace::sphere(), [](Complex z) { return z.real(); }, chi);
  EXPECT_NEAR(h.value, 0.0, 1e-12);
}

TEST(Quadrature, PairLaplacianLogAwayFromPole) {
  const auto chi = radial_bump(Complex(0.5, 0.0), 0.2);
  const std::vector<Pole> sing{{ChartPoint(Complex(0.0)), 0.0}};
  auto g = [](Complex z) { return std::log(std::abs(z)); };
  auto a = pair_laplacian(ModelSpace::sphere(), g, chi, sing, true, 1e-10);
  EXPECT_TRUE(std::isfinite(a.value));
  // ∫ log|z| dd^cχ = χ(0) = 0 since χ vanishes at 0.
  EXPECT_NEAR(a.value, 0.0, 1e-10);
  // Forbidden when the support meets the singular point.
  const auto chi0 = radial_bump(Complex(0.1, 0.0), 0.2);
  EXPECT_THROW(pair_laplacian(ModelSpace::sphere(), g, chi0, sing, true), Error);
  // Allowed otherwise: ∫ log|z| dd^cχ = χ(0).
  auto b = pair_laplacian(ModelSpace::sphere(), g, chi0, sing, false, 1e-9);
  EXPECT_NEAR(b.value, std::pow(1.0 - 0.25, 4), 1e-8);
}
