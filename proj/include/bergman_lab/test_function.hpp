#pragma once

#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "bergman_lab/core.hpp"

namespace bergman_lab {

struct Disc {
  Complex center;
  double radius;
};

// A C² test function on a model space together with its closed-form dd^c.
//
// On the sphere `ddc_density` is the density of dd^cχ with respect to Lebesgue
// area in the affine chart; it must vanish outside `ddc_support` when that is
// set. On the product only `value` is used (toric test functions).
struct TestFunction {
  std::string name;
  ModelSpace space = ModelSpace::sphere();
  std::function<double(const ChartPoint&)> value;
  std::function<double(Complex)> ddc_density;
  std::optional<Disc> ddc_support;
  // Radii (about the support center) where the dd^c density is not smooth.
  std::vector<double> ddc_breaks;
  Complex center{0.0, 0.0};
  // Singular points near which dd^cχ ≡ 0, and the clearance radius (Euclidean, chart).
  std::vector<Coord> flat_near;
  double clearance = 0.0;
  double c2_norm = 1.0;
  // Set for constant functions, whose pairings reduce to total masses.
  std::optional<double> constant_value;

  double operator()(const ChartPoint& x) const { return value(x); }
  bool is_flat_near(const Coord& a) const {
    for (const auto& c : flat_near)
      if (c == a) return true;
    return false;
  }
};

inline TestFunction constant_function(double c = 1.0, ModelSpace space = ModelSpace::sphere()) {
  TestFunction f;
  f.name = "constant";
  f.space = space;
  f.value = [c](const ChartPoint&) { return c; };
  f.ddc_density = [](Complex) { return 0.0; };
  f.c2_norm = 0.0;
  f.constant_value = c;
  return f;
}

// (1 − t²)⁴ with t = |z−c|/R; dd^c has density (1−t²)²(64t² − 16)/(2πR²) on the disc.
inline TestFunction radial_bump(Complex c, double R, std::string name = "bump") {
  TestFunction f;
  f.name = std::move(name);
  f.value = [c, R](const ChartPoint& x) {
    if (x[0].is_inf()) return 0.0;
    const double t2 = std::norm(x[0].value() - c) / (R * R);
    return t2 >= 1.0 ? 0.0 : std::pow(1.0 - t2, 4);
  };
  f.ddc_density = [c, R](Complex z) {
    const double t2 = std::norm(z - c) / (R * R);
    if (t2 >= 1.0) return 0.0;
    const double u = 1.0 - t2;
    return u * u * (64.0 * t2 - 16.0) / (2.0 * 3.14159265358979323846 * R * R);
  };
  f.ddc_support = Disc{c, R};
  f.center = c;
  f.c2_norm = 16.0 / (R * R);
  return f;
}

namespace detail {
// Global test functions F(|z−a|²) with closed-form Laplacian 4(sF'' + F').
inline TestFunction radial_global(std::string name, Complex a, std::function<double(double)> F,
                                  std::function<double(double)> lap, double c2) {
  TestFunction f;
  f.name = std::move(name);
  f.value = [a, F](const ChartPoint& x) { return x[0].is_inf() ? 0.0 : F(std::norm(x[0].value() - a)); };
  f.ddc_density = [a, lap](Complex z) { return lap(std::norm(z - a)) / (2.0 * 3.14159265358979323846); };
  f.center = a;
  f.c2_norm = c2;
  return f;
}
}  // namespace detail

// 1/(1+|z|²)
inline TestFunction fs_moment() {
  return detail::radial_global(
      "moment1", 0.0, [](double s) { return 1.0 / (1.0 + s); },
      [](double s) { return (4.0 * s - 4.0) / std::pow(1.0 + s, 3); }, 4.0);
}

// 1/(1+|z|²)²
inline TestFunction fs_moment_sq() {
  return detail::radial_global(
      "moment2", 0.0, [](double s) { return 1.0 / ((1.0 + s) * (1.0 + s)); },
      [](double s) { return (16.0 * s - 8.0) / std::pow(1.0 + s, 4); }, 8.0);
}

// exp(−|z−a|²)
inline TestFunction gaussian_bump(Complex a) {
  return detail::radial_global(
      "gauss", a, [](double s) { return std::exp(-s); },
      [](double s) { return (4.0 * s - 4.0) * std::exp(-s); }, 4.0);
}

// Re z/(1+|z|²) (imag = false) or Im z/(1+|z|²).
inline TestFunction coordinate_moment(bool imag) {
  TestFunction f;
  f.name = imag ? "im_moment" : "re_moment";
  auto part = [imag](Complex z) { return imag ? z.imag() : z.real(); };
  f.value = [part](const ChartPoint& x) {
    if (x[0].is_inf()) return 0.0;
    const Complex z = x[0].value();
    return part(z) / (1.0 + std::norm(z));
  };
  f.ddc_density = [part](Complex z) {
    const double q = 1.0 + std::norm(z);
    return -4.0 * part(z) / (3.14159265358979323846 * q * q * q);
  };
  f.c2_norm = 8.0;
  return f;
}

// Toric test function on the product: g₁(|z₁|²)·g₂(|z₂|²).
inline TestFunction toric_product(std::string name, std::function<double(double)> g1, std::function<double(double)> g2) {
  TestFunction f;
  f.name = std::move(name);
  f.space = ModelSpace::product();
  f.value = [g1, g2](const ChartPoint& x) {
    const double a = x[0].is_inf() ? g1(kInf) : g1(std::norm(x[0].value()));
    const double b = x[1].is_inf() ? g2(kInf) : g2(std::norm(x[1].value()));
    return a * b;
  };
  return f;
}

}  // namespace bergman_lab
