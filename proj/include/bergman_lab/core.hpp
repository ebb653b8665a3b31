#pragma once

#include <cmath>
#include <complex>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace bergman_lab {

using Complex = std::complex<double>;

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kInf = std::numeric_limits<double>::infinity();

// Error hierarchy. Every failure surfaced by the library derives from Error.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct UnsupportedConfiguration : Error {
  using Error::Error;
};
struct QuadratureError : Error {
  QuadratureError(const std::string& what, double achieved)
      : Error(what), achieved_estimate(achieved) {}
  double achieved_estimate;
};
struct ConditioningError : Error {
  using Error::Error;
};
struct GeneralPositionError : Error {
  using Error::Error;
};
struct PositivityError : Error {
  using Error::Error;
};
struct ConfigError : Error {
  using Error::Error;
};

enum class SpaceKind { Sphere, SphereProduct };

struct ModelSpace {
  SpaceKind kind = SpaceKind::Sphere;

  constexpr int dim() const { return kind == SpaceKind::Sphere ? 1 : 2; }
  // ∫ ω^n with ω the normalized FS form per factor (ω² = 2 ω₁∧ω₂ on the product).
  constexpr double volume() const { return kind == SpaceKind::Sphere ? 1.0 : 2.0; }

  static constexpr ModelSpace sphere() { return {SpaceKind::Sphere}; }
  static constexpr ModelSpace product() { return {SpaceKind::SphereProduct}; }
  friend constexpr bool operator==(ModelSpace a, ModelSpace b) { return a.kind == b.kind; }
};

// A coordinate on one P¹ factor: a finite complex value or the point ∞.
class Coord {
 public:
  constexpr Coord() = default;
  Coord(Complex z) : z_(z), inf_(false) {}  // NOLINT(google-explicit-constructor)
  Coord(double x) : z_(x, 0.0), inf_(false) {}  // NOLINT(google-explicit-constructor)
  static Coord infinity() {
    Coord c;
    c.inf_ = true;
    return c;
  }
  bool is_inf() const { return inf_; }
  Complex value() const {
    if (inf_) throw Error("Coord::value() called on the point at infinity");
    return z_;
  }
  // Coordinate in the reciprocal chart w = 1/z; ∞ ↦ 0.
  Complex reciprocal() const { return inf_ ? Complex(0.0) : 1.0 / z_; }
  friend bool operator==(const Coord& a, const Coord& b) {
    return a.inf_ == b.inf_ && (a.inf_ || a.z_ == b.z_);
  }

 private:
  Complex z_{0.0, 0.0};
  bool inf_ = false;
};

// A point of the model space: one Coord per factor.
struct ChartPoint {
  std::vector<Coord> coords;

  ChartPoint() = default;
  ChartPoint(Coord z) : coords{z} {}  // NOLINT(google-explicit-constructor)
  ChartPoint(Complex z) : coords{Coord(z)} {}  // NOLINT(google-explicit-constructor)
  ChartPoint(Coord z1, Coord z2) : coords{z1, z2} {}

  int factors() const { return static_cast<int>(coords.size()); }
  const Coord& operator[](int k) const { return coords[static_cast<size_t>(k)]; }
  bool any_inf() const {
    for (const auto& c : coords)
      if (c.is_inf()) return true;
    return false;
  }
  friend bool operator==(const ChartPoint& a, const ChartPoint& b) { return a.coords == b.coords; }
};

// Chordal distance on P¹ normalized to diameter 1.
inline double chordal(const Coord& a, const Coord& b) {
  if (a.is_inf() && b.is_inf()) return 0.0;
  if (a.is_inf()) return 1.0 / std::sqrt(1.0 + std::norm(b.value()));
  if (b.is_inf()) return 1.0 / std::sqrt(1.0 + std::norm(a.value()));
  const Complex z = a.value(), w = b.value();
  return std::abs(z - w) / std::sqrt((1.0 + std::norm(z)) * (1.0 + std::norm(w)));
}

// Product distance: Euclidean combination of per-factor chordal distances.
inline double chordal(const ChartPoint& a, const ChartPoint& b) {
  if (a.factors() != b.factors()) throw Error("chordal: factor count mismatch");
  double s = 0.0;
  for (int k = 0; k < a.factors(); ++k) {
    const double d = chordal(a[k], b[k]);
    s += d * d;
  }
  return std::sqrt(s);
}

// log(Σ exp(x_i)) with max shift; returns -inf for an empty or all -inf input.
inline double log_sum_exp(const std::vector<double>& xs) {
  double m = -kInf;
  for (double x : xs) m = std::max(m, x);
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double x : xs) s += std::exp(x - m);
  return m + std::log(s);
}

// Numbers within 1e-9 of an integer snap to it; used by the exponent rules.
inline double snap_integer(double x) {
  const double r = std::round(x);
  return std::abs(x - r) < 1e-9 ? r : x;
}

}  // namespace bergman_lab
