#pragma once

// Zero sets of random sections: univariate roots on P¹, common zeros of pairs
// on P¹×P¹, zero measures and their pairings, and general-position checks.

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <string>
#include <vector>

#include "bergman_lab/curvature.hpp"
#include "bergman_lab/sampling.hpp"

namespace bergman_lab {

inline constexpr double kTrimTol = 1e-12;     // relative leading/trailing coefficient trim
inline constexpr double kClusterTol = 1e-8;   // chordal
inline constexpr double kMatchTol = 1e-6;     // chordal, product root matching
inline constexpr double kResidualTol = 1e-6;  // relative to the sup-norm proxy

struct ZeroTolerances {
  double cluster = kClusterTol;
  double residual = kResidualTol;
};

struct ZeroMeasure {
  ModelSpace space;
  int p = 0;
  std::vector<std::pair<ChartPoint, int>> points;
  double scale = 1.0;  // 1/p^m
  double max_residual = 0.0;
  bool flagged = false;
  std::vector<std::string> notes;

  int total_multiplicity() const {
    int s = 0;
    for (const auto& pt : points) s += pt.second;
    return s;
  }
  double mass() const { return scale * total_multiplicity(); }
};

namespace detail {

// Parlett–Reinsch balancing (radix 2); eigenvalues are unchanged.
inline void balance(Eigen::MatrixXcd& A) {
  const int n = static_cast<int>(A.rows());
  for (bool done = false; !done;) {
    done = true;
    for (int i = 0; i < n; ++i) {
      double c = 0.0, r = 0.0;
      for (int j = 0; j < n; ++j)
        if (j != i) c += std::abs(A(j, i)), r += std::abs(A(i, j));
      if (c == 0.0 || r == 0.0) continue;
      const double s = c + r;
      double f = 1.0;
      for (double g = r / 2.0; c < g; c *= 4.0) f *= 2.0;
      for (double g = r * 2.0; c > g; c /= 4.0) f /= 2.0;
      if ((c + r) / f < 0.95 * s) {
        done = false;
        A.row(i) /= f;
        A.col(i) *= f;
      }
    }
  }
}

inline Complex horner(const std::vector<Complex>& c, Complex x, Complex* deriv = nullptr) {
  Complex f = 0.0, d = 0.0;
  for (size_t k = c.size(); k-- > 0;) {
    d = d * x + f;
    f = f * x + c[k];
  }
  if (deriv) *deriv = d;
  return f;
}

// p'(w)/p(w) for p = Σ c_k w^k, evaluated in the reciprocal chart when |w| > 1:
// p(w) = w^n q(1/w) gives p'/p = n/w − q'(u)/(q(u) w²).
inline Complex log_derivative(const std::vector<Complex>& c, const std::vector<Complex>& rev, Complex w, double& rel) {
  const int n = static_cast<int>(c.size()) - 1;
  Complex d;
  if (std::abs(w) <= 1.0) {
    const Complex f = horner(c, w, &d);
    rel = std::abs(f);
    return d / f;
  }
  const Complex u = 1.0 / w;
  const Complex f = horner(rev, u, &d);
  rel = std::abs(f);
  return double(n) / w - d / (f * w * w);
}

// Simultaneous Aberth–Ehrlich refinement of all roots.
inline void aberth(const std::vector<Complex>& c, std::vector<Complex>& z) {
  std::vector<Complex> rev(c.rbegin(), c.rend());
  const size_t n = z.size();
  for (int it = 0; it < 80; ++it) {
    double moved = 0.0;
    for (size_t k = 0; k < n; ++k) {
      double rel;
      const Complex g = log_derivative(c, rev, z[k], rel);
      if (rel == 0.0 || !std::isfinite(std::abs(g))) continue;
      Complex s = 0.0;
      for (size_t j = 0; j < n; ++j)
        if (j != k && z[j] != z[k]) s += 1.0 / (z[k] - z[j]);
      const Complex step = 1.0 / (g - s);
      if (!std::isfinite(std::abs(step))) continue;
      z[k] -= step;
      moved = std::max(moved, std::abs(step) / std::max(1.0, std::abs(z[k])));
    }
    if (moved < 1e-15) break;
  }
}

struct UniRoots {
  int at_zero = 0;
  int at_inf = 0;
  std::vector<Complex> roots;  // nonzero finite roots, multiplicity one each
};

// Roots of Σ a_k w^k with formal degree a.size()−1. Coefficients whose scaled
// magnitude |a_k|·weight_k falls below kTrimTol of the norm are treated as zero
// at either end: the trimmed leading ones give roots at ∞, the trailing ones at 0.
inline UniRoots poly_roots(const std::vector<Complex>& a, const std::vector<double>& weight) {
  const int n = static_cast<int>(a.size()) - 1;
  double norm = 0.0;
  for (int k = 0; k <= n; ++k) norm += std::norm(a[k] * weight[k]);
  norm = std::sqrt(norm);
  if (!(norm > 0.0) || !std::isfinite(norm)) throw Error("poly_roots: zero or non-finite coefficient vector");
  auto live = [&](int k) { return std::abs(a[k]) * weight[k] > kTrimTol * norm; };
  int hi = n, lo = 0;
  while (!live(hi)) --hi;
  while (!live(lo)) ++lo;
  UniRoots out;
  out.at_inf = n - hi;
  out.at_zero = lo;
  const int deg = hi - lo;
  if (deg == 0) return out;
  std::vector<Complex> c(a.begin() + lo, a.begin() + hi + 1);
  // Scale w = σu so that the end coefficients balance, then make monic.
  const double log_sigma = (std::log(std::abs(c[0])) - std::log(std::abs(c[deg]))) / deg;
  Eigen::MatrixXcd C = Eigen::MatrixXcd::Zero(deg, deg);
  for (int i = 1; i < deg; ++i) C(i, i - 1) = 1.0;
  for (int k = 0; k < deg; ++k) {
    if (c[k] == 0.0) continue;
    const double logmag = std::log(std::abs(c[k])) + k * log_sigma - std::log(std::abs(c[deg]));
    C(k, deg - 1) = -std::exp(logmag) * (c[k] / std::abs(c[k])) / (c[deg] / std::abs(c[deg]));
  }
  balance(C);
  Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(C, false);
  if (es.info() != Eigen::Success) throw Error("poly_roots: eigenvalue iteration failed");
  const double sigma = std::exp(log_sigma);
  for (int k = 0; k < deg; ++k) out.roots.push_back(sigma * es.eigenvalues()(k));
  aberth(c, out.roots);
  return out;
}

// Normalized magnitudes of FS monomials of degree n: 1/√((n+1)·C(n,k)).
inline std::vector<double> fs_weights(int n) {
  std::vector<double> w(static_cast<size_t>(n + 1));
  for (int k = 0; k <= n; ++k)
    w[static_cast<size_t>(k)] =
        std::exp(-0.5 * (std::log(n + 1.0) + std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0)));
  return w;
}

// Roots as (Coord, multiplicity) with z = center + w.
inline std::vector<std::pair<Coord, int>> zero_set(const UniRoots& r, Complex center = 0.0) {
  std::vector<std::pair<Coord, int>> out;
  if (r.at_zero > 0) out.push_back({Coord(center), r.at_zero});
  if (r.at_inf > 0) out.push_back({Coord::infinity(), r.at_inf});
  for (Complex w : r.roots) out.push_back({Coord(center + w), 1});
  return out;
}

// Multiplicity-weighted centroid per coordinate, in z or 1/z whichever stays bounded.
inline Coord coord_centroid(const std::vector<std::pair<Coord, int>>& c) {
  bool near_inf = false;
  for (const auto& [x, m] : c) near_inf = near_inf || x.is_inf() || std::abs(x.value()) > 1.0;
  Complex acc = 0.0;
  int tot = 0;
  for (const auto& [x, m] : c) {
    acc += double(m) * (near_inf ? (x.is_inf() ? Complex(0.0) : 1.0 / x.value()) : x.value());
    tot += m;
  }
  acc /= double(tot);
  if (!near_inf) return Coord(acc);
  return acc == Complex(0.0) ? Coord::infinity() : Coord(1.0 / acc);
}

// Merge points closer than tol (single linkage); multiplicities add and a
// merged cluster sits at its weighted centroid.
inline std::vector<std::pair<ChartPoint, int>> cluster(const std::vector<std::pair<ChartPoint, int>>& pts, double tol) {
  const size_t n = pts.size();
  std::vector<size_t> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](size_t i) {
    while (parent[i] != i) i = parent[i] = parent[parent[i]];
    return i;
  };
  for (size_t i = 0; i < n; ++i)
    for (size_t j = i + 1; j < n; ++j)
      if (chordal(pts[i].first, pts[j].first) < tol) parent[find(i)] = find(j);
  std::vector<std::pair<ChartPoint, int>> out;
  std::vector<long> slot(n, -1);
  for (size_t i = 0; i < n; ++i) {
    const size_t r = find(i);
    if (slot[r] < 0) {
      slot[r] = static_cast<long>(out.size());
      out.push_back({pts[r].first, 0});
    }
    out[static_cast<size_t>(slot[r])].second += pts[i].second;
  }
  const int dim = n ? pts.front().first.factors() : 0;
  for (size_t k = 0; k < out.size(); ++k) {
    std::vector<size_t> members;
    for (size_t i = 0; i < n; ++i)
      if (static_cast<size_t>(slot[find(i)]) == k) members.push_back(i);
    if (members.size() < 2) continue;
    for (int d = 0; d < dim; ++d) {
      std::vector<std::pair<Coord, int>> c;
      for (size_t i : members) c.push_back({pts[i].first[d], pts[i].second});
      out[k].first.coords[static_cast<size_t>(d)] = coord_centroid(c);
    }
  }
  return out;
}

// Quasi-uniform points on P¹ (Fibonacci lattice pulled back by stereographic projection).
inline std::vector<Coord> sphere_points(int n) {
  std::vector<Coord> out;
  const double golden = kPi * (3.0 - std::sqrt(5.0));
  for (int i = 0; i < n; ++i) {
    const double h = 1.0 - 2.0 * (i + 0.5) / n;
    const double r = std::sqrt(1.0 - h * h);
    // (x, y, h) ↦ (x + iy)/(1 − h)
    out.push_back(Coord(std::polar(r / (1.0 - h), golden * i)));
  }
  return out;
}

inline double sup_norm_proxy(const Section& s) {
  double m = 0.0;
  const auto pts = sphere_points(s.space->weight.space.dim() == 1 ? 256 : 24);
  if (s.space->weight.space.dim() == 1) {
    for (const auto& z : pts) m = std::max(m, std::abs(s.value_at(ChartPoint(z))));
  } else {
    for (const auto& z1 : pts)
      for (const auto& z2 : pts) m = std::max(m, std::abs(s.value_at(ChartPoint(z1, z2))));
  }
  return m;
}

}  // namespace detail

// ---- sphere -------------------------------------------------------------------

// Zeros of a section on P¹. With `reciprocal_chart` the roots are computed from
// the expansion in u = 1/z instead, for chart-covariance checks.
inline ZeroMeasure roots_sphere(const Section& s, bool reciprocal_chart = false, ZeroTolerances tol = {}) {
  const auto& sp = *s.space;
  if (sp.weight.space.dim() != 1) throw Error("roots_sphere: section must live on the sphere");
  const int p = sp.p;
  const Eigen::VectorXcd mt = s.normalized_monomial();
  if (mt.norm() == 0.0) throw Error("roots_sphere: zero section");
  const Complex c = sp.basis_center[0];
  std::vector<Complex> a(static_cast<size_t>(p + 1), 0.0);
  std::vector<double> weight(static_cast<size_t>(p + 1), 1.0);
  for (int j = 0; j < sp.dim(); ++j) {
    const int e = sp.basis[static_cast<size_t>(j)][0];
    a[static_cast<size_t>(e)] = mt(j) * std::exp(-sp.log_scale(j));
    weight[static_cast<size_t>(e)] = std::exp(sp.log_scale(j));
  }
  std::vector<std::pair<ChartPoint, int>> pts;
  if (!reciprocal_chart) {
    for (const auto& [z, m] : detail::zero_set(detail::poly_roots(a, weight), c)) pts.push_back({ChartPoint(z), m});
  } else {
    // Expand Σ a_j (z−c)^j in powers of z, then reverse to u = 1/z.
    std::vector<Complex> b(static_cast<size_t>(p + 1), 0.0);
    for (int j = 0; j <= p; ++j) {
      Complex pw = 1.0;
      for (int k = j; k >= 0; --k) {
        const double binom = std::exp(std::lgamma(j + 1.0) - std::lgamma(k + 1.0) - std::lgamma(j - k + 1.0));
        b[static_cast<size_t>(k)] += a[static_cast<size_t>(j)] * std::round(binom) * pw;
        pw *= -c;
      }
    }
    std::reverse(b.begin(), b.end());
    const auto r = detail::poly_roots(b, detail::fs_weights(p));
    if (r.at_zero > 0) pts.push_back({ChartPoint(Coord::infinity()), r.at_zero});
    if (r.at_inf > 0) pts.push_back({ChartPoint(Coord(0.0)), r.at_inf});
    for (Complex u : r.roots) pts.push_back({ChartPoint(1.0 / u), 1});
  }
  ZeroMeasure mu;
  mu.space = ModelSpace::sphere();
  mu.p = p;
  mu.scale = 1.0 / p;
  mu.points = detail::cluster(pts, tol.cluster);
  const double sup = detail::sup_norm_proxy(s);
  for (const auto& [pt, m] : mu.points) mu.max_residual = std::max(mu.max_residual, std::abs(s.value_at(pt)) / sup);
  if (mu.max_residual > tol.residual) {
    mu.flagged = true;
    mu.notes.push_back("evaluation residual above tolerance");
  }
  return mu;
}

// ---- product ----------------------------------------------------------------

namespace detail {

// Σ m(i,j) z₁^i z₂^j of bidegree (d, e).
struct BiPoly {
  Eigen::MatrixXcd m;
  int d() const { return static_cast<int>(m.rows()) - 1; }
  int e() const { return static_cast<int>(m.cols()) - 1; }
};

// A section with its line components split off: z₁^a z₂^b times vanishing of
// order α along {z₁=∞} and β along {z₂=∞}, times q.
struct Stripped {
  int a = 0, alpha = 0, b = 0, beta = 0;
  BiPoly q;
};

inline Stripped strip_lines(const Section& s) {
  const auto& sp = *s.space;
  if (sp.basis_center[0] != 0.0 || sp.basis_center[1] != 0.0)
    throw UnsupportedConfiguration("common zeros need a basis centered at the origin");
  const int p = sp.p;
  const Eigen::VectorXcd mt = s.normalized_monomial();
  Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(p + 1, p + 1);
  Eigen::MatrixXd mag = Eigen::MatrixXd::Zero(p + 1, p + 1);
  for (int k = 0; k < sp.dim(); ++k) {
    const auto& J = sp.basis[static_cast<size_t>(k)];
    m(J[0], J[1]) = mt(k) * std::exp(-sp.log_scale(k));
    mag(J[0], J[1]) = std::abs(mt(k));
  }
  const double thr = kTrimTol * mag.norm();
  if (!(mag.norm() > 0.0)) throw Error("common zeros: zero section");
  int i0 = p, i1 = 0, j0 = p, j1 = 0;
  for (int i = 0; i <= p; ++i)
    for (int j = 0; j <= p; ++j)
      if (mag(i, j) > thr) i0 = std::min(i0, i), i1 = std::max(i1, i), j0 = std::min(j0, j), j1 = std::max(j1, j);
  Stripped out;
  out.a = i0, out.alpha = p - i1, out.b = j0, out.beta = p - j1;
  out.q.m = m.block(i0, j0, i1 - i0 + 1, j1 - j0 + 1);
  for (int i = 0; i < out.q.m.rows(); ++i)
    for (int j = 0; j < out.q.m.cols(); ++j)
      if (mag(i0 + i, j0 + j) <= thr) out.q.m(i, j) = 0.0;
  return out;
}

// Restriction to {z_k = z}: a polynomial in the other coordinate, up to a
// nonzero factor (the reciprocal chart is used when |z| > 1).
inline std::vector<Complex> restrict_to(const BiPoly& q, int k, const Coord& z) {
  const int d = k == 0 ? q.d() : q.e(), e = k == 0 ? q.e() : q.d();
  auto coef = [&](int i, int j) { return k == 0 ? q.m(i, j) : q.m(j, i); };
  std::vector<Complex> c(static_cast<size_t>(e + 1), 0.0);
  for (int j = 0; j <= e; ++j) {
    if (z.is_inf()) {
      c[static_cast<size_t>(j)] = coef(d, j);
      continue;
    }
    const Complex x = z.value();
    const bool recip = std::abs(x) > 1.0;
    const Complex y = recip ? 1.0 / x : x;
    Complex acc = 0.0;
    for (int i = d; i >= 0; --i) acc = acc * y + coef(recip ? d - i : i, j);
    c[static_cast<size_t>(j)] = acc;
  }
  return c;
}

inline std::vector<std::pair<Coord, int>> restricted_zeros(const BiPoly& q, int k, const Coord& z) {
  const auto c = restrict_to(q, k, z);
  const int e = static_cast<int>(c.size()) - 1;
  double n = 0.0;
  for (auto x : c) n = std::max(n, std::abs(x));
  if (!(n > kTrimTol * q.m.cwiseAbs().maxCoeff())) throw GeneralPositionError("section vanishes on a coordinate line");
  return zero_set(poly_roots(c, fs_weights(e)));
}

// q and its gradient in chart coordinates; recip_k selects x_k = 1/z_k.
inline std::array<Complex, 3> eval_bipoly(const BiPoly& q, Complex x1, bool r1, Complex x2, bool r2) {
  const int d = q.d(), e = q.e();
  std::array<Complex, 3> out{0.0, 0.0, 0.0};
  for (int i = 0; i <= d; ++i) {
    const int ei = r1 ? d - i : i;
    for (int j = 0; j <= e; ++j) {
      if (q.m(i, j) == 0.0) continue;
      const int ej = r2 ? e - j : j;
      const Complex p1 = std::pow(x1, ei), p2 = std::pow(x2, ej);
      out[0] += q.m(i, j) * p1 * p2;
      if (ei > 0) out[1] += q.m(i, j) * double(ei) * std::pow(x1, ei - 1) * p2;
      if (ej > 0) out[2] += q.m(i, j) * double(ej) * p1 * std::pow(x2, ej - 1);
    }
  }
  return out;
}

// |q(x)| / Σ|m_ij||x₁|^i|x₂|^j in the chart adapted to x: the relative
// coefficient perturbation that makes x an exact zero.
inline double backward_error(const BiPoly& q, const ChartPoint& x) {
  const bool r1 = x[0].is_inf() || std::abs(x[0].value()) > 1.0;
  const bool r2 = x[1].is_inf() || std::abs(x[1].value()) > 1.0;
  const Complex x1 = r1 ? x[0].reciprocal() : x[0].value();
  const Complex x2 = r2 ? x[1].reciprocal() : x[1].value();
  Complex v = 0.0;
  double mag = 0.0;
  for (int i = 0; i <= q.d(); ++i)
    for (int j = 0; j <= q.e(); ++j) {
      if (q.m(i, j) == 0.0) continue;
      const Complex t = q.m(i, j) * std::pow(x1, r1 ? q.d() - i : i) * std::pow(x2, r2 ? q.e() - j : j);
      v += t;
      mag += std::abs(t);
    }
  return mag > 0.0 ? std::abs(v) / mag : 0.0;
}

// The full bidegree (p, p) polynomial of a section, basis centered at 0.
inline BiPoly full_bipoly(const Section& s) {
  const auto& sp = *s.space;
  const Eigen::VectorXcd m = s.monomial();
  BiPoly out{Eigen::MatrixXcd::Zero(sp.p + 1, sp.p + 1)};
  for (int k = 0; k < sp.dim(); ++k) out.m(sp.basis[static_cast<size_t>(k)][0], sp.basis[static_cast<size_t>(k)][1]) = m(k);
  return out;
}

// 2D Newton on (q₁, q₂) in the chart adapted to the point; keeps the best iterate.
inline ChartPoint polish_common(const BiPoly& q1, const BiPoly& q2, const ChartPoint& x0) {
  const bool r1 = x0[0].is_inf() || std::abs(x0[0].value()) > 1.0;
  const bool r2 = x0[1].is_inf() || std::abs(x0[1].value()) > 1.0;
  Complex x1 = r1 ? x0[0].reciprocal() : x0[0].value();
  Complex x2 = r2 ? x0[1].reciprocal() : x0[1].value();
  const double s1 = q1.m.cwiseAbs().maxCoeff(), s2 = q2.m.cwiseAbs().maxCoeff();
  auto res = [&](const std::array<Complex, 3>& a, const std::array<Complex, 3>& b) {
    return std::max(std::abs(a[0]) / s1, std::abs(b[0]) / s2);
  };
  auto f1 = eval_bipoly(q1, x1, r1, x2, r2), f2 = eval_bipoly(q2, x1, r1, x2, r2);
  double best = res(f1, f2);
  for (int it = 0; it < 8 && best > 0.0; ++it) {
    const Complex det = f1[1] * f2[2] - f1[2] * f2[1];
    if (det == 0.0) break;
    const Complex d1 = (f1[0] * f2[2] - f1[2] * f2[0]) / det;
    const Complex d2 = (f1[1] * f2[0] - f1[0] * f2[1]) / det;
    const Complex y1 = x1 - d1, y2 = x2 - d2;
    const auto g1 = eval_bipoly(q1, y1, r1, y2, r2), g2 = eval_bipoly(q2, y1, r1, y2, r2);
    const double r = res(g1, g2);
    if (!(r < best)) break;
    x1 = y1, x2 = y2, f1 = g1, f2 = g2, best = r;
  }
  auto back = [](Complex x, bool r) { return r ? (x == 0.0 ? Coord::infinity() : Coord(1.0 / x)) : Coord(x); };
  return ChartPoint(back(x1, r1), back(x2, r2));
}

// Coefficients of (u + t)^i (1 − t̄u)^{d−i}, i = 0..d.
inline std::vector<std::vector<Complex>> mobius_basis(int d, Complex t) {
  std::vector<std::vector<Complex>> out;
  for (int i = 0; i <= d; ++i) {
    std::vector<Complex> c{1.0};
    auto mul = [&c](Complex a0, Complex a1) {
      std::vector<Complex> r(c.size() + 1, 0.0);
      for (size_t k = 0; k < c.size(); ++k) r[k] += c[k] * a0, r[k + 1] += c[k] * a1;
      c = r;
    };
    for (int k = 0; k < i; ++k) mul(t, 1.0);
    for (int k = i; k < d; ++k) mul(1.0, -std::conj(t));
    out.push_back(c);
  }
  return out;
}

// Values z₁ at which q₁(z₁,·) and q₂(z₁,·) share a root, counted with
// multiplicity d₁e₂ + d₂e₁. The Sylvester matrix in z₂, after the rotation
// z₁ = (u + t)/(1 − t̄u), is a matrix polynomial S(u) with row degrees d₁ and
// d₂; its column-degree linearization (of Sᵀ) is an ordinary eigenproblem.
inline std::vector<Coord> resultant_roots(const BiPoly& q1, const BiPoly& q2) {
  const int d1 = q1.d(), e1 = q1.e(), d2 = q2.d(), e2 = q2.e();
  const int N = e1 + e2;
  const int M = e2 * d1 + e1 * d2;
  for (Complex t : {std::polar(0.3, 0.7), std::polar(0.55, 2.1), std::polar(0.8, -1.3), std::polar(1.7, 0.4)}) {
    const auto B1 = mobius_basis(d1, t), B2 = mobius_basis(d2, t);
    // S[k] = coefficient of u^k.
    const int D = std::max(d1, d2);
    std::vector<Eigen::MatrixXcd> S(static_cast<size_t>(D + 1), Eigen::MatrixXcd::Zero(N, N));
    std::vector<int> deg(static_cast<size_t>(N));
    for (int r = 0; r < N; ++r) {
      const bool first = r < e2;
      const BiPoly& q = first ? q1 : q2;
      const auto& Bq = first ? B1 : B2;
      const int e = first ? e1 : e2, d = first ? d1 : d2, shift = first ? r : r - e2;
      deg[static_cast<size_t>(r)] = d;
      for (int j = 0; j <= e; ++j) {
        const int col = shift + (e - j);
        for (int i = 0; i <= d; ++i) {
          if (q.m(i, j) == 0.0) continue;
          for (int k = 0; k <= d; ++k) S[static_cast<size_t>(k)](r, col) += q.m(i, j) * Bq[static_cast<size_t>(i)][static_cast<size_t>(k)];
        }
      }
    }
    Eigen::MatrixXcd Th(N, N), Tl = Eigen::MatrixXcd::Zero(N, M);
    std::vector<int> off(static_cast<size_t>(N));
    for (int r = 0, o = 0; r < N; ++r) {
      off[static_cast<size_t>(r)] = o;
      const int dr = deg[static_cast<size_t>(r)];
      Th.col(r) = S[static_cast<size_t>(dr)].row(r).transpose();
      for (int k = 0; k < dr; ++k) Tl.col(o + k) = S[static_cast<size_t>(k)].row(r).transpose();
      o += dr;
    }
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(Th);
    const auto& sv = svd.singularValues();
    if (!(sv(N - 1) > 1e-12 * sv(0))) continue;
    const Eigen::MatrixXcd K = Th.partialPivLu().solve(Tl);
    Eigen::MatrixXcd A = Eigen::MatrixXcd::Zero(M, M);
    for (int r = 0; r < N; ++r) {
      const int o = off[static_cast<size_t>(r)], dr = deg[static_cast<size_t>(r)];
      if (dr == 0) continue;
      for (int k = 0; k + 1 < dr; ++k) A(o + k, o + k + 1) = 1.0;
      A.row(o + dr - 1) = -K.row(r);
    }
    balance(A);
    Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(A, false);
    if (es.info() != Eigen::Success) continue;
    std::vector<Coord> out;
    for (int k = 0; k < M; ++k) {
      const Complex u = es.eigenvalues()(k);
      const Complex den = 1.0 - std::conj(t) * u;
      out.push_back(den == 0.0 ? Coord::infinity() : Coord((u + t) / den));
    }
    return out;
  }
  throw GeneralPositionError("resultant vanishes identically: the sections share a component");
}

// Order of vanishing of q at a corner (σ₁, σ₂) ∈ {0, ∞}².
inline int corner_order(const BiPoly& q, bool inf1, bool inf2) {
  const double thr = kTrimTol * q.m.cwiseAbs().maxCoeff();
  int best = q.d() + q.e() + 1;
  for (int i = 0; i <= q.d(); ++i)
    for (int j = 0; j <= q.e(); ++j)
      if (std::abs(q.m(i, j)) > thr) best = std::min(best, (inf1 ? q.d() - i : i) + (inf2 ? q.e() - j : j));
  return best;
}

// Common zeros near a corner where both q₁, q₂ vanish, found by Newton in the
// blown-up charts z₂ = t z₁ and z₁ = s z₂ (corner moved to the origin), seeded
// along the tangent directions of the lowest-order forms. Near a high-order
// corner the resultant eigenvalues are too perturbed to seed these.
inline std::vector<ChartPoint> corner_roots(const BiPoly& q1, const BiPoly& q2, bool inf1, bool inf2) {
  auto flip = [&](const BiPoly& q) {
    BiPoly f{q.m};
    if (inf1) f.m = f.m.colwise().reverse().eval();
    if (inf2) f.m = f.m.rowwise().reverse().eval();
    return f;
  };
  const BiPoly f1 = flip(q1), f2 = flip(q2);
  const int o1 = corner_order(f1, false, false), o2 = corner_order(f2, false, false);
  std::vector<ChartPoint> out;
  for (int chart = 0; chart < 2; ++chart) {
    // r(x, t) = q(x, t x)/x^o (chart 0) or q(t x, x)/x^o (chart 1).
    auto blow = [&](const BiPoly& q, int o) {
      BiPoly r{Eigen::MatrixXcd::Zero(q.d() + q.e() - o + 1, (chart == 0 ? q.e() : q.d()) + 1)};
      for (int i = 0; i <= q.d(); ++i)
        for (int j = 0; j <= q.e(); ++j)
          if (i + j >= o) r.m(i + j - o, chart == 0 ? j : i) += q.m(i, j);
      return r;
    };
    const BiPoly r1 = blow(f1, o1), r2 = blow(f2, o2);
    std::vector<Complex> seeds;
    for (const BiPoly* r : {&r1, &r2}) {
      std::vector<Complex> h(static_cast<size_t>(r->e() + 1));
      for (int j = 0; j <= r->e(); ++j) h[static_cast<size_t>(j)] = r->m(0, j);
      for (Complex t : poly_roots(h, std::vector<double>(h.size(), 1.0)).roots)
        if (std::abs(t) <= 1.0) seeds.push_back(t);
    }
    for (Complex t0 : seeds)
      for (double rad : {1e-4, 1e-3, 1e-2, 3e-2, 1e-1})
        for (int k = 0; k < 8; ++k) {
          Complex x = std::polar(rad, k * kPi / 4.0), t = t0;
          for (int it = 0; it < 40; ++it) {
            const auto a = eval_bipoly(r1, x, false, t, false), b = eval_bipoly(r2, x, false, t, false);
            const Complex det = a[1] * b[2] - a[2] * b[1];
            if (det == 0.0) break;
            const Complex dx = (a[0] * b[2] - a[2] * b[0]) / det, dt = (a[1] * b[0] - a[0] * b[1]) / det;
            x -= dx, t -= dt;
            if (std::abs(dx) + std::abs(dt) < 1e-15 * (1.0 + std::abs(x) + std::abs(t))) break;
          }
          if (!(std::abs(x) > 0.0) || !std::isfinite(std::abs(x)) || !std::isfinite(std::abs(t))) continue;
          Complex z1 = chart == 0 ? x : t * x, z2 = chart == 0 ? t * x : x;
          auto back = [](Complex z, bool inf) { return inf ? (z == 0.0 ? Coord::infinity() : Coord(1.0 / z)) : Coord(z); };
          out.push_back(ChartPoint(back(z1, inf1), back(z2, inf2)));
        }
  }
  return out;
}

}  // namespace detail

// Common zeros of a pair of sections on P¹×P¹ (bidegree (p, p)).
inline ZeroMeasure common_zeros_product(const Section& s1, const Section& s2, ZeroTolerances tol = {}) {
  using detail::Stripped;
  const auto& sp1 = *s1.space;
  if (sp1.weight.space.dim() != 2 || s2.space->weight.space.dim() != 2)
    throw Error("common_zeros_product: sections must live on the product");
  if (sp1.p != s2.space->p) throw Error("common_zeros_product: bidegrees differ");
  const int p = sp1.p;
  const Stripped a = detail::strip_lines(s1), b = detail::strip_lines(s2);
  ZeroMeasure mu;
  mu.space = ModelSpace::product();
  mu.p = p;
  mu.scale = 1.0 / (double(p) * p);
  std::vector<std::pair<ChartPoint, int>> pts;

  // Lines: vertical {z₁ = 0}, {z₁ = ∞}; horizontal {z₂ = 0}, {z₂ = ∞}.
  struct Line {
    int factor;
    Coord at;
    int mult;
  };
  auto lines = [](const Stripped& s) {
    std::vector<Line> out;
    if (s.a) out.push_back({0, Coord(0.0), s.a});
    if (s.alpha) out.push_back({0, Coord::infinity(), s.alpha});
    if (s.b) out.push_back({1, Coord(0.0), s.b});
    if (s.beta) out.push_back({1, Coord::infinity(), s.beta});
    return out;
  };
  const auto L1 = lines(a), L2 = lines(b);
  auto point_on = [](const Line& l, const Coord& other) {
    return l.factor == 0 ? ChartPoint(l.at, other) : ChartPoint(other, l.at);
  };
  for (const auto& l1 : L1)
    for (const auto& l2 : L2) {
      if (l1.factor == l2.factor) {
        if (l1.at == l2.at) throw GeneralPositionError("the sections share a coordinate line");
        continue;
      }
      pts.push_back({l1.factor == 0 ? ChartPoint(l1.at, l2.at) : ChartPoint(l2.at, l1.at), l1.mult * l2.mult});
    }
  // Line of one section against the remaining divisor of the other.
  for (const auto& [ls, q] : {std::pair{&L1, &b.q}, std::pair{&L2, &a.q}})
    for (const auto& l : *ls)
      for (const auto& [z, m] : detail::restricted_zeros(*q, l.factor, l.at)) pts.push_back({point_on(l, z), l.mult * m});

  // Remaining divisors against each other.
  const auto& q1 = a.q;
  const auto& q2 = b.q;
  auto vertical_family = [&](const detail::BiPoly& f, const detail::BiPoly& g) {
    // f depends on z₁ only: vertical lines at its roots meet g.
    std::vector<Complex> c(static_cast<size_t>(f.d() + 1));
    for (int i = 0; i <= f.d(); ++i) c[static_cast<size_t>(i)] = f.m(i, 0);
    for (const auto& [r, m] : detail::zero_set(detail::poly_roots(c, detail::fs_weights(f.d()))))
      for (const auto& [z, n] : detail::restricted_zeros(g, 0, r)) pts.push_back({ChartPoint(r, z), m * n});
  };
  auto horizontal_family = [&](const detail::BiPoly& f, const detail::BiPoly& g) {
    std::vector<Complex> c(static_cast<size_t>(f.e() + 1));
    for (int j = 0; j <= f.e(); ++j) c[static_cast<size_t>(j)] = f.m(0, j);
    for (const auto& [r, m] : detail::zero_set(detail::poly_roots(c, detail::fs_weights(f.e()))))
      for (const auto& [z, n] : detail::restricted_zeros(g, 1, r)) pts.push_back({ChartPoint(z, r), m * n});
  };
  if (q1.e() == 0) {
    vertical_family(q1, q2);
  } else if (q2.e() == 0) {
    vertical_family(q2, q1);
  } else if (q1.d() == 0) {
    horizontal_family(q1, q2);
  } else if (q2.d() == 0) {
    horizontal_family(q2, q1);
  } else {
    const auto z1s = detail::resultant_roots(q1, q2);
    auto match = [&](const Coord& z1, double& gap) {
      const auto A = detail::restricted_zeros(q1, 0, z1), B = detail::restricted_zeros(q2, 0, z1);
      gap = kInf;
      Coord z2;
      for (const auto& x : A)
        for (const auto& y : B)
          if (double dd = chordal(x.first, y.first); dd < gap) gap = dd, z2 = x.first;
      return detail::polish_common(q1, q2, ChartPoint(z1, z2));
    };
    // Corners where both vanish are isolated multiple points, assigned
    // directly. Their eigenvalues are ill-conditioned, so with corners present
    // every eigenvalue is polished and those landing on a corner or repeating
    // an earlier point are dropped.
    std::vector<ChartPoint> corners;
    int take = 0;
    for (bool inf1 : {false, true})
      for (bool inf2 : {false, true}) {
        const int o = detail::corner_order(q1, inf1, inf2) * detail::corner_order(q2, inf1, inf2);
        if (o == 0) continue;
        const ChartPoint c(inf1 ? Coord::infinity() : Coord(0.0), inf2 ? Coord::infinity() : Coord(0.0));
        pts.push_back({c, o});
        corners.push_back(c);
        take += o;
      }
    if (take > static_cast<int>(z1s.size())) throw Error("common_zeros_product: corner multiplicity exceeds the count");
    if (corners.empty()) {
      for (const auto& z1 : z1s) {
        double gap;
        pts.push_back({match(z1, gap), 1});
        if (gap > kMatchTol) {
          mu.flagged = true;
          mu.notes.push_back("unmatched resultant root (chordal gap " + std::to_string(gap) + ")");
        }
      }
    } else {
      const size_t need = z1s.size() - static_cast<size_t>(take);
      std::vector<std::pair<double, ChartPoint>> found;
      auto accept = [&](const ChartPoint& x) {
        for (const auto& c : corners)
          if (chordal(x, c) < 1e-10) return false;
        for (const auto& f : found)
          if (chordal(x, f.second) < tol.cluster) return false;
        const double res = std::max(detail::backward_error(q1, x), detail::backward_error(q2, x));
        if (res > tol.residual) return false;
        found.push_back({res, x});
        return true;
      };
      std::vector<Coord> dropped;
      for (const auto& z1 : z1s) {
        double gap;
        if (!accept(match(z1, gap))) dropped.push_back(z1);
      }
      // Roots hidden by the corner cluster: seed Newton with every root of
      // the first restriction above each dropped eigenvalue.
      for (size_t k = 0; k < dropped.size() && found.size() < need; ++k)
        for (const auto& x : detail::restricted_zeros(q1, 0, dropped[k]))
          if (found.size() < need) accept(detail::polish_common(q1, q2, ChartPoint(dropped[k], x.first)));
      for (const auto& c : corners)
        if (found.size() < need)
          for (const auto& x : detail::corner_roots(q1, q2, c[0].is_inf(), c[1].is_inf()))
            if (found.size() < need) accept(detail::polish_common(q1, q2, x));
      if (found.size() != need) {
        mu.flagged = true;
        mu.notes.push_back("recovered " + std::to_string(found.size()) + " of " + std::to_string(need) +
                           " off-corner common zeros");
      }
      for (const auto& f : found) pts.push_back({f.second, 1});
    }
  }
  mu.points = detail::cluster(pts, tol.cluster);
  if (std::abs(mu.total_multiplicity() - 2 * p * p) > 0.01 * 2 * p * p) {
    mu.flagged = true;
    mu.notes.push_back("total multiplicity differs from 2p²");
  }
  // Backward error of the full polynomials: the weighted value |s|e^{−pφ}
  // amplifies roundoff without bound near a pole.
  const auto f1 = detail::full_bipoly(s1), f2 = detail::full_bipoly(s2);
  for (const auto& [pt, m] : mu.points)
    mu.max_residual = std::max({mu.max_residual, detail::backward_error(f1, pt), detail::backward_error(f2, pt)});
  if (mu.max_residual > tol.residual) {
    mu.flagged = true;
    mu.notes.push_back("evaluation residual above tolerance");
  }
  return mu;
}

inline ZeroMeasure zero_measure(const SectionTuple& t, ZeroTolerances tol = {}) {
  if (t.size() == 1) return roots_sphere(t[0], false, tol);
  if (t.size() == 2) return common_zeros_product(t[0], t[1], tol);
  throw Error("zero_measure: expected one or two sections");
}

// Nonvanishing of the z₂-resultant, tested by the Hadamard ratio of the
// Sylvester determinant at a few fixed z₁ values.
inline bool resultant_nonzero(const Section& s1, const Section& s2, double threshold = 1e-10) {
  const auto& sp = *s1.space;
  const int p = sp.p;
  auto coeffs = [p](const Section& s) {
    const Eigen::VectorXcd m = s.monomial();
    Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(p + 1, p + 1);
    for (int k = 0; k < s.space->dim(); ++k) out(s.space->basis[static_cast<size_t>(k)][0], s.space->basis[static_cast<size_t>(k)][1]) = m(k);
    return out;
  };
  const Eigen::MatrixXcd m1 = coeffs(s1), m2 = coeffs(s2);
  for (Complex z1 : {Complex(0.37, 0.21), Complex(-1.3, 0.8), Complex(0.05, -2.4)}) {
    Eigen::MatrixXcd S = Eigen::MatrixXcd::Zero(2 * p, 2 * p);
    for (int j = 0; j <= p; ++j) {
      Complex f = 0.0, g = 0.0;
      for (int i = p; i >= 0; --i) f = f * z1 + m1(i, j), g = g * z1 + m2(i, j);
      for (int r = 0; r < p; ++r) S(r, r + p - j) = f, S(p + r, r + p - j) = g;
    }
    double hadamard = 0.0;
    for (int r = 0; r < 2 * p; ++r) hadamard += std::log(S.row(r).norm());
    const Complex det = S.partialPivLu().determinant();
    if (std::abs(det) > 0.0 && std::log(std::abs(det)) - hadamard > std::log(threshold)) return true;
  }
  return false;
}

// Fraction of sampled pairs (p fixed) whose resultant is nonzero.
inline double bertini_fraction(const SpacePtr& sp, int n_pairs, std::uint64_t seed, std::uint64_t experiment = 0) {
  if (n_pairs < 1) throw Error("bertini_fraction: n_pairs must be ≥ 1");
  int ok = 0;
  for (int i = 0; i < n_pairs; ++i) {
    const auto t = sample_tuple({sp, sp}, seed, experiment, static_cast<std::uint64_t>(i));
    ok += resultant_nonzero(t[0], t[1]) ? 1 : 0;
  }
  return double(ok) / n_pairs;
}

// ---- pairings ---------------------------------------------------------------

inline double zero_measure_pairing(const ZeroMeasure& mu, const TestFunction& chi) {
  double s = 0.0;
  for (const auto& [pt, m] : mu.points) s += m * chi(pt);
  return mu.scale * s;
}

// Chordal kernel K_r = log|z−r| − ½log(1+|z|²), K_∞ = −½log(1+|z|²);
// ∫ K_r dd^cχ = χ(r) − ∫χω.
inline double chordal_kernel(Complex z, const Coord& r) {
  return (r.is_inf() ? 0.0 : std::log(std::abs(z - r.value()))) - 0.5 * std::log1p(std::norm(z));
}

// Per-(weight, χ) quantities of the Poincaré–Lelong check.
struct PoincareLelongContext {
  Weight weight;
  TestFunction chi;
  double c1 = 0.0;          // ⟨c₁(φ), χ⟩
  double chi_mass = 0.0;    // ∫χω
  double weight_part = 0.0; // ∫(φ − φ_FS) dd^cχ
  double tol = 1e-8;
  std::vector<PlaneNode> rule;  // for the smooth per-section remainder
};

// ∫(φ − φ_FS) dd^cχ: the log-pole kernels are subtracted in closed form, the
// bounded remainder is integrated on a grid graded at cone and Poincaré points.
inline PoincareLelongContext poincare_lelong_context(const Weight& w, const TestFunction& chi, double tol = 1e-8) {
  if (w.space.dim() != 1) throw UnsupportedConfiguration("the Poincaré–Lelong check runs on the sphere");
  PoincareLelongContext ctx;
  ctx.weight = w;
  ctx.chi = chi;
  ctx.tol = tol;
  ctx.c1 = curvature_pairing(w, chi, 0.1 * tol).value;
  if (chi.constant_value) return ctx;
  ctx.chi_mass = integrate(w.space, [&](const ChartPoint& x) { return chi(x); }, {}, 0.1 * tol).value;
  ctx.rule = ddc_rule(chi, 0);
  const auto poles = log_poles(w);
  std::vector<Pole> sing;
  for (const auto& t : w.terms) {
    if (auto* pc = std::get_if<PoincareLogTerm>(&t)) sing.push_back({ChartPoint(pc->a), 0.0});
    if (auto* c = std::get_if<ConeTerm>(&t)) sing.push_back({ChartPoint(c->a), 0.0});
  }
  auto rem = [&](Complex z) {
    double v = eval_weight(w, z) - 0.5 * std::log1p(std::norm(z));
    for (const auto& pl : poles) v -= pl.eps * chordal_kernel(z, pl.center[0]);
    return std::isfinite(v) ? v : 0.0;
  };
  ctx.weight_part = pair_laplacian(w.space, rem, chi, sing, false, 0.1 * tol).value;
  for (const auto& pl : poles) ctx.weight_part += pl.eps * (chi(pl.center) - ctx.chi_mass);
  return ctx;
}

// |⟨[s=0], χ⟩ − p⟨c₁, χ⟩ − ∫ log|s|_{h^p} dd^cχ| on the sphere; zero in exact arithmetic.
//
// log|s|_{h^p} = log|s|_{FS} − p(φ − φ_FS). The FS part is evaluated from the
// section values with the chordal kernels of the computed zeros subtracted;
// the remainder is constant when the zeros are exact.
inline double poincare_lelong_residual(const Section& s, const PoincareLelongContext& ctx) {
  const auto& sp = *s.space;
  if (sp.weight.space.dim() != 1) throw UnsupportedConfiguration("the Poincaré–Lelong check runs on the sphere");
  const auto& chi = ctx.chi;
  const auto mu = roots_sphere(s);
  double zeros = 0.0;
  for (const auto& [pt, m] : mu.points) zeros += m * chi(pt);
  if (chi.constant_value) return std::abs(zeros - sp.p * ctx.c1);

  // Polynomial coefficients in (z − c), rescaled so the largest has modulus one.
  const Eigen::VectorXcd mt = s.normalized_monomial();
  const Complex c = sp.basis_center[0];
  std::vector<Complex> a(static_cast<size_t>(sp.p + 1), 0.0);
  std::vector<double> la(a.size(), -kInf);
  for (int j = 0; j < sp.dim(); ++j)
    la[static_cast<size_t>(sp.basis[static_cast<size_t>(j)][0])] = std::log(std::abs(mt(j))) - sp.log_scale(j);
  const double shift = *std::max_element(la.begin(), la.end());
  for (int j = 0; j < sp.dim(); ++j) {
    const auto e = static_cast<size_t>(sp.basis[static_cast<size_t>(j)][0]);
    a[e] = mt(j) / std::abs(mt(j)) * std::exp(la[e] - shift);
  }
  auto h = [&](Complex z) {
    Complex acc = 0.0;
    for (size_t j = a.size(); j-- > 0;) acc = acc * (z - c) + a[j];
    double v = std::log(std::abs(acc)) + shift - 0.5 * sp.p * std::log1p(std::norm(z));
    for (const auto& [r, m] : mu.points) v -= m * chordal_kernel(z, r[0]);
    return std::isfinite(v) ? v : 0.0;
  };
  std::vector<double> terms(ctx.rule.size());
  for (size_t i = 0; i < terms.size(); ++i) terms[i] = h(ctx.rule[i].z) * ctx.rule[i].weight;
  const double smooth = pairwise_sum(terms);
  double kernels = 0.0;
  for (const auto& [r, m] : mu.points) kernels += m * (chi(r) - ctx.chi_mass);
  const double log_norm_pairing = smooth + kernels - sp.p * ctx.weight_part;
  return std::abs(zeros - sp.p * ctx.c1 - log_norm_pairing);
}

inline double poincare_lelong_residual(const Section& s, const TestFunction& chi, double tol = 1e-8) {
  return poincare_lelong_residual(s, poincare_lelong_context(s.space->weight, chi, tol));
}

// ---- general position -------------------------------------------------------

// Components of analytic sets in the model spaces: points, and on the product
// the coordinate divisors {z₁ = a} (vertical) and {z₂ = b} (horizontal).
struct AnalyticComponent {
  enum Kind { Point, Vertical, Horizontal } kind = Point;
  ChartPoint point;  // for Point
  Coord at;          // for Vertical / Horizontal
};
using AnalyticSet = std::vector<AnalyticComponent>;

inline AnalyticSet analytic_set(const std::vector<SingularComponent>& sigma) {
  AnalyticSet out;
  for (const auto& c : sigma) {
    if (c.divisor_factor < 0) out.push_back({AnalyticComponent::Point, c.point, {}});
    else if (c.divisor_factor == 0) out.push_back({AnalyticComponent::Vertical, {}, c.point[0]});
    else out.push_back({AnalyticComponent::Horizontal, {}, c.point[1]});
  }
  return out;
}

inline AnalyticComponent vertical(Coord a) { return {AnalyticComponent::Vertical, {}, a}; }
inline AnalyticComponent horizontal(Coord b) { return {AnalyticComponent::Horizontal, {}, b}; }
inline AnalyticComponent point_component(ChartPoint x) { return {AnalyticComponent::Point, std::move(x), {}}; }

struct GeneralPositionReport {
  bool pass = true;
  std::string offending;
  // Dimension of Σ_i ∩ Σ_j for i < j in lexicographic order; −1 when empty.
  std::vector<int> pairwise_dims;
};

namespace detail {

inline bool same(const Coord& a, const Coord& b) { return chordal(a, b) < 1e-12; }

inline AnalyticSet intersect(const AnalyticSet& A, const AnalyticSet& B) {
  using K = AnalyticComponent;
  AnalyticSet out;
  auto on = [](const ChartPoint& x, const K& l) {
    if (l.kind == K::Point) return chordal(x, l.point) < 1e-12;
    return same(x[l.kind == K::Vertical ? 0 : 1], l.at);
  };
  for (const auto& a : A)
    for (const auto& b : B) {
      if (a.kind == K::Point) {
        if (on(a.point, b)) out.push_back(a);
      } else if (b.kind == K::Point) {
        if (on(b.point, a)) out.push_back(b);
      } else if (a.kind == b.kind) {
        if (same(a.at, b.at)) out.push_back(a);
      } else {
        const Coord z1 = a.kind == K::Vertical ? a.at : b.at, z2 = a.kind == K::Vertical ? b.at : a.at;
        out.push_back(point_component(ChartPoint(z1, z2)));
      }
    }
  return out;
}

inline int set_dim(const AnalyticSet& s) {
  int d = -1;
  for (const auto& c : s) d = std::max(d, c.kind == AnalyticComponent::Point ? 0 : 1);
  return d;
}

}  // namespace detail

// Every k-fold intersection must have codimension ≥ k (empty sets pass).
inline GeneralPositionReport general_position_check(ModelSpace space, const std::vector<AnalyticSet>& sets) {
  GeneralPositionReport rep;
  const int n = space.dim(), k = static_cast<int>(sets.size());
  if (k > 20) throw Error("general_position_check: too many sets");
  for (int i = 0; i < k; ++i)
    for (int j = i + 1; j < k; ++j)
      rep.pairwise_dims.push_back(detail::set_dim(detail::intersect(sets[static_cast<size_t>(i)], sets[static_cast<size_t>(j)])));
  for (unsigned mask = 1; mask < (1u << k); ++mask) {
    AnalyticSet inter;
    bool first = true;
    int count = 0;
    std::string name;
    for (int i = 0; i < k; ++i) {
      if (!(mask & (1u << i))) continue;
      inter = first ? sets[static_cast<size_t>(i)] : detail::intersect(inter, sets[static_cast<size_t>(i)]);
      first = false;
      ++count;
      name += (name.empty() ? "" : "∩") + std::string("Σ") + std::to_string(i + 1);
    }
    const int d = detail::set_dim(inter);
    if (d >= 0 && n - d < count) {
      rep.pass = false;
      if (rep.offending.empty()) rep.offending = name + " has dimension " + std::to_string(d);
    }
  }
  return rep;
}

// ---- export -------------------------------------------------------------------

inline void write_zero_csv(std::ostream& os, const ZeroMeasure& mu) {
  const int m = mu.space.dim();
  os << (m == 1 ? "re,im,multiplicity\n" : "re1,im1,re2,im2,multiplicity\n");
  os.precision(17);
  for (const auto& [pt, mult] : mu.points) {
    for (int k = 0; k < m; ++k) {
      if (pt[k].is_inf()) os << "inf,inf,";
      else os << pt[k].value().real() << ',' << pt[k].value().imag() << ',';
    }
    os << mult << '\n';
  }
}

}  // namespace bergman_lab
