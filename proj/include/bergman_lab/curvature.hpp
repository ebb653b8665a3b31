#pragma once

// Curvature measures c₁(L,h) = dd^cφ of the weights, positivity and Hölder checks.
// Lebesgue densities below are Δf/(2π) in the affine chart.

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "bergman_lab/quadrature.hpp"
#include "bergman_lab/rng.hpp"
#include "bergman_lab/weights.hpp"

namespace bergman_lab {

// Poincaré terms: the part of the mass inside this radius is reported as an atom
// (the density decays only like 1/(r² log² r) there).
inline constexpr double kPoincareCore = 1e-6;

namespace detail {

// log1p(q) − q, accurate for small q.
inline double log1p_minus(double q) {
  if (std::abs(q) > 1e-3) return std::log1p(q) - q;
  return q * q * (-0.5 + q * (1.0 / 3.0 + q * (-0.25 + q * 0.2)));
}

// f = −(ε/2) log g(u), g = log(1 + r0² e^{−2u}), u = log r.
inline double poincare_fuu(const PoincareLogTerm& t, double r) {
  const double q = t.r0 * t.r0 / (r * r);
  const double g = std::log1p(q);
  // g_uu g − g_u² = 4q/(1+q)² (g − q)
  const double num = 4.0 * q / ((1.0 + q) * (1.0 + q)) * log1p_minus(q);
  return -0.5 * t.eps * num / (g * g);
}

// Mass of dd^c f inside the disc of radius δ around the center: f_u(log δ).
inline double poincare_inner_mass(const PoincareLogTerm& t, double delta) {
  const double q = t.r0 * t.r0 / (delta * delta);
  return t.eps * q / ((1.0 + q) * std::log1p(q));
}

inline double fd_laplacian(const std::function<double(Complex)>& f, Complex z, double h) {
  auto lap = [&](double s) {
    return (f(z + s) + f(z - s) + f(z + Complex(0, s)) + f(z - Complex(0, s)) - 4.0 * f(z)) / (s * s);
  };
  return (4.0 * lap(0.5 * h) - lap(h)) / 3.0;
}

}  // namespace detail

// Lebesgue density of dd^c(term) at a finite point of the sphere, atoms excluded.
inline double term_curvature_density(const WeightTerm& term, Complex z) {
  return std::visit(
      [&](const auto& t) -> double {
        using T = std::decay_t<decltype(t)>;
        if constexpr (std::is_same_v<T, FSReference>) {
          return t.scale * fs_density(z);
        } else if constexpr (std::is_same_v<T, CutoffLogPole>) {
          const double r2 = std::norm(z - t.a);
          if (t.profile == CutoffProfile::Regularized) {
            const double d = r2 + t.r0 * t.r0;
            return -t.eps * t.r0 * t.r0 / (kPi * d * d);
          }
          const double r = std::sqrt(r2);
          if (r <= t.r0 || r >= 2.0 * t.r0) return 0.0;
          const double s = (r - t.r0) / t.r0;
          const double s1 = 30.0 * s * s * (s * s - 2.0 * s + 1.0);
          const double s2 = 60.0 * s * (2.0 * s * s - 3.0 * s + 1.0);
          const double chi1 = -s1 / t.r0, chi2 = -s2 / (t.r0 * t.r0);
          const double L = std::log(r);
          return t.eps * (chi2 * L + chi1 * (2.0 + L) / r) / (2.0 * kPi);
        } else if constexpr (std::is_same_v<T, ConeTerm>) {
          const double r = std::abs(z - t.a);
          if (r == 0.0) return kInf;
          const double h = std::min(0.1 * r, 1e-2 * (1.0 + std::norm(z)));
          const auto f = [&](Complex x) { return t.amp * std::pow(chordal(Coord(x), Coord(t.a)), 2.0 * t.beta); };
          return detail::fd_laplacian(f, z, h) / (2.0 * kPi);
        } else if constexpr (std::is_same_v<T, JointLogPole>) {
          throw UnsupportedConfiguration("joint poles have no sphere curvature density");
        } else {
          const double r = std::abs(z - t.a);
          if (r == 0.0) return kInf;
          return detail::poincare_fuu(t, r) / (r * r * 2.0 * kPi);
        }
      },
      term);
}

// Lebesgue density of c₁ on the sphere (atoms excluded).
inline double curvature_density_lebesgue(const Weight& w, Complex z) {
  double s = 0.0;
  for (const auto& t : w.terms) s += term_curvature_density(t, z);
  return s;
}

// Complex Hessian (∂²φ/∂z_j∂z̄_k) on the product at a point with real
// nonnegative coordinates (toric weights depend only on |z_k|).
struct Hessian2 {
  double h11 = 0.0, h22 = 0.0;
  Complex h12{0.0, 0.0};
  double det = 0.0;  // computed without the cancellation of the expanded form
};

// With a joint pole f(s), s = |w₁|² + |w₂|², and u = w/|w|:
// H = D + f'(I − uu*) + λ uu* with λ = f' + s f'' = −(ε/2) r0²/(s + r0²)², so
// det H = d₁d₂ + d₁(f'|u₁|² + λ|u₂|²) + d₂(f'|u₂|² + λ|u₁|²) + f'λ.
inline Hessian2 product_hessian(const Weight& w, Complex z1, Complex z2) {
  double d1 = 0.0, d2 = 0.0;
  const JointLogPole* pole = nullptr;
  for (const auto& term : w.terms) {
    if (auto* f = std::get_if<FSReference>(&term)) {
      const double q1 = 1.0 + std::norm(z1), q2 = 1.0 + std::norm(z2);
      if (f->factor < 0 || f->factor == 0) d1 += f->scale * 0.5 / (q1 * q1);
      if (f->factor < 0 || f->factor == 1) d2 += f->scale * 0.5 / (q2 * q2);
    } else if (auto* j = std::get_if<JointLogPole>(&term)) {
      if (pole) throw UnsupportedConfiguration("at most one joint pole per weight");
      pole = j;
    } else {
      throw UnsupportedConfiguration("product curvature supports FS and joint-pole terms only");
    }
  }
  Hessian2 H;
  if (!pole) {
    H.h11 = d1, H.h22 = d2, H.det = d1 * d2;
    return H;
  }
  const Complex w1 = z1 - pole->a, w2 = z2 - pole->b;
  const double s = std::norm(w1) + std::norm(w2);
  const double c = pole->r0 * pole->r0;
  const double fp = 0.5 * pole->eps * c / (s * (s + c));
  const double lam = -0.5 * pole->eps * c / ((s + c) * (s + c));
  const double a = std::norm(w1) / s, b = std::norm(w2) / s;
  H.h11 = d1 + fp * b + lam * a;
  H.h22 = d2 + fp * a + lam * b;
  H.h12 = (lam - fp) * std::conj(w1) * w2 / s;
  H.det = d1 * d2 + d1 * (fp * a + lam * b) + d2 * (fp * b + lam * a) + fp * lam;
  return H;
}

// Lebesgue density of c₁∧c₁ on C² (atoms excluded): (8/π²) det H.
inline double product_mixed_density_lebesgue(const Weight& w, Complex z1, Complex z2) {
  return 8.0 / (kPi * kPi) * product_hessian(w, z1, z2).det;
}

inline bool is_toric(const Weight& w) {
  for (const auto& t : w.terms) {
    if (auto* j = std::get_if<JointLogPole>(&t)) {
      if (j->a != 0.0 || j->b != 0.0) return false;
    } else if (!std::holds_alternative<FSReference>(t)) {
      return false;
    }
  }
  return true;
}

struct CurvatureMeasure {
  ModelSpace space;
  std::vector<std::pair<ChartPoint, double>> atoms;
  // Density with respect to ω^n (c₁ on the sphere, c₁∧c₁ on the product).
  std::function<double(const ChartPoint&)> density;
  std::vector<std::pair<ChartPoint, double>> samples;
  double total_mass = 0.0;
  double mass_error = 0.0;
};

// Polar grid adapted to a sphere weight: centered at its first singular or cone
// point with breakpoints at the cutoff radii.
inline GridSpec weight_grid(const Weight& w) {
  GridSpec g;
  bool centered = false;
  std::vector<double> bps;
  for (const auto& t : w.terms) {
    std::visit(
        [&](const auto& x) {
          using T = std::decay_t<decltype(x)>;
          if constexpr (std::is_same_v<T, CutoffLogPole>) {
            if (!centered) g.center = x.a, centered = true;
            if (x.profile == CutoffProfile::Smoothstep) bps.insert(bps.end(), {x.r0, 2.0 * x.r0});
            else bps.push_back(x.r0);
          } else if constexpr (std::is_same_v<T, ConeTerm>) {
            if (!centered) g.center = x.a, centered = true;
            g.inner_exponent = std::min(g.inner_exponent, 2.0 * x.beta - 2.0);
          } else if constexpr (std::is_same_v<T, PoincareLogTerm>) {
            if (!centered) g.center = x.a, centered = true;
            bps.insert(bps.end(), {x.r0, kPoincareCore});
          }
        },
        t);
  }
  for (double b : bps)
    if (b > kPoincareCore) g.graded_radius = std::min(g.graded_radius, 0.5 * b);
  g.breakpoints = bps;
  return g;
}

inline CurvatureMeasure curvature(const Weight& w, std::optional<GridSpec> grid = std::nullopt, double tol = 1e-7) {
  CurvatureMeasure cm;
  cm.space = w.space;
  if (w.space.dim() == 1) {
    GridSpec g = grid ? *grid : weight_grid(w);
    double core = 0.0;
    Complex core_center = 0.0;
    for (const auto& t : w.terms) {
      if (auto* c = std::get_if<CutoffLogPole>(&t)) cm.atoms.push_back({ChartPoint(c->a), c->eps});
      if (auto* p = std::get_if<PoincareLogTerm>(&t)) {
        core = kPoincareCore;
        core_center = p->a;
        cm.atoms.push_back({ChartPoint(p->a), detail::poincare_inner_mass(*p, core)});
      }
    }
    auto leb = [w, core, core_center](Complex z) {
      if (core > 0.0 && std::abs(z - core_center) < core) return 0.0;
      return curvature_density_lebesgue(w, z);
    };
    cm.density = [leb](const ChartPoint& x) {
      if (x[0].is_inf()) return leb(Complex(1e8, 0.0)) / fs_density(Complex(1e8, 0.0));
      const Complex z = x[0].value();
      return leb(z) / fs_density(z);
    };
    const auto res = integrate_plane_adaptive(g, leb, tol);
    double atoms = 0.0;
    for (const auto& a : cm.atoms) atoms += a.second;
    cm.total_mass = atoms + res.value;
    cm.mass_error = res.error_estimate;
    GridSpec coarse = g;
    coarse.uniform_panels = 8;
    coarse.nodes_per_panel = 4;
    coarse.grading_depth = 4;
    coarse.angular = 8;
    for (const auto& n : plane_nodes(coarse)) cm.samples.push_back({ChartPoint(n.z), cm.density(ChartPoint(n.z))});
    return cm;
  }

  if (!is_toric(w)) throw UnsupportedConfiguration("product curvature requires a toric weight (poles at the origin)");
  for (const auto& t : w.terms)
    if (auto* j = std::get_if<JointLogPole>(&t)) cm.atoms.push_back({ChartPoint(Coord(0.0), Coord(0.0)), j->eps * j->eps});
  cm.density = [w](const ChartPoint& x) {
    const Complex z1 = x[0].value(), z2 = x[1].value();
    return product_mixed_density_lebesgue(w, z1, z2) / (2.0 * fs_density(z1) * fs_density(z2));
  };
  ToricGridSpec tg;
  tg.radial.inner_exponent = -2.0;
  tg.radial.uniform_panels = 32;
  tg.radial.nodes_per_panel = 12;
  auto f = [&w](double r1, double r2) { return product_mixed_density_lebesgue(w, r1, r2); };
  const double a = integrate_toric(tg, f);
  tg.radial.level = 1;
  const double b = integrate_toric(tg, f);
  double atoms = 0.0;
  for (const auto& at : cm.atoms) atoms += at.second;
  cm.total_mass = atoms + b;
  cm.mass_error = std::abs(a - b);
  for (double r1 : {0.1, 0.5, 1.0, 2.0})
    for (double r2 : {0.1, 0.5, 1.0, 2.0})
      cm.samples.push_back({ChartPoint(Coord(r1), Coord(r2)), cm.density(ChartPoint(Coord(r1), Coord(r2)))});
  return cm;
}

struct PositivityReport {
  double min_ratio = kInf;
  ChartPoint argmin;
  bool pass = false;
};

// Minimum over sample points of c₁ / ω (sphere) or of the smallest eigenvalue
// of c₁ relative to ω (product), away from the singular set.
inline PositivityReport verify_positivity(const Weight& w, double eps0, std::optional<GridSpec> grid = std::nullopt) {
  if (!(eps0 > 0.0)) throw Error("verify_positivity: eps0 must be positive");
  PositivityReport rep;
  auto consider = [&](double ratio, const ChartPoint& at) {
    if (ratio < rep.min_ratio) rep.min_ratio = ratio, rep.argmin = at;
  };
  if (w.space.dim() == 1) {
    std::vector<GridSpec> grids;
    GridSpec base = grid ? *grid : weight_grid(w);
    base.uniform_panels = 24;
    base.nodes_per_panel = 6;
    base.grading_depth = 16;
    base.angular = 24;
    grids.push_back(base);
    GridSpec origin = base;
    origin.center = 0.0;
    origin.breakpoints.clear();
    grids.push_back(origin);
    for (const auto& g : grids)
      for (const auto& n : plane_nodes(g)) {
        if (dist_to_sing(w, ChartPoint(n.z)) < 1e-9) continue;
        consider(curvature_density_lebesgue(w, n.z) / fs_density(n.z), ChartPoint(n.z));
      }
    // The point at ∞ through a large finite stand-in.
    const Complex far(1e6, 0.0);
    consider(curvature_density_lebesgue(w, far) / fs_density(far), ChartPoint(Coord::infinity()));
  } else {
    GridSpec g;
    g.uniform_panels = 16;
    g.nodes_per_panel = 6;
    g.grading_depth = 12;
    const auto radial = radial_nodes(g);
    for (const auto& a : radial)
      for (const auto& b : radial) {
        const Complex z1 = a.rho, z2 = b.rho;
        if (dist_to_sing(w, ChartPoint(Coord(z1), Coord(z2))) < 1e-9) continue;
        const Hessian2 H = product_hessian(w, z1, z2);
        const double q1 = 1.0 + std::norm(z1), q2 = 1.0 + std::norm(z2);
        const double d1 = 0.5 / (q1 * q1), d2 = 0.5 / (q2 * q2);
        const double a11 = H.h11 / d1, a22 = H.h22 / d2, a12 = std::abs(H.h12) / std::sqrt(d1 * d2);
        const double big = 0.5 * (a11 + a22) + std::sqrt(0.25 * (a11 - a22) * (a11 - a22) + a12 * a12);
        const double lam = H.det / (d1 * d2) / big;
        consider(lam, ChartPoint(Coord(z1), Coord(z2)));
      }
  }
  rep.pass = rep.min_ratio >= eps0;
  return rep;
}

struct HolderReport {
  double empirical_constant = 0.0;
  bool pass = false;
  ChartPoint worst_z, worst_w;
};

namespace detail {

inline Complex fs_uniform_point(RngStream& rng) {
  const double u = rng.uniform();
  return std::polar(std::sqrt(u / (1.0 - u)), 2.0 * kPi * rng.uniform());
}

// φ(z) − φ(w) evaluated in a chart containing both points.
inline double weight_difference(const Weight& wt, const std::vector<Complex>& z, const std::vector<Complex>& w) {
  std::vector<bool> recip(z.size());
  std::vector<Complex> cz(z.size()), cw(z.size());
  for (size_t k = 0; k < z.size(); ++k) {
    recip[k] = std::abs(z[k]) * std::abs(w[k]) > 1.0;
    cz[k] = recip[k] ? 1.0 / z[k] : z[k];
    cw[k] = recip[k] ? 1.0 / w[k] : w[k];
  }
  return eval_weight_chart(wt, cz, recip) - eval_weight_chart(wt, cw, recip);
}

}  // namespace detail

// Samples pairs off the singular set (half of them close to it) and reports
// sup |φ(z)−φ(w)| · min(dist(z,Σ), dist(w,Σ))^ϱ / dist(z,w)^ν.
inline HolderReport verify_hoelder(const Weight& w, const HolderParams& params, int n_pairs, std::uint64_t seed) {
  if (n_pairs < 1) throw Error("verify_hoelder: n_pairs must be positive");
  const int n = w.space.dim();
  std::vector<double> ratio(static_cast<size_t>(n_pairs), 0.0);
  std::vector<std::pair<ChartPoint, ChartPoint>> pts(static_cast<size_t>(n_pairs));
  parallel_for(static_cast<size_t>(n_pairs), [&](size_t i) {
    RngStream rng(seed, 0x401de7, 0, i);
    std::vector<Complex> z(static_cast<size_t>(n)), v(static_cast<size_t>(n));
    const bool near = !w.singular_set.empty() && (i % 2 == 1);
    for (int k = 0; k < n; ++k) z[static_cast<size_t>(k)] = detail::fs_uniform_point(rng);
    if (near) {
      const auto& comp = w.singular_set[rng.next_u64() % w.singular_set.size()];
      const double r = std::pow(10.0, -8.0 * rng.uniform());
      for (int k = 0; k < n; ++k) {
        if (comp.divisor_factor >= 0 && comp.divisor_factor != k) continue;
        const Coord c = comp.point[k];
        const Complex base = c.is_inf() ? Complex(0.0) : c.value();
        const Complex off = std::polar(r / std::sqrt(n), 2.0 * kPi * rng.uniform());
        z[static_cast<size_t>(k)] = c.is_inf() ? 1.0 / off : base + off;
      }
    }
    const double scale = near ? 1.0 : std::pow(10.0, -6.0 * rng.uniform());
    for (int k = 0; k < n; ++k) {
      const Complex zk = z[static_cast<size_t>(k)];
      const double loc = near ? std::pow(10.0, -3.0 * rng.uniform()) : scale * (1.0 + std::norm(zk));
      Complex step = std::polar(loc, 2.0 * kPi * rng.uniform());
      if (near) {
        double d = kInf;
        for (const auto& c : w.singular_set) {
          const Coord ck = c.point[k];
          if (!ck.is_inf()) d = std::min(d, std::abs(zk - ck.value()));
        }
        if (std::isfinite(d)) step *= d;
      }
      v[static_cast<size_t>(k)] = zk + step;
    }
    ChartPoint pz, pv;
    for (int k = 0; k < n; ++k) {
      pz.coords.emplace_back(z[static_cast<size_t>(k)]);
      pv.coords.emplace_back(v[static_cast<size_t>(k)]);
    }
    const double dzw = chordal(pz, pv);
    const double ds = std::min(dist_to_sing(w, pz), dist_to_sing(w, pv));
    if (dzw == 0.0 || ds <= 0.0) return;
    const double diff = std::abs(detail::weight_difference(w, z, v));
    const double sing = std::isfinite(ds) ? std::pow(ds, params.rho) : 1.0;
    ratio[i] = diff * sing / std::pow(dzw, params.nu);
    pts[i] = {pz, pv};
  });
  HolderReport rep;
  for (size_t i = 0; i < ratio.size(); ++i)
    if (ratio[i] > rep.empirical_constant) {
      rep.empirical_constant = ratio[i];
      rep.worst_z = pts[i].first;
      rep.worst_w = pts[i].second;
    }
  rep.pass = rep.empirical_constant <= params.c;
  return rep;
}

// ⟨c₁(φ), χ⟩ on the sphere, ⟨c₁(φ)², χ⟩ on the product (toric χ).
inline IntegralResult curvature_pairing(const Weight& w, const TestFunction& chi, double tol = 1e-8) {
  // Degree conservation makes the mass exact.
  if (chi.constant_value) return {*chi.constant_value * w.space.volume(), 0.0, 0};
  const auto cm = curvature(w);
  double atoms = 0.0;
  for (const auto& [pt, mass] : cm.atoms) atoms += mass * chi(pt);
  if (w.space.dim() == 1) {
    auto r = integrate_plane_adaptive(weight_grid(w), [&](Complex z) {
      const ChartPoint x(z);
      return chi(x) * cm.density(x) * fs_density(z);
    }, tol);
    r.value += atoms;
    return r;
  }
  ToricGridSpec tg;
  tg.radial.inner_exponent = -2.0;
  tg.radial.uniform_panels = 32;
  tg.radial.nodes_per_panel = 12;
  auto f = [&](double r1, double r2) {
    return chi(ChartPoint(Coord(r1), Coord(r2))) * product_mixed_density_lebesgue(w, r1, r2);
  };
  const double a = integrate_toric(tg, f);
  tg.radial.level = 1;
  const double b = integrate_toric(tg, f);
  return {atoms + b, std::abs(a - b), 0};
}

}  // namespace bergman_lab
