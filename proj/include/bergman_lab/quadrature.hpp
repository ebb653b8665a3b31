#pragma once

// Polar product quadrature on the model spaces.
//
// Each P¹ factor is covered by one polar chart z = c + ρ e^{iθ}. The radial
// variable is compactified with ρ = t/(1−t) so the neighbourhood of ∞ is part
// of the parameter domain. Radial panels are Gauss–Legendre; the innermost
// panel uses a power substitution ρ = ρ_min x^k chosen from the declared local
// exponent, and the panels above it are graded geometrically with ratio 1/2.
// The angle uses the trapezoid rule.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <mutex>
#include <vector>

#include "bergman_lab/core.hpp"
#include "bergman_lab/parallel.hpp"
#include "bergman_lab/test_function.hpp"

namespace bergman_lab {

struct GridSpec {
  Complex center{0.0, 0.0};
  int uniform_panels = 48;
  int nodes_per_panel = 16;
  int grading_depth = 24;
  double graded_radius = 0.25;
  // The integrand behaves like ρ^inner_exponent (2D area sense) at the center.
  double inner_exponent = 0.0;
  std::vector<double> breakpoints;
  int angular = 128;
  double max_radius = kInf;
  int level = 0;
  bool keep_subulp = false;

  GridSpec refined(int extra = 1) const {
    GridSpec g = *this;
    g.level += extra;
    return g;
  }
};

struct IntegralResult {
  double value = 0.0;
  double error_estimate = 0.0;
  long node_count = 0;
};

struct RadialNode {
  double rho;
  double weight;  // includes dρ Jacobian and the polar factor ρ
};

struct PlaneNode {
  Complex z;
  double weight;  // Lebesgue area weight
  Complex offset;  // z − center, exact even where z itself rounds to the center
};

struct Pole {
  ChartPoint point;
  double exponent;  // |f| ~ dist^exponent near the point
};

// Gauss–Legendre nodes and weights on [-1, 1].
inline const std::pair<std::vector<double>, std::vector<double>>& gauss_legendre(int n) {
  static std::mutex m;
  static std::map<int, std::pair<std::vector<double>, std::vector<double>>> cache;
  std::lock_guard lock(m);
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;
  std::vector<double> x(static_cast<size_t>(n)), w(static_cast<size_t>(n));
  const int half = (n + 1) / 2;
  for (int i = 1; i <= half; ++i) {
    double z = std::cos(kPi * (i - 0.25) / (n + 0.5));
    double pp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p1 = 1.0, p2 = 0.0;
      for (int j = 1; j <= n; ++j) {
        const double p3 = p2;
        p2 = p1;
        p1 = ((2.0 * j - 1.0) * z * p2 - (j - 1.0) * p3) / j;
      }
      pp = n * (z * p1 - p2) / (z * z - 1.0);
      const double z1 = z;
      z = z1 - p1 / pp;
      if (std::abs(z - z1) < 1e-15) break;
    }
    x[static_cast<size_t>(i - 1)] = -z;
    x[static_cast<size_t>(n - i)] = z;
    w[static_cast<size_t>(i - 1)] = w[static_cast<size_t>(n - i)] = 2.0 / ((1.0 - z * z) * pp * pp);
  }
  return cache.emplace(n, std::make_pair(std::move(x), std::move(w))).first->second;
}

namespace detail {

// Gauss–Legendre on [a, b] in the variable t, pushed through ρ(t).
template <class Map>
void push_panel(std::vector<RadialNode>& out, double a, double b, int q, Map&& map) {
  const auto& [x, w] = gauss_legendre(q);
  const double h = 0.5 * (b - a), m = 0.5 * (b + a);
  for (size_t i = 0; i < x.size(); ++i) {
    const auto [rho, jac] = map(m + h * x[i]);
    out.push_back({rho, w[i] * h * jac * rho});
  }
}

}  // namespace detail

inline std::vector<RadialNode> radial_nodes(const GridSpec& g) {
  std::vector<RadialNode> out;
  const int sub = 1 << g.level;
  const int q = g.nodes_per_panel;
  const double R = g.max_radius;
  const double graded_top = std::min(g.graded_radius, R);
  const double rho_min = graded_top * std::ldexp(1.0, -g.grading_depth);

  // Innermost panel with power substitution.
  const double e2 = g.inner_exponent + 2.0;
  if (!(e2 > 0.0)) throw QuadratureError("non-integrable exponent at grid center", kInf);
  const int k = std::max(1, static_cast<int>(std::ceil(6.0 / e2)));
  detail::push_panel(out, 0.0, 1.0, q, [&](double x) {
    return std::pair{rho_min * std::pow(x, k), rho_min * k * std::pow(x, k - 1)};
  });

  // Geometric panels [ρ_min 2^i, ρ_min 2^{i+1}].
  std::vector<double> cuts;
  for (int i = 0; i <= g.grading_depth; ++i) cuts.push_back(rho_min * std::ldexp(1.0, i));
  for (double b : g.breakpoints)
    if (b > rho_min && b < graded_top) cuts.push_back(b);
  std::sort(cuts.begin(), cuts.end());

  auto linear = [](double x) { return std::pair{x, 1.0}; };
  for (size_t i = 0; i + 1 < cuts.size() && cuts[i + 1] <= graded_top * (1 + 1e-14); ++i) {
    const double a = cuts[i], b = cuts[i + 1];
    for (int s = 0; s < sub; ++s)
      detail::push_panel(out, a + (b - a) * s / sub, a + (b - a) * (s + 1) / sub, q, linear);
  }

  // Outer region [graded_top, R], uniform in ρ (finite R) or in t = ρ/(1+ρ).
  std::vector<double> outer{graded_top};
  for (double b : g.breakpoints)
    if (b > graded_top && b < R) outer.push_back(b);
  const bool compact = std::isfinite(R);
  const int n_uniform = g.uniform_panels * sub;
  if (compact) {
    for (int i = 1; i <= n_uniform; ++i) outer.push_back(graded_top + (R - graded_top) * i / n_uniform);
  } else {
    const double t0 = graded_top / (1.0 + graded_top);
    for (int i = 1; i < n_uniform; ++i) {
      const double t = t0 + (1.0 - t0) * i / n_uniform;
      outer.push_back(t / (1.0 - t));
    }
  }
  std::sort(outer.begin(), outer.end());
  outer.erase(std::unique(outer.begin(), outer.end()), outer.end());

  auto compactified = [](double t) { return std::pair{t / (1.0 - t), 1.0 / ((1.0 - t) * (1.0 - t))}; };
  for (size_t i = 0; i + 1 < outer.size(); ++i) {
    if (compact) {
      detail::push_panel(out, outer[i], outer[i + 1], q, linear);
    } else {
      detail::push_panel(out, outer[i] / (1 + outer[i]), outer[i + 1] / (1 + outer[i + 1]), q, compactified);
    }
  }
  if (!compact) {
    const double last = outer.back();
    detail::push_panel(out, last / (1 + last), 1.0, q, compactified);
  }
  return out;
}

inline int angular_count(const GridSpec& g) { return g.angular * (1 << g.level); }

inline std::vector<PlaneNode> plane_nodes(const GridSpec& g) {
  const auto radial = radial_nodes(g);
  const int M = angular_count(g);
  std::vector<PlaneNode> out;
  out.reserve(radial.size() * static_cast<size_t>(M));
  const double dth = 2.0 * kPi / M;
  // Nodes closer to the center than its rounding unit cannot be told apart from
  // it by an integrand taking z; they are dropped (their share of any
  // integrable mass is below double resolution). Integrands needing them use
  // PlaneNode::offset.
  const double floor = 4.0 * std::numeric_limits<double>::epsilon() * std::abs(g.center);
  for (const auto& r : radial) {
    if (r.rho <= floor && !g.keep_subulp) continue;
    for (int m = 0; m < M; ++m) {
      const Complex off = std::polar(r.rho, dth * m);
      out.push_back({g.center + off, r.weight * dth, off});
    }
  }
  return out;
}

// Density of the normalized Fubini–Study form w.r.t. Lebesgue area.
inline double fs_density(Complex z) {
  const double q = 1.0 + std::norm(z);
  return 1.0 / (kPi * q * q);
}

// Σ f(z_n) w_n over the nodes with a fixed chunked reduction order.
template <class F>
double sum_over_nodes(const std::vector<PlaneNode>& nodes, F&& f) {
  const auto chunks = fixed_chunks(nodes.size(), 4096);
  std::vector<double> partial(chunks.size(), 0.0);
  parallel_for(chunks.size(), [&](size_t c) {
    std::vector<double> local;
    local.reserve(chunks[c].end - chunks[c].begin);
    for (size_t i = chunks[c].begin; i < chunks[c].end; ++i) {
      const double v = f(nodes[i].z);
      local.push_back(v == 0.0 ? 0.0 : v * nodes[i].weight);
    }
    partial[c] = pairwise_sum(local);
  });
  return pairwise_sum(partial);
}

// Lebesgue-area integral over the chart plane (or the disc of GridSpec::max_radius).
template <class F>
double integrate_plane(const GridSpec& g, F&& f) {
  return sum_over_nodes(plane_nodes(g), f);
}

// Two-level comparison; refines until the levels agree within tol.
template <class F>
IntegralResult integrate_plane_adaptive(GridSpec g, F&& f, double tol, int max_level = 3) {
  double prev = integrate_plane(g, f);
  long nodes = static_cast<long>(plane_nodes(g).size());
  for (int l = 1; l <= max_level; ++l) {
    const GridSpec gr = g.refined(l);
    const auto pts = plane_nodes(gr);
    const double cur = sum_over_nodes(pts, f);
    nodes += static_cast<long>(pts.size());
    const double err = std::abs(cur - prev);
    if (err <= tol) return {cur, err, nodes};
    prev = cur;
    if (l == max_level)
      throw QuadratureError("tolerance not met after maximal refinement", err);
  }
  return {prev, 0.0, nodes};
}

// ∫_X f ω^n. On the sphere f takes the affine coordinate; on the product f
// takes both coordinates (tensor grid, modest resolution).
inline IntegralResult integrate(ModelSpace space, const std::function<double(const ChartPoint&)>& f,
                                const std::vector<Pole>& poles, double tol) {
  std::vector<const Pole*> finite;
  for (const auto& pl : poles) {
    if (!(pl.exponent > -2.0 * space.dim()))
      throw QuadratureError("non-integrable declared pole exponent", kInf);
    if (!pl.point.any_inf()) finite.push_back(&pl);
  }
  if (space.kind == SpaceKind::Sphere) {
    GridSpec g;
    if (!finite.empty()) {
      for (const auto* pl : finite)
        if (!((*pl).point[0] == finite.front()->point[0]))
          throw UnsupportedConfiguration("integrate: poles at more than one location");
      g.center = finite.front()->point[0].value();
      g.inner_exponent = std::min(0.0, finite.front()->exponent);
    }
    return integrate_plane_adaptive(
        g, [&](Complex z) { return f(ChartPoint(z)) * fs_density(z); }, tol);
  }
  // Product: ω² = 2 ω₁∧ω₂; per-factor polar grids.
  GridSpec g1, g2;
  g1.uniform_panels = g2.uniform_panels = 8;
  g1.nodes_per_panel = g2.nodes_per_panel = 8;
  g1.grading_depth = g2.grading_depth = 6;
  g1.angular = g2.angular = 16;
  if (!finite.empty()) {
    g1.center = finite.front()->point[0].value();
    g2.center = finite.front()->point[1].value();
    g1.inner_exponent = g2.inner_exponent = std::min(0.0, finite.front()->exponent / 2.0);
  }
  auto run = [&](int level) {
    const auto n1 = plane_nodes(g1.refined(level));
    const auto n2 = plane_nodes(g2.refined(level));
    std::vector<double> partial(n1.size());
    parallel_for(n1.size(), [&](size_t i) {
      std::vector<double> row(n2.size());
      const double w1 = n1[i].weight * fs_density(n1[i].z);
      for (size_t j = 0; j < n2.size(); ++j)
        row[j] = f(ChartPoint(Coord(n1[i].z), Coord(n2[j].z))) * n2[j].weight * fs_density(n2[j].z);
      partial[i] = w1 * pairwise_sum(row);
    });
    return std::pair{2.0 * pairwise_sum(partial), static_cast<long>(n1.size() * n2.size())};
  };
  const auto [a, na] = run(0);
  const auto [b, nb] = run(1);
  const double err = std::abs(a - b);
  if (err > tol) throw QuadratureError("product integral did not reach tolerance", err);
  return {b, err, na + nb};
}

// Toric integrals on the product: f depends only on (|z₁|, |z₂|). A smooth
// partition of unity η(ρ) + (1 − η(ρ)), ρ² = r₁² + r₂², splits the quadrant:
// near the origin r₁ = ρ cos α, r₂ = ρ sin α so a point singularity there is a
// radial endpoint; away from it a tensor grid of compactified radial rules.
// Node weights are Lebesgue volumes in C² with the partition folded in.
struct ToricGridSpec {
  GridSpec radial;
  int angle_panels = 6;
  int angle_nodes = 16;
  double join_radius = 1.0;
  int tensor_panels = 20;
  int tensor_nodes = 12;
};

struct ToricNode {
  double r1, r2, weight;
};

namespace detail {
// C^∞ step: 1 for x ≤ 0, 0 for x ≥ 1.
inline double smooth_cutoff(double x) {
  if (x <= 0.0) return 1.0;
  if (x >= 1.0) return 0.0;
  const double a = std::exp(-1.0 / (1.0 - x)), b = std::exp(-1.0 / x);
  return a / (a + b);
}
}  // namespace detail

inline std::vector<ToricNode> toric_nodes(const ToricGridSpec& spec) {
  const double R = spec.join_radius;
  auto eta = [R](double rho) { return detail::smooth_cutoff((rho - 0.5 * R) / (0.5 * R)); };
  std::vector<ToricNode> out;

  GridSpec g = spec.radial;
  // radial_nodes carries a factor ρ; the C² volume element needs ρ³.
  g.inner_exponent = spec.radial.inner_exponent + 2.0;
  g.max_radius = R;
  g.graded_radius = std::min(g.graded_radius, 0.25 * R);
  g.breakpoints.push_back(0.5 * R);
  g.uniform_panels = 2;
  const auto radial = radial_nodes(g);
  const auto& [x, w] = gauss_legendre(spec.angle_nodes);
  const int panels = spec.angle_panels * (1 << spec.radial.level);
  for (const auto& r : radial) {
    const double rho = r.rho, e = eta(rho);
    if (e == 0.0) continue;
    for (int pnl = 0; pnl < panels; ++pnl) {
      const double a = 0.5 * kPi * pnl / panels, b = 0.5 * kPi * (pnl + 1) / panels;
      const double h = 0.5 * (b - a), m = 0.5 * (b + a);
      for (size_t i = 0; i < x.size(); ++i) {
        const double al = m + h * x[i];
        const double c = std::cos(al), s = std::sin(al);
        // dV = (2π)² r₁ r₂ dr₁ dr₂ = (2π)² ρ³ cos α sin α dρ dα.
        out.push_back({rho * c, rho * s, e * 4.0 * kPi * kPi * r.weight * rho * rho * c * s * w[i] * h});
      }
    }
  }

  GridSpec t = spec.radial;
  t.inner_exponent = 0.0;
  t.uniform_panels = spec.tensor_panels;
  t.nodes_per_panel = spec.tensor_nodes;
  t.grading_depth = 2;
  t.graded_radius = 0.25 * R;
  t.breakpoints = {0.5 * R, R};
  const auto axis = radial_nodes(t);
  for (const auto& a : axis)
    for (const auto& b : axis) {
      const double e = 1.0 - eta(std::hypot(a.rho, b.rho));
      if (e == 0.0) continue;
      out.push_back({a.rho, b.rho, e * 4.0 * kPi * kPi * a.weight * b.weight});
    }
  return out;
}

template <class F>
double integrate_toric(const ToricGridSpec& spec, F&& f) {
  const auto nodes = toric_nodes(spec);
  const auto chunks = fixed_chunks(nodes.size(), 4096);
  std::vector<double> partial(chunks.size());
  parallel_for(chunks.size(), [&](size_t c) {
    std::vector<double> local;
    for (size_t i = chunks[c].begin; i < chunks[c].end; ++i) {
      const double v = f(nodes[i].r1, nodes[i].r2);
      local.push_back(v == 0.0 ? 0.0 : v * nodes[i].weight);
    }
    partial[c] = pairwise_sum(local);
  });
  return pairwise_sum(partial);
}

// ∫ g · dd^cχ over supp dd^cχ (sphere). `singular` lists points where g may be
// singular; if `forbid_singular` and supp dd^cχ meets one of them, it is an error.
// Fixed rule for g ↦ ∫ g dd^cχ with g smooth: plane nodes on the support grid,
// weights carrying the dd^c density; nodes where the density vanishes dropped.
inline std::vector<PlaneNode> ddc_rule(const TestFunction& chi, int level = 1) {
  GridSpec grid;
  if (chi.ddc_support) {
    grid.center = chi.ddc_support->center;
    grid.max_radius = chi.ddc_support->radius;
    grid.uniform_panels = 32;
    grid.breakpoints = chi.ddc_breaks;
  } else {
    grid.center = chi.center;
  }
  std::vector<PlaneNode> out;
  for (auto nd : plane_nodes(grid.refined(level))) {
    const double d = chi.ddc_density(nd.z);
    if (d == 0.0) continue;
    nd.weight *= d;
    out.push_back(nd);
  }
  return out;
}

inline IntegralResult pair_laplacian(ModelSpace space, const std::function<double(Complex)>& g,
                                     const TestFunction& chi, const std::vector<Pole>& singular = {},
                                     bool forbid_singular = false, double tol = 1e-9) {
  if (space.kind != SpaceKind::Sphere)
    throw UnsupportedConfiguration("pair_laplacian is implemented on the sphere");
  GridSpec grid;
  std::vector<Complex> inside;
  double inside_exponent = 0.0;
  for (const auto& pl : singular) {
    if (pl.point.any_inf()) continue;
    const Complex a = pl.point[0].value();
    const bool hit = !chi.ddc_support || chi.ddc_support->radius - std::abs(a - chi.ddc_support->center) > 1e-9;
    if (hit && !chi.is_flat_near(pl.point[0])) {
      if (forbid_singular)
        throw Error("supp dd^c(test function) meets the singular set; use a test function flat near it");
      inside.push_back(a);
      inside_exponent = std::min(inside_exponent, pl.exponent);
    }
  }
  if (inside.size() > 1 || (inside.size() == 1 && chi.ddc_support)) {
    // Smooth partition of unity: a small polar grid around each singular point
    // inside the support, and the support (or global) grid for the rest.
    std::vector<double> delta(inside.size(), 0.5);
    for (size_t k = 0; k < inside.size(); ++k) {
      if (chi.ddc_support)
        delta[k] = std::min(delta[k], 0.5 * (chi.ddc_support->radius - std::abs(inside[k] - chi.ddc_support->center)));
      for (size_t j = 0; j < inside.size(); ++j)
        if (j != k) delta[k] = std::min(delta[k], 0.5 * std::abs(inside[k] - inside[j]));
    }
    auto eta = [&](size_t k, Complex z) {
      return detail::smooth_cutoff((std::abs(z - inside[k]) / delta[k] - 0.5) / 0.5);
    };
    const double part_tol = tol / static_cast<double>(inside.size() + 1);
    IntegralResult total{0.0, 0.0, 0};
    for (size_t k = 0; k < inside.size(); ++k) {
      GridSpec near;
      near.center = inside[k];
      near.max_radius = delta[k];
      near.inner_exponent = inside_exponent;
      near.graded_radius = 0.25 * delta[k];
      near.breakpoints = {0.5 * delta[k]};
      near.uniform_panels = 16;
      const auto r = integrate_plane_adaptive(near, [&](Complex z) {
        const double dd = chi.ddc_density(z);
        return dd == 0.0 ? 0.0 : g(z) * dd * eta(k, z);
      }, part_tol);
      total.value += r.value, total.error_estimate += r.error_estimate, total.node_count += r.node_count;
    }
    GridSpec far;
    if (chi.ddc_support) {
      far.center = chi.ddc_support->center;
      far.max_radius = chi.ddc_support->radius;
    } else {
      far.center = chi.center;
    }
    far.uniform_panels = 32;
    const auto r = integrate_plane_adaptive(far, [&](Complex z) {
      double e = 1.0;
      for (size_t k = 0; k < inside.size(); ++k)
        if (std::abs(z - inside[k]) < delta[k]) e -= eta(k, z);
      const double dd = chi.ddc_density(z);
      return (dd == 0.0 || e <= 0.0) ? 0.0 : g(z) * dd * e;
    }, part_tol);
    total.value += r.value, total.error_estimate += r.error_estimate, total.node_count += r.node_count;
    return total;
  }
  if (!inside.empty()) {
    grid.center = inside.front();
    grid.inner_exponent = inside_exponent;
  } else if (chi.ddc_support) {
    grid.center = chi.ddc_support->center;
    grid.max_radius = chi.ddc_support->radius;
    grid.uniform_panels = 32;
    grid.breakpoints = chi.ddc_breaks;
  } else {
    grid.center = chi.center;
  }
  return integrate_plane_adaptive(grid, [&](Complex z) {
    const double d = chi.ddc_density(z);
    return d == 0.0 ? 0.0 : g(z) * d;
  }, tol);
}

}  // namespace bergman_lab
