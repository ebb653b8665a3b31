#pragma once

// L² section spaces H⁰₍₂₎(X, L^p) for a weight, their orthonormal bases and
// Bergman kernels.
//
// Sections are polynomials of per-factor degree ≤ p written in the shifted
// monomial basis b_J = Π (z_k − c_k)^{J_k} centered at the log pole (or at 0).
// With D_J = ‖b_J‖ and the pre-scaled Gram matrix G̃ = D⁻¹GD⁻¹ = L̃L̃*, the
// orthonormal basis is e = L̃⁻¹ D⁻¹ b. Kernel evaluations use the normalized
// values v_J = b_J e^{−pφ}/D_J, which stay O(p^n) in size, computed from logs.

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <memory>
#include <string>
#include <vector>

#include "bergman_lab/curvature.hpp"
#include "bergman_lab/parallel.hpp"
#include "bergman_lab/quadrature.hpp"
#include "bergman_lab/weights.hpp"

namespace bergman_lab {

using MultiIndex = std::array<int, 2>;

struct BuildOptions {
  double tol = -1.0;  // ≤ 0: 1e-10 on the sphere, 1e-8 on the product
  double cond_threshold = 1e12;
  double cond_limit = 1e15;
  bool allow_extended = true;
  bool force_dense = false;  // use the dense sphere path even when symmetry makes G̃ diagonal
};

struct SectionSpace {
  Weight weight;
  int p = 0;
  std::vector<MultiIndex> basis;
  std::array<Complex, 2> basis_center{Complex(0.0), Complex(0.0)};
  Eigen::MatrixXcd gram;         // pre-scaled: unit diagonal
  Eigen::VectorXd log_scale;     // log D_J
  Eigen::MatrixXcd chol;         // L̃
  Eigen::MatrixXcd chol_inv;     // L̃⁻¹
  bool diagonal = false;         // G̃ = I by symmetry
  bool extended_precision = false;
  double cond = 1.0;
  double gram_error = 0.0;
  long node_count = 0;

  int dim() const { return static_cast<int>(basis.size()); }
  ModelSpace space() const { return weight.space; }
  // A = L̃⁻¹ D⁻¹: e_k = Σ_J A_kJ b_J.
  Eigen::MatrixXcd transform() const {
    Eigen::MatrixXcd A = chol_inv;
    for (int j = 0; j < dim(); ++j) A.col(j) *= std::exp(-log_scale(j));
    return A;
  }
};

using SpacePtr = std::shared_ptr<const SectionSpace>;

// ---- base locus -----------------------------------------------------------

// Sphere, pole of strength ε: (z−a)^j admitted iff j > pε − 1 (pε snapped to an
// integer within 1e-9, the boundary case excluded). Product joint pole:
// (z₁−a)^i (z₂−b)^j admitted iff i + j > pε − 2.
inline std::vector<MultiIndex> base_locus_indices(const Weight& w, int p) {
  if (p < 1) throw Error("base_locus_indices: p must be ≥ 1");
  const auto poles = log_poles(w);
  if (poles.size() > 1) throw UnsupportedConfiguration("more than one log pole is not supported");
  std::vector<MultiIndex> out;
  const double pe = poles.empty() ? 0.0 : snap_integer(p * poles.front().eps);
  if (w.space.dim() == 1) {
    for (int j = 0; j <= p; ++j)
      if (poles.empty() || j > pe - 1.0) out.push_back({j, 0});
  } else {
    for (int i = 0; i <= p; ++i)
      for (int j = 0; j <= p; ++j)
        if (poles.empty() || i + j > pe - 2.0) out.push_back({i, j});
  }
  return out;
}

// Closed-form count on the sphere: p − ⌊pε − 1⌋ for pε ≥ 1, else p + 1.
inline int sphere_dimension_formula(int p, double eps) {
  const double pe = snap_integer(p * eps);
  const int excluded = pe - 1.0 < 0.0 ? 0 : static_cast<int>(std::floor(pe - 1.0)) + 1;
  return p + 1 - excluded;
}

// ---- Cholesky with pivot reporting ------------------------------------------

template <class Scalar>
bool cholesky_lower(const Eigen::Matrix<std::complex<Scalar>, -1, -1>& G,
                    Eigen::Matrix<std::complex<Scalar>, -1, -1>& L, int& bad_pivot) {
  using C = std::complex<Scalar>;
  const int n = static_cast<int>(G.rows());
  L.setZero(n, n);
  for (int j = 0; j < n; ++j) {
    Scalar d = std::real(G(j, j));
    for (int k = 0; k < j; ++k) d -= std::norm(L(j, k));
    if (!(d > Scalar(0))) {
      bad_pivot = j;
      return false;
    }
    const Scalar ljj = std::sqrt(d);
    L(j, j) = C(ljj, 0);
    for (int i = j + 1; i < n; ++i) {
      C s = G(i, j);
      for (int k = 0; k < j; ++k) s -= L(i, k) * std::conj(L(j, k));
      L(i, j) = s / ljj;
    }
  }
  return true;
}

namespace detail {

struct BasisGeometry {
  bool sphere_radial = false;
  bool toric = false;
  Complex center{0.0};
};

inline BasisGeometry basis_geometry(const Weight& w) {
  BasisGeometry g;
  if (w.space.dim() == 2) {
    if (!is_toric(w)) throw UnsupportedConfiguration("sphere product weights must be toric (poles at the origin)");
    g.toric = true;
    return g;
  }
  const auto poles = log_poles(w);
  if (!poles.empty()) g.center = poles.front().center[0].value();
  bool radial = g.center == Complex(0.0);
  for (const auto& t : w.terms) {
    std::visit(
        [&](const auto& x) {
          using T = std::decay_t<decltype(x)>;
          if constexpr (!std::is_same_v<T, FSReference> && !std::is_same_v<T, JointLogPole>)
            if (x.a != Complex(0.0)) radial = false;
        },
        t);
  }
  g.sphere_radial = radial;
  return g;
}

inline bool has_poincare(const Weight& w) {
  for (const auto& t : w.terms)
    if (std::holds_alternative<PoincareLogTerm>(t)) return true;
  return false;
}

// Smallest local exponent (2D area sense per pole dimension) among the basis
// integrands |b_J|² e^{−2pφ} at the pole.
inline double min_pole_exponent(const Weight& w, int p, const std::vector<MultiIndex>& basis) {
  const auto poles = log_poles(w);
  if (poles.empty()) return 0.0;
  int m0 = 1 << 20;
  for (const auto& J : basis) m0 = std::min(m0, J[0] + J[1]);
  return 2.0 * m0 - 2.0 * p * poles.front().eps;
}

// Gram diagonal from nodes given as (log weight, log|b-distance| per factor, φ).
struct LogNode {
  double logw;
  double l1, l2;  // log distances to the basis center per factor
  double phi;
};

inline Eigen::VectorXd log_norms_sq(const std::vector<LogNode>& nodes, const std::vector<MultiIndex>& basis, int p) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(basis.size()));
  parallel_for(basis.size(), [&](size_t j) {
    std::vector<double> terms;
    terms.reserve(nodes.size());
    for (const auto& n : nodes) {
      double t = n.logw - 2.0 * p * n.phi + 2.0 * basis[j][0] * n.l1;
      if (basis[j][1] != 0) t += 2.0 * basis[j][1] * n.l2;
      terms.push_back(t);
    }
    out(static_cast<Eigen::Index>(j)) = log_sum_exp(terms);
  });
  return out;
}

inline std::vector<LogNode> sphere_radial_nodes(const Weight& w, const GridSpec& g) {
  std::vector<LogNode> out;
  for (const auto& r : radial_nodes(g)) {
    const double rho = r.rho;
    const double phi = eval_weight(w, Complex(rho, 0.0));
    out.push_back({std::log(2.0 * kPi * r.weight * fs_density(rho)), std::log(rho), 0.0, phi});
  }
  return out;
}

inline std::vector<LogNode> toric_log_nodes(const Weight& w, const ToricGridSpec& g) {
  const auto nodes = toric_nodes(g);
  std::vector<LogNode> out(nodes.size());
  parallel_for(fixed_chunks(nodes.size(), 8192).size(), [&](size_t c) {
    const size_t b = c * 8192, e = std::min(nodes.size(), b + 8192);
    for (size_t i = b; i < e; ++i) {
      const auto& n = nodes[i];
      const double phi = eval_weight(w, ChartPoint(Coord(n.r1), Coord(n.r2)));
      out[i] = {std::log(n.weight * 2.0 * fs_density(n.r1) * fs_density(n.r2)), std::log(n.r1), std::log(n.r2), phi};
    }
  });
  return out;
}

// Dense pre-scaled Gram on the sphere from a polar grid centered at `g.center`.
inline Eigen::MatrixXcd sphere_dense_gram(const Weight& w, int p, const std::vector<MultiIndex>& basis,
                                          Complex center, const GridSpec& g, Eigen::VectorXd& log_scale) {
  const auto nodes = plane_nodes(g);
  const int n = static_cast<int>(basis.size());
  // Log distances to the basis center, exact through the node offsets when the
  // grid is centered there.
  std::vector<LogNode> ln(nodes.size());
  std::vector<double> arg(nodes.size());
  const bool same = g.center == center;
  parallel_for(fixed_chunks(nodes.size(), 8192).size(), [&](size_t c) {
    const size_t b = c * 8192, e = std::min(nodes.size(), b + 8192);
    for (size_t i = b; i < e; ++i) {
      const Complex d = same ? nodes[i].offset : nodes[i].z - center;
      const double phi = same ? eval_weight_near(w, center, d) : eval_weight(w, nodes[i].z);
      ln[i] = {std::log(nodes[i].weight * fs_density(nodes[i].z)), std::log(std::abs(d)), 0.0, phi};
      arg[i] = std::arg(d);
    }
  });
  log_scale = 0.5 * log_norms_sq(ln, basis, p);
  const auto chunks = fixed_chunks(nodes.size(), 2048);
  std::vector<Eigen::MatrixXcd> partial(chunks.size());
  parallel_for(chunks.size(), [&](size_t c) {
    Eigen::MatrixXcd acc = Eigen::MatrixXcd::Zero(n, n);
    Eigen::VectorXcd v(n);
    for (size_t i = chunks[c].begin; i < chunks[c].end; ++i) {
      const auto& q = ln[i];
      for (int j = 0; j < n; ++j) {
        const int J = basis[static_cast<size_t>(j)][0];
        v(j) = std::polar(std::exp(0.5 * q.logw - p * q.phi + J * q.l1 - log_scale(j)), J * arg[i]);
      }
      acc.noalias() += v * v.adjoint();
    }
    partial[c] = acc;
  });
  // Pairwise reduction in chunk order.
  while (partial.size() > 1) {
    std::vector<Eigen::MatrixXcd> next;
    for (size_t i = 0; i + 1 < partial.size(); i += 2) next.push_back(partial[i] + partial[i + 1]);
    if (partial.size() % 2) next.push_back(partial.back());
    partial.swap(next);
  }
  return partial.empty() ? Eigen::MatrixXcd::Zero(n, n) : partial.front();
}

}  // namespace detail

// Build the section space at power p. Gram entries come from quadrature at two
// resolutions; their disagreement is reported as gram_error and must be ≤ tol.
inline SpacePtr build_space(const Weight& w, int p, BuildOptions opt = {}) {
  if (p < 1) throw Error("build_space: p must be ≥ 1");
  validate(w);
  auto sp = std::make_shared<SectionSpace>();
  sp->weight = w;
  sp->p = p;
  sp->basis = base_locus_indices(w, p);
  if (sp->basis.empty()) throw Error("empty section space at p = " + std::to_string(p));
  const double tol = opt.tol > 0.0 ? opt.tol : (w.space.dim() == 1 ? 1e-10 : 1e-8);
  const auto geo = detail::basis_geometry(w);
  sp->basis_center = {geo.center, Complex(0.0)};
  const int n = sp->dim();
  const double e_min = detail::min_pole_exponent(w, p, sp->basis);

  if (geo.toric || (geo.sphere_radial && !opt.force_dense)) {
    sp->diagonal = true;
    Eigen::VectorXd a, b;
    if (geo.toric) {
      ToricGridSpec tg;
      tg.radial.inner_exponent = std::min(0.0, e_min);
      const auto n0 = detail::toric_log_nodes(w, tg);
      tg.radial.level = 1;
      const auto n1 = detail::toric_log_nodes(w, tg);
      a = detail::log_norms_sq(n0, sp->basis, p);
      b = detail::log_norms_sq(n1, sp->basis, p);
      sp->node_count = static_cast<long>(n0.size() + n1.size());
    } else {
      GridSpec g = weight_grid(w);
      g.center = 0.0;
      g.inner_exponent = std::min(0.0, e_min);
      if (detail::has_poincare(w)) g.grading_depth = 64;
      const auto n0 = detail::sphere_radial_nodes(w, g);
      const auto n1 = detail::sphere_radial_nodes(w, g.refined());
      a = detail::log_norms_sq(n0, sp->basis, p);
      b = detail::log_norms_sq(n1, sp->basis, p);
      sp->node_count = static_cast<long>(n0.size() + n1.size());
    }
    // Relative change of the norms between the two resolutions.
    sp->gram_error = (a - b).cwiseAbs().maxCoeff();
    if (!(sp->gram_error <= tol))
      throw QuadratureError("Gram diagonal did not reach tolerance at p = " + std::to_string(p), sp->gram_error);
    sp->log_scale = 0.5 * b;
    sp->gram = Eigen::MatrixXcd::Identity(n, n);
    sp->chol = sp->gram;
    sp->chol_inv = sp->gram;
    sp->cond = 1.0;
    return sp;
  }

  GridSpec g = weight_grid(w);
  g.center = geo.center;
  if (!log_poles(w).empty()) g.inner_exponent = std::min(0.0, e_min);
  g.uniform_panels = 32;
  g.angular = std::max(64, 4 * (p + 8));
  g.keep_subulp = true;  // the Gram integrand works from node offsets
  Eigen::VectorXd ls0, ls1;
  const Eigen::MatrixXcd G0 = detail::sphere_dense_gram(w, p, sp->basis, geo.center, g, ls0);
  const Eigen::MatrixXcd G1 = detail::sphere_dense_gram(w, p, sp->basis, geo.center, g.refined(), ls1);
  sp->node_count = static_cast<long>(plane_nodes(g).size() + plane_nodes(g.refined()).size());
  sp->gram_error = std::max((G0 - G1).cwiseAbs().maxCoeff(), (ls0 - ls1).cwiseAbs().maxCoeff());
  if (!(sp->gram_error <= tol))
    throw QuadratureError("Gram matrix did not reach tolerance at p = " + std::to_string(p), sp->gram_error);
  sp->log_scale = ls1;
  Eigen::MatrixXcd G = 0.5 * (G1 + G1.adjoint());
  // Unit diagonal after the rescaling (up to quadrature error).
  for (int j = 0; j < n; ++j) G(j, j) = Complex(G(j, j).real(), 0.0);
  sp->gram = G;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(G, Eigen::EigenvaluesOnly);
  const double lmin = es.eigenvalues().minCoeff(), lmax = es.eigenvalues().maxCoeff();
  sp->cond = lmin > 0.0 ? lmax / lmin : kInf;
  if (sp->cond > opt.cond_limit)
    throw ConditioningError("Gram condition number " + std::to_string(sp->cond) + " beyond limit at p = " +
                            std::to_string(p));
  int bad = -1;
  if (sp->cond > opt.cond_threshold && opt.allow_extended) {
    using CL = std::complex<long double>;
    Eigen::Matrix<CL, -1, -1> GL = G.cast<CL>(), LL;
    if (!cholesky_lower<long double>(GL, LL, bad))
      throw ConditioningError("Cholesky failed at p = " + std::to_string(p) + ", pivot " + std::to_string(bad));
    Eigen::Matrix<CL, -1, -1> I = Eigen::Matrix<CL, -1, -1>::Identity(n, n);
    const Eigen::Matrix<CL, -1, -1> Linv = LL.template triangularView<Eigen::Lower>().solve(I);
    sp->chol = LL.cast<Complex>();
    sp->chol_inv = Linv.cast<Complex>();
    sp->extended_precision = true;
    return sp;
  }
  Eigen::MatrixXcd L;
  if (!cholesky_lower<double>(G, L, bad))
    throw ConditioningError("Cholesky failed at p = " + std::to_string(p) + ", pivot " + std::to_string(bad));
  sp->chol = L;
  sp->chol_inv = L.triangularView<Eigen::Lower>().solve(Eigen::MatrixXcd::Identity(n, n));
  return sp;
}

// ---- evaluation -------------------------------------------------------------

// Normalized basis values v_J = b_J e^{−pφ} / D_J at a point; at a coordinate
// equal to ∞ the reciprocal chart is used, where only J_k = p survives.
inline Eigen::VectorXcd normalized_basis_values(const SectionSpace& sp, const ChartPoint& pt) {
  const int n = sp.dim(), m = sp.weight.space.dim();
  std::vector<Complex> coords(static_cast<size_t>(m));
  std::vector<bool> recip(static_cast<size_t>(m));
  for (int k = 0; k < m; ++k) {
    recip[static_cast<size_t>(k)] = pt[k].is_inf();
    coords[static_cast<size_t>(k)] = pt[k].is_inf() ? Complex(0.0) : pt[k].value();
  }
  const double phi = eval_weight_chart(sp.weight, coords, recip);
  Eigen::VectorXcd v = Eigen::VectorXcd::Zero(n);
  if (phi == -kInf) {
    // On the pole: only J with zero total order at the pole could survive, and
    // the base locus rule removed them whenever the metric is singular there.
    return v;
  }
  for (int j = 0; j < n; ++j) {
    const auto& J = sp.basis[static_cast<size_t>(j)];
    double logmod = -sp.log_scale(j) - sp.p * phi;
    Complex phase(1.0, 0.0);
    bool zero = false;
    for (int k = 0; k < m; ++k) {
      const int e = J[static_cast<size_t>(k)];
      if (recip[static_cast<size_t>(k)]) {
        if (e != sp.p) zero = true;  // (z−c)^e / z^p → 0 unless e = p
        continue;
      }
      const Complex d = coords[static_cast<size_t>(k)] - sp.basis_center[static_cast<size_t>(k)];
      if (e == 0) continue;
      if (d == 0.0) {
        zero = true;
        continue;
      }
      logmod += e * std::log(std::abs(d));
      phase *= std::polar(1.0, e * std::arg(d));
    }
    if (!zero) v(j) = std::exp(logmod) * phase;
  }
  return v;
}

inline double bergman_kernel(const SectionSpace& sp, const ChartPoint& pt) {
  const Eigen::VectorXcd v = normalized_basis_values(sp, pt);
  if (sp.diagonal) return v.squaredNorm();
  return (sp.chol_inv.triangularView<Eigen::Lower>() * v).squaredNorm();
}

inline double bergman_kernel(const SpacePtr& sp, const ChartPoint& pt) { return bergman_kernel(*sp, pt); }

// u_p = φ + log P_p / (2p); −∞ on the base locus.
inline double fs_potential(const SectionSpace& sp, const ChartPoint& pt) {
  const double P = bergman_kernel(sp, pt);
  if (P <= 0.0) return -kInf;
  return eval_weight(sp.weight, pt) + std::log(P) / (2.0 * sp.p);
}

// ---- reports ----------------------------------------------------------------

struct DimensionRow {
  int p;
  int dim;
  double lower_ratio;  // dim / p^n
  bool upper_ok;       // dim ≤ (p+1)^n
};

inline std::vector<DimensionRow> dimension_report(const Weight& w, const std::vector<int>& p_list) {
  if (p_list.empty()) throw Error("dimension_report: empty p list");
  std::vector<DimensionRow> out;
  const int n = w.space.dim();
  for (int p : p_list) {
    const int d = static_cast<int>(base_locus_indices(w, p).size());
    out.push_back({p, d, d / std::pow(p, n), d <= std::pow(p + 1, n)});
  }
  return out;
}

struct KernelBoundReport {
  double min_kernel = kInf;
  double scaled_sup = 0.0;  // sup P_p(z) dist(z,Σ)^{2nϱ/ν} p^{−2n/ν}
};

// Statistics over the given points (which should avoid Σ by a margin). With an
// empty singular set dist ≡ 1.
inline KernelBoundReport kernel_bound_report(const SectionSpace& sp, const std::vector<ChartPoint>& grid,
                                             const HolderParams& h) {
  KernelBoundReport rep;
  const int n = sp.weight.space.dim();
  std::vector<double> P(grid.size());
  parallel_for(grid.size(), [&](size_t i) { P[i] = bergman_kernel(sp, grid[i]); });
  for (size_t i = 0; i < grid.size(); ++i) {
    double d = sp.weight.singular_set.empty() ? 1.0 : dist_to_sing(sp.weight, grid[i]);
    rep.min_kernel = std::min(rep.min_kernel, P[i]);
    rep.scaled_sup = std::max(rep.scaled_sup, P[i] * std::pow(d, 2.0 * n * h.rho / h.nu) *
                                                  std::pow(sp.p, -2.0 * n / h.nu));
  }
  return rep;
}

// Sample points on the sphere avoiding Σ by `margin` (chordal): a polar grid in
// chordal-uniform radii plus ∞.
inline std::vector<ChartPoint> sphere_sample_grid(const Weight& w, int n_radial = 24, int n_angular = 24,
                                                  double margin = 0.0) {
  std::vector<ChartPoint> out;
  for (int i = 0; i < n_radial; ++i) {
    const double u = (i + 0.5) / n_radial;  // FS area fraction
    const double r = std::sqrt(u / (1.0 - u));
    for (int k = 0; k < n_angular; ++k) {
      const ChartPoint x(std::polar(r, 2.0 * kPi * (k + 0.25 * (i % 4)) / n_angular));
      if (dist_to_sing(w, x) >= margin) out.push_back(x);
    }
  }
  const ChartPoint inf(Coord::infinity());
  if (dist_to_sing(w, inf) >= margin) out.push_back(inf);
  return out;
}

}  // namespace bergman_lab
