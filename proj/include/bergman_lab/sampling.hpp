#pragma once

// Random sections under the Fubini–Study measure: iid standard complex
// Gaussian coordinates in an orthonormal basis, normalized to the unit sphere.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <vector>

#include "bergman_lab/bergman.hpp"
#include "bergman_lab/rng.hpp"

namespace bergman_lab {

struct Section {
  SpacePtr space;
  Eigen::VectorXcd coeffs;  // orthonormal-basis coordinates

  // Coordinates against the normalized monomials b_J / D_J: (L̃⁻¹)ᵀ c.
  Eigen::VectorXcd normalized_monomial() const {
    if (space->diagonal) return coeffs;
    return space->chol_inv.transpose() * coeffs;
  }
  // Coefficients m_J of s = Σ m_J b_J; magnitudes may be large.
  Eigen::VectorXcd monomial() const {
    Eigen::VectorXcd m = normalized_monomial();
    for (int j = 0; j < m.size(); ++j) m(j) *= std::exp(-space->log_scale(j));
    return m;
  }
  // log |s(x)|_{h^p}; −∞ at zeros.
  double log_norm_at(const ChartPoint& x) const {
    return std::log(std::abs(value_at(x)));
  }
  // s(x) e^{−pφ(x)} up to a unimodular factor.
  Complex value_at(const ChartPoint& x) const {
    return normalized_monomial().cwiseProduct(normalized_basis_values(*space, x)).sum();
  }
};

using SectionTuple = std::vector<Section>;

inline Section section_from_coeffs(SpacePtr sp, Eigen::VectorXcd c) {
  if (c.size() != sp->dim()) throw Error("section_from_coeffs: coefficient length does not match the space");
  return {std::move(sp), std::move(c)};
}

// Section Σ m_J b_J given by monomial coefficients in basis order; not normalized.
inline Section section_from_monomial(SpacePtr sp, const Eigen::VectorXcd& m) {
  if (m.size() != sp->dim()) throw Error("section_from_monomial: coefficient length does not match the space");
  Eigen::VectorXcd mt(m.size());
  for (int j = 0; j < m.size(); ++j) mt(j) = m(j) * std::exp(sp->log_scale(j));
  Eigen::VectorXcd c = sp->diagonal ? mt : Eigen::VectorXcd(sp->chol.transpose() * mt);
  return section_from_coeffs(std::move(sp), std::move(c));
}

// Normalized orthonormal basis element e_k.
inline Section basis_section(SpacePtr sp, int k) {
  Eigen::VectorXcd c = Eigen::VectorXcd::Zero(sp->dim());
  c(k) = 1.0;
  return section_from_coeffs(std::move(sp), std::move(c));
}

inline Section sample_section(SpacePtr sp, RngStream& rng) {
  for (;;) {
    Eigen::VectorXcd c(sp->dim());
    for (int j = 0; j < c.size(); ++j) c(j) = rng.complex_normal();
    const double n = c.norm();
    if (n > 0.0) return section_from_coeffs(std::move(sp), c / n);
  }
}

// One independent stream per component, derived from the tuple's stream key.
inline SectionTuple sample_tuple(const std::vector<SpacePtr>& spaces, std::uint64_t seed, std::uint64_t experiment,
                                 std::uint64_t sample) {
  if (spaces.empty()) throw Error("sample_tuple: no spaces");
  for (const auto& s : spaces)
    if (s->p != spaces.front()->p || !(s->weight.space == spaces.front()->weight.space))
      throw Error("sample_tuple: spaces must share p and the model space");
  SectionTuple out;
  for (size_t k = 0; k < spaces.size(); ++k) {
    RngStream rng(seed, experiment, static_cast<std::uint64_t>(spaces[k]->p), sample, k + 1);
    out.push_back(sample_section(spaces[k], rng));
  }
  return out;
}

// c_p from (c_p)^{−d₀} = d₀! / (d₁!⋯d_m!), d₀ = Σ d_k, with d_k the projective
// dimensions.
inline double multiproj_constant(const std::vector<int>& d) {
  if (d.empty()) throw Error("multiproj_constant: empty dimension list");
  int d0 = 0;
  double log_multinomial = 0.0;
  for (int x : d) {
    if (x < 1) throw Error("multiproj_constant: dimensions must be ≥ 1");
    d0 += x;
    log_multinomial -= std::lgamma(x + 1.0);
  }
  log_multinomial += std::lgamma(d0 + 1.0);
  const double c = std::exp(-log_multinomial / d0);
  if (c < 1.0 / static_cast<double>(d.size()) * (1.0 - 1e-12)) throw Error("multiproj_constant: c_p below 1/m");
  return c;
}

// One-sample Kolmogorov–Smirnov statistic against a CDF.
template <class Cdf>
double ks_statistic(std::vector<double> xs, Cdf&& cdf) {
  std::sort(xs.begin(), xs.end());
  const double n = static_cast<double>(xs.size());
  double d = 0.0;
  for (size_t i = 0; i < xs.size(); ++i) {
    const double F = cdf(xs[i]);
    d = std::max({d, (i + 1) / n - F, F - i / n});
  }
  return d;
}

// Asymptotic Kolmogorov p-value for statistic d over n samples.
inline double ks_pvalue(double d, std::size_t n) {
  const double sn = std::sqrt(static_cast<double>(n));
  const double t = (sn + 0.12 + 0.11 / sn) * d;
  double s = 0.0;
  for (int k = 1; k <= 100; ++k) s += 2.0 * ((k % 2) ? 1.0 : -1.0) * std::exp(-2.0 * k * k * t * t);
  return std::clamp(s, 0.0, 1.0);
}

}  // namespace bergman_lab
