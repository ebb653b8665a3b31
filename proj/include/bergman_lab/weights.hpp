#pragma once

// Singular local weights φ on the model spaces, as sums of closed-form terms.
// The metric on L = O(1) (or O(1,1)) is |e|² = e^{−2φ}; dd^c log|z−a| is the
// unit Dirac mass at a.

#include <algorithm>
#include <cmath>
#include <regex>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "bergman_lab/core.hpp"

namespace bergman_lab {

// s · ½ log(1+|z|²) on one factor (factor = −1: every factor).
struct FSReference {
  double scale = 1.0;
  int factor = -1;
};

enum class CutoffProfile {
  // ε(log r − ½ log(r² + r0²)): the pole with its mass spread back out at scale r0.
  Regularized,
  // ε χ(r) log r, χ = 1 − smoothstep₅ on [r0, 2r0].
  Smoothstep,
};

struct CutoffLogPole {
  Complex a{0.0, 0.0};
  double eps = 0.3;
  double r0 = 0.75;
  CutoffProfile profile = CutoffProfile::Regularized;
  int factor = 0;
};

// amp · chordal(z, a)^{2β}
struct ConeTerm {
  Complex a{0.0, 0.0};
  double beta = 0.5;
  double amp = 0.05;
  int factor = 0;
};

// −(ε/2) log(1 + r0²/(|z₁−a|² + |z₂−b|²)) on the product.
struct JointLogPole {
  Complex a{0.0, 0.0}, b{0.0, 0.0};
  double eps = 0.5;
  double r0 = 0.9;
};

// −(ε/2) log log(1 + r0²/|z−a|²): Poincaré-type growth at a, ε log|z| at ∞.
struct PoincareLogTerm {
  Complex a{0.0, 0.0};
  double eps = 0.3;
  double r0 = 0.5;
  int factor = 0;
};

using WeightTerm = std::variant<FSReference, CutoffLogPole, ConeTerm, JointLogPole, PoincareLogTerm>;

struct HolderParams {
  double nu = 1.0;
  double rho = 1.0;
  double c = 5.0;
};

// A singular component: a point, or on the product the divisor {a}×P¹
// (divisor_factor = 0) or P¹×{b} (divisor_factor = 1).
struct SingularComponent {
  ChartPoint point;
  int divisor_factor = -1;
};

struct Weight {
  ModelSpace space = ModelSpace::sphere();
  std::vector<WeightTerm> terms;
  std::vector<SingularComponent> singular_set;
  HolderParams holder;
  std::string name = "fs";
};

namespace detail {

inline double log1p_ratio(double r0sq, double r2) { return std::log1p(r0sq / r2); }

inline double smoothstep5(double t) {
  t = std::clamp(t, 0.0, 1.0);
  return t * t * t * (t * (6.0 * t - 15.0) + 10.0);
}

// Lebesgue-measure growth coefficient at ∞: f(z) ~ g log|z|.
inline double log_growth(const WeightTerm& t, int factor) {
  if (auto* p = std::get_if<PoincareLogTerm>(&t)) return p->factor == factor ? p->eps : 0.0;
  if (auto* f = std::get_if<FSReference>(&t)) return (f->factor < 0 || f->factor == factor) ? f->scale : 0.0;
  return 0.0;
}

inline double poincare_value(const PoincareLogTerm& t, Complex z) {
  const double r2 = std::norm(z - t.a);
  if (r2 == 0.0) return -kInf;
  return -0.5 * t.eps * std::log(log1p_ratio(t.r0 * t.r0, r2));
}

// Value of the term in the reciprocal chart at w = 0 (z = ∞) after adding
// growth·log|w|.
inline double value_at_infinity(const WeightTerm& term) {
  return std::visit(
      [](const auto& t) -> double {
        using T = std::decay_t<decltype(t)>;
        if constexpr (std::is_same_v<T, PoincareLogTerm>) return -t.eps * std::log(t.r0);
        return 0.0;
      },
      term);
}

}  // namespace detail

// Single-term value at a finite chart point (factor coordinates z).
inline double eval_term(const WeightTerm& term, const std::vector<Complex>& z) {
  return std::visit(
      [&](const auto& t) -> double {
        using T = std::decay_t<decltype(t)>;
        if constexpr (std::is_same_v<T, FSReference>) {
          double s = 0.0;
          for (size_t k = 0; k < z.size(); ++k)
            if (t.factor < 0 || t.factor == static_cast<int>(k)) s += 0.5 * std::log1p(std::norm(z[k]));
          return t.scale * s;
        } else if constexpr (std::is_same_v<T, CutoffLogPole>) {
          const Complex x = z[static_cast<size_t>(t.factor)];
          const double r2 = std::norm(x - t.a);
          if (r2 == 0.0) return -kInf;
          if (t.profile == CutoffProfile::Regularized) return -0.5 * t.eps * detail::log1p_ratio(t.r0 * t.r0, r2);
          const double r = std::sqrt(r2);
          const double chi = 1.0 - detail::smoothstep5((r - t.r0) / t.r0);
          return chi == 0.0 ? 0.0 : t.eps * chi * std::log(r);
        } else if constexpr (std::is_same_v<T, ConeTerm>) {
          const Complex x = z[static_cast<size_t>(t.factor)];
          return t.amp * std::pow(chordal(Coord(x), Coord(t.a)), 2.0 * t.beta);
        } else if constexpr (std::is_same_v<T, JointLogPole>) {
          const double s = std::norm(z[0] - t.a) + std::norm(z[1] - t.b);
          if (s == 0.0) return -kInf;
          return -0.5 * t.eps * detail::log1p_ratio(t.r0 * t.r0, s);
        } else {
          return detail::poincare_value(t, z[static_cast<size_t>(t.factor)]);
        }
      },
      term);
}

// Term value in the chart where the factors flagged in `recip` use w = 1/z;
// `coords` holds w for those factors. Includes the transition growth·log|w|.
inline double eval_term_chart(const WeightTerm& term, const std::vector<Complex>& coords,
                              const std::vector<bool>& recip) {
  std::vector<Complex> z(coords.size());
  bool at_inf = false;
  double shift = 0.0;
  for (size_t k = 0; k < coords.size(); ++k) {
    if (!recip[k]) {
      z[k] = coords[k];
      continue;
    }
    const double g = detail::log_growth(term, static_cast<int>(k));
    if (coords[k] == 0.0) {
      at_inf = true;
      continue;
    }
    z[k] = 1.0 / coords[k];
    shift += g * std::log(std::abs(coords[k]));
  }
  if (!at_inf) return eval_term(term, z) + shift;

  // Some factor sits exactly at ∞: use each term's limit there.
  return std::visit(
      [&](const auto& t) -> double {
        using T = std::decay_t<decltype(t)>;
        if constexpr (std::is_same_v<T, FSReference>) {
          double s = 0.0;
          for (size_t k = 0; k < coords.size(); ++k) {
            if (!(t.factor < 0 || t.factor == static_cast<int>(k))) continue;
            s += 0.5 * std::log1p(std::norm(coords[k]));  // same form in both charts
          }
          return t.scale * s;
        } else if constexpr (std::is_same_v<T, CutoffLogPole>) {
          return recip[static_cast<size_t>(t.factor)] && coords[static_cast<size_t>(t.factor)] == 0.0
                     ? 0.0
                     : eval_term(term, z);
        } else if constexpr (std::is_same_v<T, ConeTerm>) {
          const size_t k = static_cast<size_t>(t.factor);
          if (recip[k] && coords[k] == 0.0)
            return t.amp * std::pow(chordal(Coord::infinity(), Coord(t.a)), 2.0 * t.beta);
          return eval_term(term, z);
        } else if constexpr (std::is_same_v<T, JointLogPole>) {
          return 0.0;
        } else {
          const size_t k = static_cast<size_t>(t.factor);
          if (!(recip[k] && coords[k] == 0.0)) return eval_term(term, z) + shift;
          return detail::value_at_infinity(term);
        }
      },
      term);
}

// φ at a chart point. Finite coordinates use the affine chart; a coordinate at
// ∞ uses the reciprocal chart on that factor, φ̃(w) = φ(1/w) + deg·log|w|.
inline double eval_weight(const Weight& w, const ChartPoint& pt) {
  if (pt.factors() != w.space.dim()) throw Error("eval_weight: point does not match the model space");
  std::vector<Complex> coords;
  std::vector<bool> recip;
  for (const auto& c : pt.coords) {
    coords.push_back(c.is_inf() ? Complex(0.0) : c.value());
    recip.push_back(c.is_inf());
  }
  double s = 0.0;
  for (const auto& t : w.terms) {
    const double v = eval_term_chart(t, coords, recip);
    if (v == -kInf) return -kInf;
    s += v;
  }
  return s;
}

// Same in an explicit chart (used where |z| > 1 is better handled through w = 1/z).
inline double eval_weight_chart(const Weight& w, const std::vector<Complex>& coords, const std::vector<bool>& recip) {
  double s = 0.0;
  for (const auto& t : w.terms) {
    const double v = eval_term_chart(t, coords, recip);
    if (v == -kInf) return -kInf;
    s += v;
  }
  return s;
}

inline double eval_weight(const Weight& w, Complex z) { return eval_weight(w, ChartPoint(z)); }

// φ(c + d) on the sphere for tiny |d|: terms centered at c see d exactly.
inline double eval_weight_near(const Weight& w, Complex c, Complex d) {
  const Complex z = c + d;
  double s = 0.0;
  for (const auto& t : w.terms) {
    const double v = std::visit(
        [&](const auto& x) -> double {
          using T = std::decay_t<decltype(x)>;
          if constexpr (std::is_same_v<T, FSReference> || std::is_same_v<T, JointLogPole>) {
            return eval_term(t, {z});
          } else {
            if (x.a != c) return eval_term(t, {z});
            T moved = x;
            moved.a = 0.0;
            return eval_term(WeightTerm(moved), {d});
          }
        },
        t);
    if (v == -kInf) return -kInf;
    s += v;
  }
  return s;
}

// Total first Chern degree per factor: Σ FS scales + Σ log growths.
inline double factor_degree(const Weight& w, int factor) {
  double d = 0.0;
  for (const auto& t : w.terms) d += detail::log_growth(t, factor);
  return d;
}

inline void validate(const Weight& w) {
  for (int k = 0; k < w.space.dim(); ++k)
    if (std::abs(factor_degree(w, k) - 1.0) > 1e-12)
      throw Error("weight terms do not add up to degree 1 on factor " + std::to_string(k));
  for (const auto& t : w.terms) {
    const bool ok = std::visit(
        [&](const auto& x) -> bool {
          using T = std::decay_t<decltype(x)>;
          if constexpr (std::is_same_v<T, FSReference>) return x.scale > 0.0;
          else if constexpr (std::is_same_v<T, JointLogPole>) return w.space.dim() == 2 && x.eps > 0.0 && x.r0 > 0.0;
          else if constexpr (std::is_same_v<T, ConeTerm>) return x.beta > 0.0 && x.beta < 1.0 && x.factor < w.space.dim();
          else return x.eps > 0.0 && x.r0 > 0.0 && x.factor < w.space.dim();
        },
        t);
    if (!ok) throw Error("invalid weight term parameters");
  }
  if (w.holder.nu <= 0.0 || w.holder.nu > 1.0 || !(w.holder.rho >= 0.0) || !(w.holder.c > 0.0))
    throw Error("invalid Hölder parameters");
}

// Chordal distance to the nearest singular component; +∞ for an empty set.
inline double dist_to_sing(const ChartPoint& pt, const std::vector<SingularComponent>& sigma) {
  double d = kInf;
  for (const auto& c : sigma) {
    if (c.divisor_factor >= 0)
      d = std::min(d, chordal(pt[c.divisor_factor], c.point[c.divisor_factor]));
    else
      d = std::min(d, chordal(pt, c.point));
  }
  return d;
}

inline double dist_to_sing(const Weight& w, const ChartPoint& pt) { return dist_to_sing(pt, w.singular_set); }

// Log-pole strength at a singular point (0 if none); used for base loci.
struct PoleInfo {
  ChartPoint center;
  double eps;
  bool joint;
};

inline std::vector<PoleInfo> log_poles(const Weight& w) {
  std::vector<PoleInfo> out;
  for (const auto& t : w.terms) {
    if (auto* c = std::get_if<CutoffLogPole>(&t)) {
      if (w.space.dim() == 1) out.push_back({ChartPoint(c->a), c->eps, false});
      else throw UnsupportedConfiguration("single-factor log poles on the product are not supported");
    } else if (auto* j = std::get_if<JointLogPole>(&t)) {
      out.push_back({ChartPoint(Coord(j->a), Coord(j->b)), j->eps, true});
    }
  }
  return out;
}

// ---- presets ------------------------------------------------------------

namespace detail {

inline Complex parse_complex(std::string s) {
  s.erase(std::remove_if(s.begin(), s.end(), ::isspace), s.end());
  if (s.empty()) throw ConfigError("empty complex literal");
  try {
    if (s.back() != 'i') return {std::stod(s), 0.0};
    s.pop_back();
    size_t split = std::string::npos;
    for (size_t k = s.size(); k-- > 1;)
      if ((s[k] == '+' || s[k] == '-') && s[k - 1] != 'e' && s[k - 1] != 'E') {
        split = k;
        break;
      }
    if (split == std::string::npos) return {0.0, s.empty() || s == "+" ? 1.0 : (s == "-" ? -1.0 : std::stod(s))};
    const std::string im = s.substr(split);
    return {std::stod(s.substr(0, split)), im == "+" ? 1.0 : (im == "-" ? -1.0 : std::stod(im))};
  } catch (const std::logic_error&) {
    throw ConfigError("cannot parse complex literal '" + s + "'");
  }
}

inline std::vector<std::string> split_args(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(item);
  return out;
}

}  // namespace detail

inline Weight fs_weight(ModelSpace space = ModelSpace::sphere()) {
  Weight w;
  w.space = space;
  w.terms = {FSReference{1.0, -1}};
  w.holder = {1.0, 0.0, 10.0};
  w.name = "fs";
  return w;
}

// Named presets:
//   fs
//   fs+logpole(a,eps[,r0])        regularized cutoff log pole
//   fs+logpole_step(a,eps[,r0])   smoothstep cutoff (not psh for moderate eps)
//   fs+cone(a,beta,amp)
//   fs+jointpole(a,b,eps[,r0])    product only
//   fs+poincare(a,eps[,r0])
inline Weight parse_preset(const std::string& name, ModelSpace space = ModelSpace::sphere()) {
  if (name == "fs") return fs_weight(space);
  static const std::regex re(R"(fs\+(logpole|logpole_step|cone|jointpole|poincare)\((.*)\))");
  std::smatch m;
  if (!std::regex_match(name, m, re)) throw ConfigError("unknown weight preset '" + name + "'");
  const std::string kind = m[1];
  const auto args = detail::split_args(m[2]);
  auto num = [&](size_t i, double dflt) {
    if (i >= args.size()) return dflt;
    try {
      return std::stod(args[i]);
    } catch (const std::logic_error&) {
      throw ConfigError("bad numeric argument '" + args[i] + "' in preset " + name);
    }
  };
  auto need = [&](size_t lo, size_t hi) {
    if (args.size() < lo || args.size() > hi) throw ConfigError("wrong argument count in preset " + name);
  };

  Weight w;
  w.space = space;
  w.name = name;
  if (kind == "logpole" || kind == "logpole_step") {
    need(2, 3);
    if (space.dim() != 1) throw UnsupportedConfiguration("logpole presets are defined on the sphere");
    CutoffLogPole t;
    t.a = detail::parse_complex(args[0]);
    t.eps = num(1, 0.3);
    t.profile = kind == "logpole" ? CutoffProfile::Regularized : CutoffProfile::Smoothstep;
    t.r0 = num(2, kind == "logpole" ? 0.75 : 0.2);
    w.terms = {FSReference{1.0, -1}, t};
    w.singular_set = {{ChartPoint(t.a), -1}};
    w.holder = {1.0, 1.0, 5.0};
  } else if (kind == "cone") {
    need(3, 3);
    if (space.dim() != 1) throw UnsupportedConfiguration("cone preset is defined on the sphere");
    ConeTerm t;
    t.a = detail::parse_complex(args[0]);
    t.beta = num(1, 0.5);
    t.amp = num(2, 0.05);
    w.terms = {FSReference{1.0, -1}, t};
    w.holder = {t.beta < 1.0 ? 2.0 * t.beta : 1.0, 0.0, 10.0};
    if (w.holder.nu > 1.0) w.holder.nu = 1.0;
  } else if (kind == "jointpole") {
    need(3, 4);
    if (space.dim() != 2) throw UnsupportedConfiguration("jointpole preset requires the sphere product");
    JointLogPole t;
    t.a = detail::parse_complex(args[0]);
    t.b = detail::parse_complex(args[1]);
    t.eps = num(2, 0.5);
    t.r0 = num(3, 0.9);
    w.terms = {FSReference{1.0, -1}, t};
    w.singular_set = {{ChartPoint(Coord(t.a), Coord(t.b)), -1}};
    w.holder = {1.0, 1.0, 5.0};
  } else {
    need(2, 3);
    if (space.dim() != 1) throw UnsupportedConfiguration("poincare preset is defined on the sphere");
    PoincareLogTerm t;
    t.a = detail::parse_complex(args[0]);
    t.eps = num(1, 0.3);
    t.r0 = num(2, 0.5);
    if (!(t.eps > 0.0 && t.eps < 1.0)) throw ConfigError("poincare strength must lie in (0,1)");
    w.terms = {FSReference{1.0 - t.eps, -1}, t};
    w.singular_set = {{ChartPoint(t.a), -1}};
    w.holder = {1.0, 1.0, 5.0};
  }
  validate(w);
  return w;
}

}  // namespace bergman_lab
