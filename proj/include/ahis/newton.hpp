#pragma once

// Newton polytope / Newton diagram of a germ, face weights and the exponent
// lattices built from them. Everything here is exact rational arithmetic.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "ahis/error.hpp"
#include "ahis/poly.hpp"
#include "ahis/rational.hpp"

namespace ahis {

/// Quasihomogeneity type (σ_1..σ_{n+1}; m) of a face.
struct WeightVector {
  std::vector<Rational> sigma;
  Rational degree;  // m_Γ

  std::size_t dim() const { return sigma.size(); }

  Rational min_sigma() const {
    if (sigma.empty()) throw DomainError("empty weight vector");
    return *std::min_element(sigma.begin(), sigma.end());
  }

  /// Rescaled so that min σ_j = 1 (the degree is scaled along).
  WeightVector normalized() const {
    const Rational s = min_sigma();
    WeightVector out{sigma, degree / s};
    for (auto& v : out.sigma) v /= s;
    return out;
  }

  /// Index of the smallest weight; ties resolve to the last such index.
  std::size_t min_index() const {
    std::size_t best = 0;
    for (std::size_t j = 0; j < sigma.size(); ++j)
      if (sigma[j] <= sigma[best]) best = j;
    return best;
  }

  Rational weighted_degree(const ExponentVector& e) const { return dot(e, sigma); }

  std::vector<double> as_doubles() const {
    std::vector<double> v;
    for (const auto& s : sigma) v.push_back(to_double(s));
    return v;
  }

  friend bool operator==(const WeightVector&, const WeightVector&) = default;
};

struct NewtonFace {
  std::vector<ExponentVector> vertices;  // support points of f lying on the face
  WeightVector weight;
  Polynomial face_poly;  // f_Γ
  Polynomial remainder;  // R_Γ
};

struct NewtonDiagram {
  std::size_t dim = 0;
  std::vector<NewtonFace> faces;
};

namespace detail {

/// Basis vector of the one-dimensional null space of `rows` (each of length
/// `dim`), or nullopt when the null space has another dimension.
inline std::optional<std::vector<Rational>> null_line(std::vector<std::vector<Rational>> rows,
                                                      std::size_t dim) {
  std::vector<std::size_t> pivot_cols;
  std::size_t r = 0;
  for (std::size_t c = 0; c < dim && r < rows.size(); ++c) {
    std::size_t piv = r;
    while (piv < rows.size() && rows[piv][c] == 0) ++piv;
    if (piv == rows.size()) continue;
    std::swap(rows[piv], rows[r]);
    const Rational inv = 1 / rows[r][c];
    for (auto& v : rows[r]) v *= inv;
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (i == r || rows[i][c] == 0) continue;
      const Rational fct = rows[i][c];
      for (std::size_t k = 0; k < dim; ++k) rows[i][k] -= fct * rows[r][k];
    }
    pivot_cols.push_back(c);
    ++r;
  }
  if (pivot_cols.size() + 1 != dim) return std::nullopt;
  std::size_t free_col = 0;
  while (std::find(pivot_cols.begin(), pivot_cols.end(), free_col) != pivot_cols.end()) ++free_col;
  std::vector<Rational> v(dim, 0);
  v[free_col] = 1;
  for (std::size_t i = 0; i < pivot_cols.size(); ++i) v[pivot_cols[i]] = -rows[i][free_col];
  return v;
}

/// Scales a rational vector to the primitive integer vector with the same
/// direction (sign preserved).
inline std::vector<Rational> primitive(std::vector<Rational> v) {
  Integer den_lcm = 1;
  for (const auto& x : v) den_lcm = lcm(den_lcm, denominator(x));
  Integer g = 0;
  for (auto& x : v) {
    x *= den_lcm;
    g = boost::multiprecision::gcd(g, boost::multiprecision::abs(numerator(x)));
  }
  if (g > 1)
    for (auto& x : v) x /= g;
  return v;
}

template <class F>
void for_each_combination(std::size_t n, std::size_t k, F&& f) {
  if (k > n) return;
  std::vector<std::size_t> idx(k);
  for (std::size_t i = 0; i < k; ++i) idx[i] = i;
  while (true) {
    f(std::span<const std::size_t>(idx));
    std::size_t i = k;
    while (i > 0 && idx[i - 1] == n - k + i - 1) --i;
    if (i == 0) return;
    ++idx[i - 1];
    for (std::size_t j = i; j < k; ++j) idx[j] = idx[j - 1] + 1;
  }
}

struct Facet {
  std::vector<Rational> normal;  // primitive, nonnegative
  Rational level;
  std::vector<std::size_t> points;  // indices (sorted) of points attaining the level
};

}  // namespace detail

/// Support exponents of f that are minimal for the componentwise order; only
/// these can lie on a compact face.
inline std::vector<ExponentVector> minimal_support(const Polynomial& f) {
  std::vector<ExponentVector> pts;
  for (const auto& [e, c] : f.terms()) pts.push_back(e);
  std::vector<ExponentVector> out;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    bool dominated = false;
    for (std::size_t j = 0; j < pts.size() && !dominated; ++j)
      dominated = i != j && pts[i] != pts[j] && pts[i].dominates(pts[j]);
    if (!dominated) out.push_back(pts[i]);
  }
  return out;
}

/// Restriction of f to the monomials with σ-weighted degree exactly m.
inline Polynomial weighted_part(const Polynomial& f, const WeightVector& w) {
  Polynomial out(f.dim());
  for (const auto& [e, c] : f.terms())
    if (w.weighted_degree(e) == w.degree) out.add_term(e, c);
  return out;
}

/// Compact faces of N(f) that are maximal under inclusion, each with an exact
/// positive weight vector (primitive integers) and its f_Γ / R_Γ split.
///
/// Facets come from exact null spaces of (point differences, coordinate
/// directions); every face is an intersection of facets, and a face is compact
/// iff the sum of its containing facet normals is strictly positive.
inline NewtonDiagram newton_diagram(const Polynomial& f) {
  if (f.is_zero()) throw DomainError("empty polynomial has no Newton diagram");
  const std::size_t d = f.dim();
  if (f.coefficient(ExponentVector::zero(d)) != 0)
    throw DomainError("origin lies in the support: f(0) != 0, not a germ vanishing at 0");

  const std::vector<ExponentVector> pts = minimal_support(f);
  std::vector<std::vector<Rational>> ptq;
  for (const auto& p : pts) {
    std::vector<Rational> v;
    for (int x : p.entries()) v.emplace_back(x);
    ptq.push_back(std::move(v));
  }

  std::vector<detail::Facet> facets;
  std::set<std::pair<std::vector<Rational>, Rational>> seen;
  for (std::size_t k = 1; k <= std::min(d, pts.size()); ++k) {
    const std::size_t ndir = d - k;
    detail::for_each_combination(pts.size(), k, [&](std::span<const std::size_t> chosen) {
      detail::for_each_combination(d, ndir, [&](std::span<const std::size_t> dirs) {
        std::vector<std::vector<Rational>> rows;
        for (std::size_t i = 1; i < chosen.size(); ++i) {
          std::vector<Rational> row(d);
          for (std::size_t c = 0; c < d; ++c) row[c] = ptq[chosen[i]][c] - ptq[chosen[0]][c];
          rows.push_back(std::move(row));
        }
        for (std::size_t j : dirs) {
          std::vector<Rational> row(d, 0);
          row[j] = 1;
          rows.push_back(std::move(row));
        }
        auto line = detail::null_line(std::move(rows), d);
        if (!line) return;
        auto normal = detail::primitive(*line);
        // Supporting normals of N(f) are nonnegative.
        const bool has_pos = std::any_of(normal.begin(), normal.end(), [](auto& x) { return x > 0; });
        const bool has_neg = std::any_of(normal.begin(), normal.end(), [](auto& x) { return x < 0; });
        if (has_pos && has_neg) return;
        if (has_neg)
          for (auto& x : normal) x = -x;
        Rational level = 0;
        for (std::size_t c = 0; c < d; ++c) level += normal[c] * ptq[chosen[0]][c];
        std::vector<std::size_t> on;
        for (std::size_t i = 0; i < pts.size(); ++i) {
          Rational v = 0;
          for (std::size_t c = 0; c < d; ++c) v += normal[c] * ptq[i][c];
          if (v < level) return;
          if (v == level) on.push_back(i);
        }
        if (!seen.insert({normal, level}).second) return;
        facets.push_back({std::move(normal), level, std::move(on)});
      });
    });
  }

  // Face lattice by closing facet point sets under intersection.
  std::set<std::vector<std::size_t>> faces;
  std::vector<std::vector<std::size_t>> frontier;
  for (const auto& fc : facets)
    if (faces.insert(fc.points).second) frontier.push_back(fc.points);
  while (!frontier.empty()) {
    std::vector<std::vector<std::size_t>> next;
    for (const auto& a : frontier)
      for (const auto& fc : facets) {
        std::vector<std::size_t> inter;
        std::set_intersection(a.begin(), a.end(), fc.points.begin(), fc.points.end(),
                              std::back_inserter(inter));
        if (!inter.empty() && faces.insert(inter).second) next.push_back(std::move(inter));
      }
    frontier = std::move(next);
  }

  struct Compact {
    std::vector<std::size_t> points;
    std::vector<Rational> sigma;
  };
  std::vector<Compact> compact;
  for (const auto& g : faces) {
    std::vector<Rational> sum(d, 0);
    for (const auto& fc : facets)
      if (std::includes(fc.points.begin(), fc.points.end(), g.begin(), g.end()))
        for (std::size_t c = 0; c < d; ++c) sum[c] += fc.normal[c];
    if (std::all_of(sum.begin(), sum.end(), [](auto& x) { return x > 0; }))
      compact.push_back({g, detail::primitive(sum)});
  }

  NewtonDiagram out;
  out.dim = d;
  for (const auto& c : compact) {
    const bool contained = std::any_of(compact.begin(), compact.end(), [&](const Compact& o) {
      return o.points.size() > c.points.size() &&
             std::includes(o.points.begin(), o.points.end(), c.points.begin(), c.points.end());
    });
    if (contained) continue;
    NewtonFace face;
    face.weight.sigma = c.sigma;
    face.weight.degree = dot(pts[c.points.front()], c.sigma);
    for (std::size_t i : c.points) face.vertices.push_back(pts[i]);
    std::sort(face.vertices.begin(), face.vertices.end(), std::greater<>());
    face.face_poly = weighted_part(f, face.weight);
    face.remainder = f - face.face_poly;
    out.faces.push_back(std::move(face));
  }
  std::sort(out.faces.begin(), out.faces.end(),
            [](const NewtonFace& a, const NewtonFace& b) { return a.weight.sigma < b.weight.sigma; });
  return out;
}

/// f = f_Γ + R_Γ for a face of f's diagram. Throws if Γ is not a supporting
/// face of f (a vertex outside the support, or a support point below m_Γ).
inline std::pair<Polynomial, Polynomial> face_polynomial(const Polynomial& f, const NewtonFace& face) {
  const auto& w = face.weight;
  if (w.dim() != f.dim()) throw DomainError("face dimension does not match polynomial");
  for (const auto& s : w.sigma)
    if (s <= 0) throw DomainError("face weights must be positive");
  for (const auto& v : face.vertices) {
    if (f.coefficient(v) == 0) throw DomainError("face vertex is not in the support of f");
    if (w.weighted_degree(v) != w.degree) throw DomainError("face vertex off the weighted hyperplane");
  }
  for (const auto& [e, c] : f.terms())
    if (w.weighted_degree(e) < w.degree) throw DomainError("face does not belong to f: support point below m");
  Polynomial fg = weighted_part(f, w);
  return {fg, f - fg};
}

/// Smallest weighted degree among the monomials of p (m' for R_Γ); nullopt
/// for the zero polynomial.
inline std::optional<Rational> weighted_order(const Polynomial& p, const WeightVector& w) {
  std::optional<Rational> best;
  for (const auto& [e, c] : p.terms()) {
    const Rational v = w.weighted_degree(e);
    if (!best || v < *best) best = v;
  }
  return best;
}

/// Euler field E = Σ σ_j x_j ∂_j applied to p (exact).
inline Polynomial euler_apply(const WeightVector& w, const Polynomial& p) {
  Polynomial out(p.dim());
  for (const auto& [e, c] : p.terms()) out.add_term(e, c * w.weighted_degree(e));
  return out;
}

/// S_{t,σ}(x) = (t^{σ_1} x_1, ..., t^{σ_{n+1}} x_{n+1}).
inline std::vector<double> scaling_apply(const WeightVector& w, double t, std::span<const double> x) {
  if (!(t > 0)) throw DomainError("scaling parameter must be positive");
  if (x.size() != w.dim()) throw DomainError("point dimension does not match weights");
  std::vector<double> out(x.begin(), x.end());
  for (std::size_t j = 0; j < out.size(); ++j) out[j] *= std::pow(t, to_double(w.sigma[j]));
  return out;
}

/// φ_Γ(x) = Σ_j x_j^{2m/σ_j}, quasihomogeneous of type (σ, 2m). When some
/// 2m/σ_j is not an even integer, m is replaced by the least multiple L·m
/// that makes every exponent even; level sets are unchanged.
struct BrieskornFunction {
  Polynomial phi;
  std::vector<int> exponents;
  Rational degree;  // 2·L·m, the quasihomogeneous degree of phi
  Rational multiple;  // L

  double operator()(std::span<const double> x) const { return phi.evaluate(x); }
};

inline BrieskornFunction phi_gamma(const WeightVector& w) {
  const std::size_t d = w.dim();
  if (d == 0) throw DomainError("empty weight vector");
  for (const auto& s : w.sigma)
    if (s <= 0) throw DomainError("weights must be positive");
  // 2Lm/σ_j ∈ 2Z for all j ⇔ L·(m/σ_j) ∈ Z ⇔ L is a multiple of den(m/σ_j).
  Integer L = 1;
  for (const auto& s : w.sigma) L = lcm(L, denominator(Rational(w.degree / s)));
  BrieskornFunction out;
  out.multiple = Rational(L);
  out.degree = 2 * out.multiple * w.degree;
  out.phi = Polynomial(d);
  for (std::size_t j = 0; j < d; ++j) {
    const Rational ex = out.degree / w.sigma[j];
    if (!is_integer(ex) || numerator(ex) % 2 != 0)
      throw DomainError("non-integer Brieskorn exponent after normalization");
    const int k = numerator(ex).convert_to<int>();
    out.exponents.push_back(k);
    std::vector<int> e(d, 0);
    e[j] = k;
    out.phi.add_term(ExponentVector(std::move(e)), 1);
  }
  return out;
}

inline BrieskornFunction phi_gamma(const NewtonFace& face) { return phi_gamma(face.weight); }

/// Increasing enumeration of nonnegative integer combinations of the
/// generators up to `cutoff`.
class ExponentLattice {
 public:
  ExponentLattice(std::vector<Rational> generators, Rational cutoff)
      : generators_(std::move(generators)), cutoff_(std::move(cutoff)) {
    if (cutoff_ <= 0) throw DomainError("lattice cutoff must be positive");
    for (const auto& g : generators_)
      if (g <= 0) throw DomainError("lattice generators must be positive");
    std::set<Rational> found{Rational(0)};
    std::vector<Rational> frontier{Rational(0)};
    while (!frontier.empty()) {
      std::vector<Rational> next;
      for (const auto& v : frontier)
        for (const auto& g : generators_) {
          Rational w = v + g;
          if (w <= cutoff_ && found.insert(w).second) next.push_back(std::move(w));
        }
      frontier = std::move(next);
    }
    sequence_.assign(found.begin(), found.end());
  }

  const std::vector<Rational>& generators() const noexcept { return generators_; }
  const std::vector<Rational>& sequence() const noexcept { return sequence_; }
  const Rational& cutoff() const noexcept { return cutoff_; }

  bool contains(const Rational& q) const {
    return std::binary_search(sequence_.begin(), sequence_.end(), q);
  }

 private:
  std::vector<Rational> generators_;
  Rational cutoff_;
  std::vector<Rational> sequence_;
};

inline ExponentLattice exponent_lattice(const std::vector<Rational>& generators, const Rational& cutoff) {
  return ExponentLattice(generators, cutoff);
}

/// Lattice generated by the normalized weights ν = σ / min σ.
inline ExponentLattice exponent_lattice(const WeightVector& w, const Rational& cutoff) {
  return ExponentLattice(w.normalized().sigma, cutoff);
}

inline void to_json(nlohmann::json& j, const WeightVector& w) {
  auto s = nlohmann::json::array();
  for (const auto& v : w.sigma) s.push_back(format_rational(v));
  j = {{"sigma", s}, {"m", format_rational(w.degree)}};
}

inline void from_json(const nlohmann::json& j, WeightVector& w) {
  w.sigma.clear();
  for (const auto& s : j.at("sigma")) w.sigma.push_back(parse_rational(s.get<std::string>()));
  w.degree = parse_rational(j.at("m").get<std::string>());
}

inline void to_json(nlohmann::json& j, const NewtonFace& f) {
  auto verts = nlohmann::json::array();
  for (const auto& v : f.vertices) verts.push_back(v.entries());
  j = nlohmann::json(f.weight);
  j["vertices"] = verts;
  j["face_poly"] = f.face_poly;
  j["face_poly_text"] = f.face_poly.to_string();
  j["remainder"] = f.remainder;
  j["remainder_text"] = f.remainder.to_string();
}

inline void from_json(const nlohmann::json& j, NewtonFace& f) {
  f.weight = j.get<WeightVector>();
  f.vertices.clear();
  for (const auto& v : j.at("vertices")) f.vertices.emplace_back(v.get<std::vector<int>>());
  f.face_poly = j.at("face_poly").get<Polynomial>();
  f.remainder = j.at("remainder").get<Polynomial>();
}

inline void to_json(nlohmann::json& j, const NewtonDiagram& d) {
  j = {{"dim", d.dim}, {"faces", d.faces}};
}

inline void from_json(const nlohmann::json& j, NewtonDiagram& d) {
  d.dim = j.at("dim").get<std::size_t>();
  d.faces = j.at("faces").get<std::vector<NewtonFace>>();
}

}  // namespace ahis
