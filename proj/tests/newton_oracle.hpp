#pragma once

// Brute-force reference for the maximal compact faces of a Newton polyhedron.
// Normals come from cofactor expansions over every choice of support points
// and coordinate axes; faces are intersections of the supporting hyperplanes'
// contact sets; compactness is tested by looking for a recession axis.

#include <algorithm>
#include <set>
#include <vector>

#include "ahis/poly.hpp"

namespace oracle {

using ahis::Rational;
using Vec = std::vector<Rational>;

inline Rational det(std::vector<Vec> m) {
  const std::size_t n = m.size();
  if (n == 0) return 1;
  if (n == 1) return m[0][0];
  Rational s = 0;
  for (std::size_t c = 0; c < n; ++c) {
    if (m[0][c] == 0) continue;
    std::vector<Vec> minor;
    for (std::size_t r = 1; r < n; ++r) {
      Vec row;
      for (std::size_t k = 0; k < n; ++k)
        if (k != c) row.push_back(m[r][k]);
      minor.push_back(row);
    }
    const Rational term = m[0][c] * det(minor);
    s += (c % 2 == 0) ? term : Rational(-term);
  }
  return s;
}

/// Generalized cross product of d-1 vectors in Q^d.
inline Vec cofactor_normal(const std::vector<Vec>& rows, std::size_t d) {
  Vec out(d);
  for (std::size_t c = 0; c < d; ++c) {
    std::vector<Vec> m;
    for (const auto& r : rows) {
      Vec row;
      for (std::size_t k = 0; k < d; ++k)
        if (k != c) row.push_back(r[k]);
      m.push_back(row);
    }
    const Rational v = det(m);
    out[c] = (c % 2 == 0) ? v : Rational(-v);
  }
  return out;
}

inline void subsets(std::size_t n, std::size_t k, std::vector<std::size_t>& cur, std::size_t start,
                    std::vector<std::vector<std::size_t>>& out) {
  if (cur.size() == k) {
    out.push_back(cur);
    return;
  }
  for (std::size_t i = start; i < n; ++i) {
    cur.push_back(i);
    subsets(n, k, cur, i + 1, out);
    cur.pop_back();
  }
}

inline std::vector<std::vector<std::size_t>> subsets(std::size_t n, std::size_t k) {
  std::vector<std::vector<std::size_t>> out;
  std::vector<std::size_t> cur;
  subsets(n, k, cur, 0, out);
  return out;
}

struct Halfspace {
  Vec normal;
  std::set<std::vector<int>> contact;
};

/// Vertex sets (as exponent lists) of the maximal compact faces.
inline std::set<std::set<std::vector<int>>> maximal_compact_faces(const ahis::Polynomial& f) {
  const std::size_t d = f.dim();
  std::vector<Vec> pts;
  std::vector<std::vector<int>> raw;
  for (const auto& [e, c] : f.terms()) {
    raw.push_back(e.entries());
    Vec v;
    for (int x : e.entries()) v.emplace_back(x);
    pts.push_back(v);
  }
  std::vector<Halfspace> hs;
  for (std::size_t k = 1; k <= std::min(d, pts.size()); ++k)
    for (const auto& chosen : subsets(pts.size(), k))
      for (const auto& axes : subsets(d, d - k)) {
        std::vector<Vec> rows;
        for (std::size_t i = 1; i < chosen.size(); ++i) {
          Vec r(d);
          for (std::size_t c = 0; c < d; ++c) r[c] = pts[chosen[i]][c] - pts[chosen[0]][c];
          rows.push_back(r);
        }
        for (auto a : axes) {
          Vec r(d, 0);
          r[a] = 1;
          rows.push_back(r);
        }
        Vec nrm = d == 1 ? Vec{1} : cofactor_normal(rows, d);
        if (std::all_of(nrm.begin(), nrm.end(), [](auto& x) { return x == 0; })) continue;
        if (std::all_of(nrm.begin(), nrm.end(), [](auto& x) { return x <= 0; }))
          for (auto& x : nrm) x = -x;
        if (std::any_of(nrm.begin(), nrm.end(), [](auto& x) { return x < 0; })) continue;
        auto val = [&](const Vec& p) {
          Rational s = 0;
          for (std::size_t c = 0; c < d; ++c) s += nrm[c] * p[c];
          return s;
        };
        Rational lo = val(pts[chosen[0]]);
        bool ok = true;
        for (const auto& p : pts) ok = ok && val(p) >= lo;
        if (!ok) continue;
        Rational total = 0;
        for (const auto& x : nrm) total += x;
        for (auto& x : nrm) x /= total;
        lo /= total;
        if (std::any_of(hs.begin(), hs.end(), [&](const Halfspace& o) { return o.normal == nrm; })) continue;
        Halfspace h{nrm, {}};
        for (std::size_t i = 0; i < pts.size(); ++i)
          if (val(pts[i]) == lo) h.contact.insert(raw[i]);
        hs.push_back(h);
      }

  // Every face is the intersection of the facets through it; d facets suffice.
  std::set<std::set<std::vector<int>>> faces;
  std::vector<std::size_t> cur;
  for (std::size_t k = 1; k <= std::min(d, hs.size()); ++k)
    for (const auto& combo : subsets(hs.size(), k)) {
      std::set<std::vector<int>> g = hs[combo[0]].contact;
      for (std::size_t i = 1; i < combo.size(); ++i) {
        std::set<std::vector<int>> t;
        std::set_intersection(g.begin(), g.end(), hs[combo[i]].contact.begin(), hs[combo[i]].contact.end(),
                              std::inserter(t, t.begin()));
        g = t;
      }
      if (!g.empty()) faces.insert(g);
    }

  std::vector<std::set<std::vector<int>>> compact;
  for (const auto& g : faces) {
    bool bounded = true;
    for (std::size_t j = 0; j < d && bounded; ++j) {
      // Axis j is a recession direction of the face iff every supporting
      // hyperplane through g is parallel to it.
      bool recedes = true;
      for (const auto& h : hs)
        if (std::includes(h.contact.begin(), h.contact.end(), g.begin(), g.end()) && h.normal[j] != 0)
          recedes = false;
      bounded = !recedes;
    }
    if (bounded) compact.push_back(g);
  }
  std::set<std::set<std::vector<int>>> out;
  for (const auto& g : compact) {
    bool maximal = true;
    for (const auto& o : compact)
      if (o.size() > g.size() && std::includes(o.begin(), o.end(), g.begin(), g.end())) maximal = false;
    if (maximal) out.insert(g);
  }
  return out;
}

}  // namespace oracle
