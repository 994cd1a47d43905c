#pragma once

// Power-log expansions of the heat trace: predicted exponents, dictionary
// fitting, the index calculus of resolvent factors and the projectors of the
// singular asymptotics lemma.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include <Eigen/Dense>
#include <boost/math/tools/minima.hpp>
#include <json.hpp>

#include "ahis/error.hpp"
#include "ahis/newton.hpp"
#include "ahis/rational.hpp"
#include "ahis/spectral.hpp"

namespace ahis {

// ---------------------------------------------------------------------------
// Multiplicity functions and projectors

/// S: exponent ↦ multiplicity (log-degree budget + 1).
using MultiplicityFunction = std::map<Rational, unsigned>;

inline unsigned degree(const MultiplicityFunction& S) {
  unsigned m = 0;
  for (const auto& [z, k] : S) m += k;
  return m;
}

/// c x^w log^j x
struct ExpansionTerm {
  Rational exponent;
  unsigned log_power = 0;
  double coeff = 0;
  friend bool operator==(const ExpansionTerm&, const ExpansionTerm&) = default;
};

using Expansion = std::vector<ExpansionTerm>;

namespace detail {

inline Expansion normalize_expansion(const Expansion& e) {
  std::map<std::pair<Rational, unsigned>, double> acc;
  for (const auto& t : e) acc[{t.exponent, t.log_power}] += t.coeff;
  Expansion out;
  for (const auto& [k, c] : acc)
    if (c != 0) out.push_back({k.first, k.second, c});
  return out;
}

/// (x∂_x − z) applied termwise.
inline Expansion apply_euler_shift(const Expansion& e, const Rational& z) {
  Expansion out;
  for (const auto& t : e) {
    const Rational w = t.exponent - z;
    if (w != 0) out.push_back({t.exponent, t.log_power, to_double(w) * t.coeff});
    if (t.log_power > 0) out.push_back({t.exponent, t.log_power - 1, t.log_power * t.coeff});
  }
  return normalize_expansion(out);
}

}  // namespace detail

/// P_z[S] = Π_{z′ ≤ z, z′ ≠ z} (x∂_x − z′)^{S(z′)} applied to a finite expansion.
inline Expansion sal_projector_apply(const MultiplicityFunction& S, const Rational& z, const Expansion& e) {
  Expansion out = detail::normalize_expansion(e);
  for (const auto& [zp, k] : S) {
    if (zp > z) break;
    if (zp == z) continue;
    for (unsigned i = 0; i < k; ++i) out = detail::apply_euler_shift(out, zp);
  }
  return out;
}

/// Multiplicity function of the Mellin-convolution of Γ^{S₁} and Γ^{S₂}.
inline MultiplicityFunction sal_convolution_exponents(const MultiplicityFunction& S1, const MultiplicityFunction& S2) {
  MultiplicityFunction out = S1;
  for (const auto& [z, k] : S2) out[z] += k;
  return out;
}

/// Largest multiplicity function such that every term of `e` lies in Γ^S:
/// S(w) = 1 + highest log power at w.
inline MultiplicityFunction multiplicity_of(const Expansion& e) {
  MultiplicityFunction S;
  for (const auto& t : e) S[t.exponent] = std::max(S[t.exponent], t.log_power + 1);
  return S;
}

inline double evaluate(const Expansion& e, double x) {
  double s = 0;
  const double lx = std::log(x);
  for (const auto& t : e) s += t.coeff * std::pow(x, to_double(t.exponent)) * std::pow(lx, static_cast<double>(t.log_power));
  return s;
}

// ---------------------------------------------------------------------------
// Resolvent factors

/// r^β ∂_θ^γ ∂_r^d R_α(λ)^m
struct ResolventFactor {
  int m = 1;
  Rational beta = 0;
  std::vector<int> gamma;
  int d = 0;
  Rational alpha = 2;
};

struct ResolventIndex {
  Rational index;
  std::optional<Rational> degree_plus;
};

inline ResolventIndex resolvent_index(const ResolventFactor& F) {
  if (F.alpha <= 0) throw DomainError("resolvent index needs alpha > 0");
  ResolventIndex out;
  if (F.beta <= 0) {
    out.index = Rational(F.m) - F.beta / F.alpha + Rational(F.d, 2);
  } else {
    out.index = Rational(F.m) - Rational(F.d, 2);
    out.degree_plus = F.beta - Rational(F.d) + 1;
  }
  return out;
}

/// β ≥ 0 and β/α + d/2 ≤ 1.
inline bool in_bounded_family(const ResolventFactor& F) {
  return F.beta >= 0 && F.beta / F.alpha + Rational(F.d, 2) <= 1;
}

/// Predicted |λ|-exponent of ‖r^{−β} Δ_k ∂_r^d R_α(λ)‖: −1 + β/α + d/2.
inline Rational resolvent_decay_exponent(const Rational& beta, int d, const Rational& alpha) {
  if (alpha <= 0) throw DomainError("resolvent decay needs alpha > 0");
  return Rational(-1) + beta / alpha + Rational(d, 2);
}

struct NeumannTermExponent {
  Rational kappa;           // 1 − β/α, β = max μ
  Rational lambda_decay;    // ‖Π^{(j)}‖ ≤ C|λ|^{−lambda_decay}
  Rational bound_exponent;  // exponent of |λ| in the trace-class estimate
};

/// Decay bookkeeping for the j-th Neumann term with p = 2ℓ λ-derivatives in
/// dimension n.
inline NeumannTermExponent neumann_term_exponent(int j, int p, const std::vector<Rational>& mu, const Rational& alpha,
                                                 int n = 2) {
  if (alpha <= 0) throw DomainError("alpha must be positive");
  if (j < 0 || p < 0) throw DomainError("j and p must be non-negative");
  NeumannTermExponent out;
  Rational beta = 0;
  for (const auto& m : mu) beta = std::max(beta, m);
  out.kappa = 1 - beta / alpha;
  if (j > 0 && out.kappa <= 0)
    throw DomainError("perturbation is not subordinate: kappa = " + format_rational(out.kappa));
  out.lambda_decay = Rational(p + 1) + (j > 0 ? j * out.kappa : Rational(0));
  const Rational ell = Rational(p, 2);
  out.bound_exponent = -(2 * ell + j - Rational(n + 5, 2)) + 1 / alpha;
  return out;
}

// ---------------------------------------------------------------------------
// Predicted exponents

struct PredictedExponent {
  Rational exponent;
  unsigned log_power = 0;
  unsigned representations = 0;
  bool weyl = false;
  bool singular = false;
};

struct ExponentSet {
  std::vector<PredictedExponent> entries;  // increasing
  Rational cutoff;
  int rule_version = 1;

  bool empty() const { return entries.empty(); }

  /// Distance from x to the nearest predicted exponent.
  double distance(double x) const {
    double d = std::numeric_limits<double>::infinity();
    for (const auto& e : entries) d = std::min(d, std::fabs(to_double(e.exponent) - x));
    return d;
  }

  const PredictedExponent* find(const Rational& z) const {
    for (const auto& e : entries)
      if (e.exponent == z) return &e;
    return nullptr;
  }
};

struct ExponentParams {
  std::size_t n = 2;                  // dimension of the hypersurface
  std::vector<Rational> alpha;        // model exponent per face
  Rational cutoff = 1;                // exponents ≤ cutoff
  unsigned ell_max = 2;               // ℓ = 0..ell_max
  std::vector<unsigned> p_values{2};  // λ-derivative counts
  std::vector<unsigned> j_values{0};  // Neumann orders
  std::vector<Rational> mu;           // perturbation exponents
};

/// Supports S₁ (ℓα and non-negative combinations of μ) and S₂
/// (ℓ((3(p−1)+2j)α/2 − 1) together with ℓ((3(p−1)/2 + j)α − 1)).
inline std::pair<MultiplicityFunction, MultiplicityFunction> sal_supports(const Rational& alpha, const ExponentParams& P,
                                                                         const Rational& z_max) {
  MultiplicityFunction S1, S2;
  for (unsigned l = 0; l <= P.ell_max; ++l) {
    const Rational L(l);
    if (L * alpha <= z_max) S1[L * alpha] = 1;
    for (unsigned p : P.p_values)
      for (unsigned j : P.j_values) {
        const Rational a = L * ((Rational(3 * (static_cast<int>(p) - 1)) + 2 * Rational(j)) * alpha / 2 - 1);
        const Rational b = L * ((Rational(3 * (static_cast<int>(p) - 1), 2) + Rational(j)) * alpha - 1);
        if (a >= 0 && a <= z_max) S2[a] = 1;
        if (b >= 0 && b <= z_max) S2[b] = 1;
      }
  }
  // Non-negative integer combinations of μ.
  std::set<Rational> combos{Rational(0)};
  for (const auto& m : P.mu) {
    if (m <= 0) continue;
    std::set<Rational> next = combos;
    for (const auto& c : combos)
      for (Rational s = c + m; s <= z_max; s += m) next.insert(s);
    combos = std::move(next);
  }
  for (const auto& c : combos) S1[c] = 1;
  return {S1, S2};
}

/// Weyl ladder {−n/2 + j} merged with the singular families
/// (z + 1 + s)/α − 1/2, z ∈ supp S₁ ∪ supp S₂, s on the ν-lattice of each
/// face. Log power at e is (number of representations − 1), capped by the
/// summed multiplicities of the contributing supports.
inline ExponentSet predicted_exponents(const NewtonDiagram& diagram, const ExponentParams& P) {
  const Rational lead = -Rational(static_cast<int>(P.n), 2);
  if (P.cutoff <= lead) throw DomainError("exponent cutoff must exceed the leading exponent -n/2");
  if (!diagram.faces.empty() && P.alpha.size() != diagram.faces.size())
    throw DomainError("predicted_exponents needs one model exponent per face");
  struct Acc {
    unsigned reps = 0, cap = 0;
    bool weyl = false, singular = false;
  };
  std::map<Rational, Acc> acc;
  for (Rational e = lead; e <= P.cutoff; e += 1) {
    auto& a = acc[e];
    ++a.reps;
    ++a.cap;
    a.weyl = true;
  }
  for (std::size_t f = 0; f < diagram.faces.size(); ++f) {
    const Rational& alpha = P.alpha[f];
    if (alpha <= 0) throw DomainError("model exponent must be positive");
    Integer den = 1;
    for (const auto& v : diagram.faces[f].weight.normalized().sigma) den = lcm(den, denominator(v));
    const Rational step(1, den);
    // (z + 1 + s)/α − 1/2 ≤ cutoff  ⇔  z + s ≤ (cutoff + 1/2)α − 1
    const Rational z_max = (P.cutoff + Rational(1, 2)) * alpha - 1;
    if (z_max < 0) continue;
    const auto [S1, S2] = sal_supports(alpha, P, z_max);
    const auto S = sal_convolution_exponents(S1, S2);
    for (const auto& [z, k] : S)
      for (Rational s = 0; z + s <= z_max; s += step) {
        auto& a = acc[(z + 1 + s) / alpha - Rational(1, 2)];
        ++a.reps;
        a.cap += k;
        a.singular = true;
      }
  }
  ExponentSet out;
  out.cutoff = P.cutoff;
  for (const auto& [e, a] : acc) out.entries.push_back({e, std::min(a.reps - 1, a.cap), a.reps, a.weyl, a.singular});
  return out;
}

// ---------------------------------------------------------------------------
// Fitting

struct FitTerm {
  Rational exponent;
  double exponent_fitted = 0;  // equals the exponent unless refined
  unsigned log_power = 0;
  double coeff = 0;
  double uncertainty = 0;
};

struct FitOptions {
  bool relative_weights = true;
  double prune_sigma = 3;     // drop terms with |c| < prune_sigma·σ_c
  double prune_floor = 1e-9;  // or with max |c φ| below this fraction of max |y|
  bool prune = true;
  double max_condition = 1e14;
  bool half_window = true;
};

struct ExpansionFit {
  std::vector<FitTerm> terms;
  double residual = 0;           // sup |y − model|
  double relative_residual = 0;  // sup |y − model| / |y|
  double condition_number = 0;
  double t_min = 0, t_max = 0;
  ExponentSet dictionary;
  std::vector<std::size_t> pruned;  // dictionary columns removed
  double half_window_coeff_change = 0;
  double half_window_exponent_change = 0;
  bool half_window_ok = true;

  const FitTerm* find(const Rational& z, unsigned log_power = 0) const {
    for (const auto& t : terms)
      if (t.exponent == z && t.log_power == log_power) return &t;
    return nullptr;
  }

  double operator()(double t) const {
    double s = 0;
    for (const auto& term : terms)
      s += term.coeff * std::pow(t, term.exponent_fitted) * std::pow(std::log(t), static_cast<double>(term.log_power));
    return s;
  }

  Expansion expansion() const {
    Expansion e;
    for (const auto& t : terms) e.push_back({t.exponent, t.log_power, t.coeff});
    return e;
  }
};

namespace detail {

struct Column {
  Rational z;
  double zf;
  unsigned log;
};

inline double basis(const Column& c, double t) {
  return std::pow(t, c.zf) * std::pow(std::log(t), static_cast<double>(c.log));
}

struct LsqResult {
  Eigen::VectorXd coeff, sigma;
  double cond = 0, rss = 0;
};

/// Weighted least squares with column scaling; σ from the residual variance.
inline LsqResult weighted_lsq(const std::vector<double>& t, const std::vector<double>& y, const std::vector<double>& wt,
                              const std::vector<Column>& cols) {
  const long m = static_cast<long>(t.size()), p = static_cast<long>(cols.size());
  Eigen::MatrixXd A(m, p);
  Eigen::VectorXd b(m);
  for (long i = 0; i < m; ++i) {
    b(i) = y[static_cast<std::size_t>(i)] * wt[static_cast<std::size_t>(i)];
    for (long j = 0; j < p; ++j) A(i, j) = basis(cols[static_cast<std::size_t>(j)], t[static_cast<std::size_t>(i)]) * wt[static_cast<std::size_t>(i)];
  }
  Eigen::VectorXd scale(p);
  for (long j = 0; j < p; ++j) {
    scale(j) = A.col(j).norm();
    if (scale(j) == 0) throw NumericalError("dictionary column vanishes on the window");
    A.col(j) /= scale(j);
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  LsqResult out;
  out.cond = sv(0) / sv(p - 1);
  Eigen::VectorXd x = svd.solve(b);
  const Eigen::VectorXd res = A * x - b;
  out.rss = res.squaredNorm();
  const double var = m > p ? out.rss / static_cast<double>(m - p) : 0.0;
  Eigen::VectorXd inv2 = sv.array().inverse().square();
  const Eigen::MatrixXd& V = svd.matrixV();
  out.sigma.resize(p);
  for (long j = 0; j < p; ++j) out.sigma(j) = std::sqrt(var * (V.row(j).array().square() * inv2.transpose().array()).sum()) / scale(j);
  out.coeff = x.array() / scale.array();
  return out;
}

inline std::vector<double> fit_weights(const std::vector<double>& y, bool relative) {
  std::vector<double> w(y.size(), 1.0);
  if (relative)
    for (std::size_t i = 0; i < y.size(); ++i) w[i] = y[i] != 0 ? 1 / std::fabs(y[i]) : 1.0;
  return w;
}

inline void finish_fit(ExpansionFit& fit, const std::vector<double>& t, const std::vector<double>& y) {
  fit.residual = fit.relative_residual = 0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    const double r = std::fabs(y[i] - fit(t[i]));
    fit.residual = std::max(fit.residual, r);
    if (y[i] != 0) fit.relative_residual = std::max(fit.relative_residual, r / std::fabs(y[i]));
  }
  fit.t_min = *std::min_element(t.begin(), t.end());
  fit.t_max = *std::max_element(t.begin(), t.end());
}

inline ExpansionFit fit_columns(const std::vector<double>& t, const std::vector<double>& y, std::vector<Column> cols,
                                const FitOptions& opts, std::vector<std::size_t>* kept_index = nullptr) {
  if (t.size() != y.size()) throw DomainError("sample and time grids differ in length");
  if (cols.empty()) throw DomainError("empty fit dictionary");
  if (t.size() < 3 * cols.size())
    throw DomainError("fit needs at least 3 samples per dictionary term (" + std::to_string(t.size()) + " samples, " +
                      std::to_string(cols.size()) + " terms)");
  const auto wt = fit_weights(y, opts.relative_weights);
  double ymax = 0;
  for (double v : y) ymax = std::max(ymax, std::fabs(v));
  std::vector<std::size_t> idx(cols.size());
  for (std::size_t j = 0; j < idx.size(); ++j) idx[j] = j;
  ExpansionFit fit;
  LsqResult ls;
  for (;;) {
    ls = weighted_lsq(t, y, wt, cols);
    if (ls.cond > opts.max_condition)
      throw NumericalError("ill-conditioned fit dictionary (condition number " + std::to_string(ls.cond) + ")");
    if (!opts.prune || cols.size() == 1) break;
    // Weakest term by significance, then by size on the window.
    std::optional<std::size_t> drop;
    double worst = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < cols.size(); ++j) {
      double size = 0;
      for (double tv : t) size = std::max(size, std::fabs(ls.coeff(static_cast<long>(j)) * basis(cols[j], tv)));
      const double sig = ls.sigma(static_cast<long>(j));
      const double tstat = sig > 0 ? std::fabs(ls.coeff(static_cast<long>(j))) / sig : std::numeric_limits<double>::infinity();
      const bool weak = tstat < opts.prune_sigma || size < opts.prune_floor * ymax;
      const double score = std::min(tstat, size / (opts.prune_floor * ymax));
      if (weak && score < worst) {
        worst = score;
        drop = j;
      }
    }
    if (!drop) break;
    fit.pruned.push_back(idx[*drop]);
    cols.erase(cols.begin() + static_cast<long>(*drop));
    idx.erase(idx.begin() + static_cast<long>(*drop));
  }
  fit.condition_number = ls.cond;
  for (std::size_t j = 0; j < cols.size(); ++j)
    fit.terms.push_back({cols[j].z, cols[j].zf, cols[j].log, ls.coeff(static_cast<long>(j)), ls.sigma(static_cast<long>(j))});
  finish_fit(fit, t, y);
  if (kept_index) *kept_index = idx;
  return fit;
}

inline std::pair<std::vector<double>, std::vector<double>> lower_half(const std::vector<double>& t, const std::vector<double>& y) {
  std::vector<std::size_t> order(t.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return t[a] < t[b]; });
  std::vector<double> th, yh;
  for (std::size_t i = 0; i < (order.size() + 1) / 2; ++i) {
    th.push_back(t[order[i]]);
    yh.push_back(y[order[i]]);
  }
  return {th, yh};
}

/// Relative change of the dominant coefficients (those contributing at least
/// 1e-3 of the signal somewhere on the window).
inline double coefficient_change(const ExpansionFit& a, const ExpansionFit& b, const std::vector<double>& t, double ymax) {
  double ch = 0;
  for (const auto& ta : a.terms) {
    double size = 0;
    for (double tv : t) size = std::max(size, std::fabs(ta.coeff * std::pow(tv, ta.exponent_fitted) * std::pow(std::log(tv), static_cast<double>(ta.log_power))));
    if (size < 1e-3 * ymax) continue;
    const FitTerm* tb = b.find(ta.exponent, ta.log_power);
    if (!tb) return std::numeric_limits<double>::infinity();
    ch = std::max(ch, std::fabs(tb->coeff - ta.coeff) / std::fabs(ta.coeff));
  }
  return ch;
}

}  // namespace detail

/// Least-squares fit of y(t) in the dictionary {t^z log^i t : z in the set,
/// i ≤ log power}, with backward pruning and a half-window refit.
inline ExpansionFit fit_power_log(const std::vector<double>& t, const std::vector<double>& y, const ExponentSet& dictionary,
                                  const FitOptions& opts = {}) {
  std::vector<detail::Column> cols;
  for (const auto& e : dictionary.entries)
    for (unsigned i = 0; i <= e.log_power; ++i) cols.push_back({e.exponent, to_double(e.exponent), i});
  std::vector<std::size_t> kept;
  auto fit = detail::fit_columns(t, y, cols, opts, &kept);
  fit.dictionary = dictionary;
  if (opts.half_window) {
    const auto [th, yh] = detail::lower_half(t, y);
    std::vector<detail::Column> kc;
    for (std::size_t k : kept) kc.push_back(cols[k]);
    auto o2 = opts;
    o2.prune = false;
    o2.half_window = false;
    if (th.size() >= 3 * kc.size()) {
      const auto half = detail::fit_columns(th, yh, kc, o2);
      double ymax = 0;
      for (double v : y) ymax = std::max(ymax, std::fabs(v));
      fit.half_window_coeff_change = detail::coefficient_change(fit, half, t, ymax);
      fit.half_window_ok = fit.half_window_coeff_change <= 0.02;
    }
  }
  return fit;
}

inline ExpansionFit fit_power_log(const HeatTraceSamples& S, const ExponentSet& dictionary, const FitOptions& opts = {}) {
  return fit_power_log(S.t, S.values, dictionary, opts);
}

/// Treats the exponents of `fit` as free parameters (variable projection:
/// coefficients by least squares, exponents by coordinate-wise Brent
/// minimization of the weighted residual), starting from the dictionary values.
inline ExpansionFit refine_exponents(const std::vector<double>& t, const std::vector<double>& y, const ExpansionFit& fit,
                                     double radius = 0.05, int sweeps = 6, const FitOptions& opts = {}) {
  std::vector<detail::Column> cols;
  for (const auto& term : fit.terms) cols.push_back({term.exponent, term.exponent_fitted, term.log_power});
  const auto wt = detail::fit_weights(y, opts.relative_weights);
  auto objective = [&](const std::vector<detail::Column>& c) { return detail::weighted_lsq(t, y, wt, c).rss; };
  for (int s = 0; s < sweeps; ++s)
    for (std::size_t j = 0; j < cols.size(); ++j) {
      const double z0 = to_double(cols[j].z);
      auto f = [&](double z) {
        auto c = cols;
        c[j].zf = z;
        return objective(c);
      };
      const auto [zbest, val] = boost::math::tools::brent_find_minima(f, z0 - radius, z0 + radius, 52);
      (void)val;
      cols[j].zf = zbest;
    }
  auto o2 = opts;
  o2.prune = false;
  auto out = detail::fit_columns(t, y, cols, o2);
  out.dictionary = fit.dictionary;
  out.pruned = fit.pruned;
  if (opts.half_window) {
    const auto [th, yh] = detail::lower_half(t, y);
    if (th.size() >= 3 * cols.size()) {
      auto o3 = o2;
      o3.half_window = false;
      ExpansionFit base = out;
      const auto half = refine_exponents(th, yh, base, radius, sweeps, o3);
      double ymax = 0, dz = 0;
      for (double v : y) ymax = std::max(ymax, std::fabs(v));
      for (std::size_t j = 0; j < out.terms.size(); ++j) dz = std::max(dz, std::fabs(out.terms[j].exponent_fitted - half.terms[j].exponent_fitted));
      out.half_window_exponent_change = dz;
      out.half_window_coeff_change = detail::coefficient_change(out, half, t, ymax);
      out.half_window_ok = dz <= 0.02 && out.half_window_coeff_change <= 0.02;
    }
  }
  return out;
}

struct SingleExponentFit {
  double exponent = 0, coeff = 0, offset = 0, residual = 0;
};

/// y ≈ c t^z + d with z free in [lo, hi].
inline SingleExponentFit fit_single_exponent(const std::vector<double>& t, const std::vector<double>& y, double lo, double hi,
                                             bool with_offset = true) {
  if (t.size() < 4) throw DomainError("exponent fit needs at least four samples");
  const std::vector<double> wt(t.size(), 1.0);
  auto cols_for = [&](double z) {
    std::vector<detail::Column> c{{Rational(0), z, 0}};
    if (with_offset) c.push_back({Rational(0), 0.0, 0});
    return c;
  };
  const auto [z, rss] = boost::math::tools::brent_find_minima(
      [&](double zz) { return detail::weighted_lsq(t, y, wt, cols_for(zz)).rss; }, lo, hi, 52);
  const auto ls = detail::weighted_lsq(t, y, wt, cols_for(z));
  SingleExponentFit out;
  out.exponent = z;
  out.coeff = ls.coeff(0);
  out.offset = with_offset ? ls.coeff(1) : 0.0;
  out.residual = std::sqrt(rss / static_cast<double>(t.size()));
  return out;
}

// ---------------------------------------------------------------------------
// Serialization

inline void to_json(nlohmann::json& j, const PredictedExponent& e) {
  j = {{"exponent", format_rational(e.exponent)},
       {"value", to_double(e.exponent)},
       {"log_power", e.log_power},
       {"representations", e.representations},
       {"weyl", e.weyl},
       {"singular", e.singular}};
}

inline void to_json(nlohmann::json& j, const ExponentSet& s) {
  j = {{"rule_version", s.rule_version}, {"cutoff", format_rational(s.cutoff)}, {"entries", s.entries}};
}

inline void to_json(nlohmann::json& j, const FitTerm& t) {
  j = {{"exponent", format_rational(t.exponent)},
       {"exponent_fitted", t.exponent_fitted},
       {"log_power", t.log_power},
       {"coeff", t.coeff},
       {"uncertainty", t.uncertainty}};
}

inline void to_json(nlohmann::json& j, const ExpansionFit& f) {
  j = {{"terms", f.terms},
       {"residual", f.residual},
       {"relative_residual", f.relative_residual},
       {"condition_number", f.condition_number},
       {"t_window", {f.t_min, f.t_max}},
       {"dictionary", f.dictionary},
       {"pruned", f.pruned},
       {"half_window_coeff_change", f.half_window_coeff_change},
       {"half_window_exponent_change", f.half_window_exponent_change},
       {"half_window_ok", f.half_window_ok}};
}

/// Columns: predicted, fitted, |Δ|, log power.
inline void write_exponent_table_csv(std::ostream& os, const ExpansionFit& f) {
  os << "predicted,fitted,abs_delta,log_power\n";
  char buf[128];
  for (const auto& t : f.terms) {
    const double p = to_double(t.exponent);
    std::snprintf(buf, sizeof buf, "%s,%.12g,%.3g,%u\n", format_rational(t.exponent).c_str(), t.exponent_fitted,
                  std::fabs(t.exponent_fitted - p), t.log_power);
    os << buf;
  }
}

}  // namespace ahis
