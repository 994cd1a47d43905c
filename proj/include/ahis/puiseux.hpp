#pragma once

// Truncated Puiseux functions Σ f_n(ξ) r^{q_n} on a cylinder [0,ε]×Ω with
// exact rational exponents, a majorant norm and a running tail certificate.
//
// The coefficient ring C is Polynomial (ξ in a cube [-δ,δ]^d) or
// FourierPolynomial (ξ an angle). It has to provide: dim(), is_zero(),
// is_constant(), constant_term(), constant(dim, q), +, -, *, scalar *,
// derivative(j), majorant(δ), evaluate(span) and kPeriodic.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "ahis/error.hpp"
#include "ahis/fourier.hpp"
#include "ahis/poly.hpp"
#include "ahis/rational.hpp"

namespace ahis {

struct CubeDomain {
  std::size_t eta_dim = 0;
  double delta = 1.0;
  double epsilon = 1.0;

  void validate() const {
    if (!(delta > 0)) throw DomainError("cube half-width must be positive");
    if (!(epsilon > 0)) throw DomainError("radial extent must be positive");
  }
  friend bool operator==(const CubeDomain&, const CubeDomain&) = default;
};

inline void to_json(nlohmann::json& j, const CubeDomain& d) {
  j = {{"eta_dim", d.eta_dim}, {"delta", d.delta}, {"epsilon", d.epsilon}};
}
inline void from_json(const nlohmann::json& j, CubeDomain& d) {
  d.eta_dim = j.at("eta_dim").get<std::size_t>();
  d.delta = j.at("delta").get<double>();
  d.epsilon = j.at("epsilon").get<double>();
}

inline constexpr std::int64_t kDefaultDenominatorCap = 512;

template <class C>
class PuiseuxSeries {
 public:
  using Coeff = C;
  using TermMap = std::map<Rational, C>;

  PuiseuxSeries() = default;
  PuiseuxSeries(CubeDomain dom, Rational qmax) : dom_(dom), qmax_(std::move(qmax)) { dom_.validate(); }

  static PuiseuxSeries constant(const CubeDomain& dom, const Rational& qmax, const Rational& c) {
    PuiseuxSeries s(dom, qmax);
    s.add_term(0, C::constant(dom.eta_dim, c));
    return s;
  }
  static PuiseuxSeries monomial(const CubeDomain& dom, const Rational& qmax, const Rational& q, const C& c) {
    PuiseuxSeries s(dom, qmax);
    s.add_term(q, c);
    return s;
  }
  /// c·r^q with a constant coefficient.
  static PuiseuxSeries r_power(const CubeDomain& dom, const Rational& qmax, const Rational& q,
                               const Rational& c = 1) {
    return monomial(dom, qmax, q, C::constant(dom.eta_dim, c));
  }

  const CubeDomain& domain() const noexcept { return dom_; }
  const Rational& truncation_order() const noexcept { return qmax_; }
  const TermMap& terms() const noexcept { return terms_; }
  bool is_zero() const noexcept { return terms_.empty(); }
  std::size_t size() const noexcept { return terms_.size(); }

  /// Certified bound on |true function − stored sum| over the cylinder,
  /// accumulated from every truncation performed so far.
  double tail_bound() const noexcept { return tail_; }
  void set_tail_bound(double t) { tail_ = t; }
  void add_tail(double t) { tail_ += t; }

  std::vector<Rational> exponents() const {
    std::vector<Rational> out;
    for (const auto& [q, c] : terms_) out.push_back(q);
    return out;
  }

  std::optional<Rational> leading_exponent() const {
    if (terms_.empty()) return std::nullopt;
    return terms_.begin()->first;
  }

  C coefficient(const Rational& q) const {
    auto it = terms_.find(q);
    return it == terms_.end() ? C(dom_.eta_dim) : it->second;
  }

  /// Adds c·r^q; terms beyond the truncation order go to the tail.
  void add_term(const Rational& q, const C& c) {
    if (c.dim() != dom_.eta_dim) throw DomainError("coefficient dimension does not match the domain");
    if (c.is_zero()) return;
    if (q > qmax_) {
      tail_ += c.majorant(dom_.delta) * std::pow(dom_.epsilon, to_double(q));
      return;
    }
    if (denominator(q) > kDefaultDenominatorCap)
      throw DomainError("exponent denominator exceeds the cap of " + std::to_string(kDefaultDenominatorCap));
    auto [it, inserted] = terms_.try_emplace(q, c);
    if (!inserted) {
      it->second += c;
      if (it->second.is_zero()) terms_.erase(it);
    }
  }

  /// Σ ‖f_n‖_Ω ε^{q_n} over stored terms.
  double norm() const {
    double s = 0;
    for (const auto& [q, c] : terms_) s += c.majorant(dom_.delta) * std::pow(dom_.epsilon, to_double(q));
    return s;
  }

  /// Drops every term above `q`, moving it to the tail.
  PuiseuxSeries truncated(const Rational& q) const {
    PuiseuxSeries out(dom_, std::min(q, qmax_));
    out.tail_ = tail_;
    for (const auto& [e, c] : terms_) out.add_term(e, c);
    return out;
  }

  PuiseuxSeries operator-() const {
    PuiseuxSeries out(*this);
    for (auto& [q, c] : out.terms_) c = -c;
    return out;
  }

  friend PuiseuxSeries operator+(const PuiseuxSeries& a, const PuiseuxSeries& b) {
    a.check(b);
    PuiseuxSeries out(a.dom_, std::min(a.qmax_, b.qmax_));
    out.tail_ = a.tail_ + b.tail_;
    for (const auto& [q, c] : a.terms_) out.add_term(q, c);
    for (const auto& [q, c] : b.terms_) out.add_term(q, c);
    return out;
  }
  friend PuiseuxSeries operator-(const PuiseuxSeries& a, const PuiseuxSeries& b) { return a + (-b); }

  friend PuiseuxSeries operator*(const PuiseuxSeries& a, const PuiseuxSeries& b) {
    a.check(b);
    PuiseuxSeries out(a.dom_, std::min(a.qmax_, b.qmax_));
    for (const auto& [qa, ca] : a.terms_)
      for (const auto& [qb, cb] : b.terms_) out.add_term(qa + qb, ca * cb);
    const double na = a.norm(), nb = b.norm();
    out.tail_ += na * b.tail_ + nb * a.tail_ + a.tail_ * b.tail_;
    return out;
  }

  friend PuiseuxSeries operator*(const Rational& s, const PuiseuxSeries& a) {
    PuiseuxSeries out(a.dom_, a.qmax_);
    out.tail_ = a.tail_ * std::fabs(to_double(s));
    for (const auto& [q, c] : a.terms_) out.add_term(q, c * s);
    return out;
  }
  friend PuiseuxSeries operator*(const PuiseuxSeries& a, const Rational& s) { return s * a; }

  /// Multiplication by a coefficient function (no r dependence).
  friend PuiseuxSeries operator*(const C& f, const PuiseuxSeries& a) {
    PuiseuxSeries out(a.dom_, a.qmax_);
    out.tail_ = a.tail_ * f.majorant(a.dom_.delta);
    for (const auto& [q, c] : a.terms_) out.add_term(q, f * c);
    return out;
  }

  /// Exact equality of the stored data (domain, truncation order, terms).
  friend bool operator==(const PuiseuxSeries& a, const PuiseuxSeries& b) {
    return a.dom_ == b.dom_ && a.qmax_ == b.qmax_ && a.terms_ == b.terms_;
  }

  /// r^e · a, for any rational e (e < 0 gives Laurent-type intermediates).
  /// The truncation order shifts along.
  PuiseuxSeries shifted(const Rational& e) const {
    PuiseuxSeries out(dom_, qmax_ + e);
    out.tail_ = tail_ * std::pow(dom_.epsilon, to_double(e));
    for (const auto& [q, c] : terms_) out.add_term(q + e, c);
    return out;
  }

  /// Termwise q r^{q-1} f_n; the tail certificate does not transfer to
  /// derivatives and is reset.
  PuiseuxSeries r_derivative() const {
    PuiseuxSeries out(dom_, qmax_ - 1);
    for (const auto& [q, c] : terms_)
      if (q != 0) out.add_term(q - 1, c * q);
    return out;
  }

  PuiseuxSeries eta_derivative(std::size_t j) const {
    if (j >= dom_.eta_dim) throw DomainError("eta derivative index out of range");
    PuiseuxSeries out(dom_, qmax_);
    for (const auto& [q, c] : terms_) out.add_term(q, c.derivative(j));
    return out;
  }

  /// Numeric value at (r, ξ); at r = 0 this is the q = 0 coefficient.
  double evaluate(double r, std::span<const double> xi) const {
    if (xi.size() != dom_.eta_dim) throw DomainError("point dimension does not match the domain");
    const double slack = 1e-12;
    if (!(r >= 0) || r > dom_.epsilon * (1 + slack)) throw DomainError("radial value outside [0, epsilon]");
    if constexpr (!C::kPeriodic) {
      for (double x : xi)
        if (std::fabs(x) > dom_.delta * (1 + slack)) throw DomainError("point outside the cube domain");
    }
    double s = 0;
    for (const auto& [q, c] : terms_) {
      if (r == 0) {
        if (q < 0) throw DomainError("series with negative exponents evaluated at r = 0");
        if (q == 0) s += c.evaluate(xi);
        continue;
      }
      s += c.evaluate(xi) * std::pow(r, to_double(q));
    }
    return s;
  }

  double evaluate(double r) const { return evaluate(r, std::span<const double>{}); }

  /// Least common denominator of the stored exponents.
  Integer common_denominator() const {
    Integer l = 1;
    for (const auto& [q, c] : terms_) l = lcm(l, denominator(q));
    return l;
  }

  std::string to_string() const {
    if (terms_.empty()) return "0";
    std::string out;
    for (const auto& [q, c] : terms_) {
      if (!out.empty()) out += " + ";
      out += "(" + c.to_string() + ")";
      if (q != 0) out += "*r^" + format_rational(q);
    }
    return out;
  }

 private:
  void check(const PuiseuxSeries& o) const {
    if (!(o.dom_ == dom_)) throw DomainError("Puiseux series on different domains");
  }

  CubeDomain dom_;
  Rational qmax_ = 0;
  TermMap terms_;
  double tail_ = 0;
};

using PSeries = PuiseuxSeries<Polynomial>;
using PSeriesAngular = PuiseuxSeries<FourierPolynomial>;

template <class C>
double p_norm(const PuiseuxSeries<C>& a) {
  return a.norm();
}

/// Power series g(u_1..u_k) = Σ g_α u^α truncated to total degree N, with
/// the polydisc of convergence and a bound for the discarded tail.
struct AnalyticFunction {
  std::size_t nvars = 1;
  int degree = 0;
  std::map<std::vector<int>, Rational> coefficients;
  std::vector<double> radius;
  /// Σ_{|α|>N} |g_α| η^α for η inside the polydisc.
  std::function<double(std::span<const double>)> tail;
  /// The full function, when known in closed form (used for checks).
  std::function<double(std::span<const double>)> exact;
  std::string name;

  double evaluate_truncated(std::span<const double> u) const {
    double s = 0;
    for (const auto& [a, c] : coefficients) {
      double m = to_double(c);
      for (std::size_t j = 0; j < nvars; ++j) m *= std::pow(u[j], a[j]);
      s += m;
    }
    return s;
  }

  /// One-variable series from a coefficient generator c(ℓ); the tail is
  /// summed explicitly and closed with a geometric bound, valid when
  /// |c(ℓ+1)/c(ℓ)| ≤ 1 beyond the summation horizon.
  static AnalyticFunction univariate(std::string name, int N, double radius,
                                     const std::function<Rational(int)>& coeff,
                                     std::function<double(double)> exact) {
    if (N < 0) throw DomainError("truncation degree must be nonnegative");
    AnalyticFunction g;
    g.name = std::move(name);
    g.nvars = 1;
    g.degree = N;
    g.radius = {radius};
    for (int l = 0; l <= N; ++l) g.coefficients[{l}] = coeff(l);
    g.tail = [N, coeff, radius](std::span<const double> eta) {
      const double x = std::fabs(eta[0]);
      if (x >= radius) return std::numeric_limits<double>::infinity();
      double s = 0, term = 0;
      int l = N + 1;
      const int horizon = N + 400;
      for (; l <= horizon; ++l) {
        term = std::fabs(to_double(coeff(l))) * std::pow(x, l);
        s += term;
        if (term < 1e-300) return s;
      }
      return s + term * x / (1 - x);
    };
    if (exact) g.exact = [exact](std::span<const double> u) { return exact(u[0]); };
    return g;
  }

  /// 1/(1−u) = Σ u^ℓ.
  static AnalyticFunction geometric(int N) {
    auto g = univariate("geometric", N, 1.0, [](int) { return Rational(1); },
                        [](double u) { return 1.0 / (1.0 - u); });
    g.tail = [N](std::span<const double> eta) {
      const double x = std::fabs(eta[0]);
      if (x >= 1) return std::numeric_limits<double>::infinity();
      return std::pow(x, N + 1) / (1 - x);
    };
    return g;
  }

  /// (1+u)^a = Σ binom(a, ℓ) u^ℓ.
  static AnalyticFunction binomial(const Rational& a, int N) {
    auto coeff = [a](int l) {
      Rational c = 1;
      for (int i = 0; i < l; ++i) c = c * (a - i) / (i + 1);
      return c;
    };
    const double ad = to_double(a);
    return univariate("binomial(" + format_rational(a) + ")", N, 1.0, coeff,
                      [ad](double u) { return std::pow(1.0 + u, ad); });
  }

  /// g(u) = u.
  static AnalyticFunction identity() {
    AnalyticFunction g;
    g.name = "identity";
    g.nvars = 1;
    g.degree = 1;
    g.coefficients[{1}] = 1;
    g.radius = {std::numeric_limits<double>::infinity()};
    g.tail = [](std::span<const double>) { return 0.0; };
    g.exact = [](std::span<const double> u) { return u[0]; };
    return g;
  }

  /// A polynomial, viewed as an entire function (no tail).
  static AnalyticFunction from_polynomial(const Polynomial& p) {
    AnalyticFunction g;
    g.name = "polynomial";
    g.nvars = p.dim();
    g.degree = p.total_degree();
    for (const auto& [e, c] : p.terms()) g.coefficients[e.entries()] = c;
    g.radius.assign(p.dim(), std::numeric_limits<double>::infinity());
    g.tail = [](std::span<const double>) { return 0.0; };
    g.exact = [p](std::span<const double> u) { return p.evaluate(u); };
    return g;
  }
};

/// g ∘ F with the multinomial expansion realized through memoized powers of
/// the F_j. The result's tail bound includes the truncation of g at degree N
/// (evaluated at the norm certificate η_j = |F_j|_P + tail_j) and every
/// truncation performed in the products.
template <class C>
PuiseuxSeries<C> compose_analytic(const AnalyticFunction& g, const std::vector<PuiseuxSeries<C>>& F) {
  if (F.size() != g.nvars) throw DomainError("number of series does not match the analytic function arity");
  if (F.empty()) throw DomainError("composition needs at least one series");
  const CubeDomain dom = F.front().domain();
  Rational qmax = F.front().truncation_order();
  std::vector<double> eta;
  for (std::size_t j = 0; j < F.size(); ++j) {
    if (!(F[j].domain() == dom)) throw DomainError("composition inputs live on different domains");
    if (auto lead = F[j].leading_exponent(); lead && *lead < 0)
      throw DomainError("composition input has negative exponents");
    qmax = std::min(qmax, F[j].truncation_order());
    eta.push_back(F[j].norm() + F[j].tail_bound());
    if (!(eta.back() < g.radius[j]))
      throw DomainError("polydisc violation: |F_" + std::to_string(j + 1) + "|_P = " + std::to_string(eta.back()) +
                        " is not inside the radius " + std::to_string(g.radius[j]));
  }

  std::vector<std::vector<PuiseuxSeries<C>>> powers(F.size());
  auto power = [&](std::size_t j, int l) -> const PuiseuxSeries<C>& {
    auto& pw = powers[j];
    if (pw.empty()) pw.push_back(PuiseuxSeries<C>::constant(dom, qmax, 1));
    while (static_cast<int>(pw.size()) <= l) pw.push_back(pw.back() * F[j].truncated(qmax));
    return pw[l];
  };

  PuiseuxSeries<C> out(dom, qmax);
  double tail = 0;
  for (const auto& [alpha, c] : g.coefficients) {
    PuiseuxSeries<C> term = PuiseuxSeries<C>::constant(dom, qmax, 1);
    for (std::size_t j = 0; j < alpha.size(); ++j)
      if (alpha[j] > 0) term = term * power(j, alpha[j]);
    tail += std::fabs(to_double(c)) * term.tail_bound();
    term.set_tail_bound(0);
    out = out + c * term;
  }
  out.set_tail_bound(out.tail_bound() + tail + g.tail(eta));
  return out;
}

/// 1/a for a series whose leading coefficient is a nonzero constant:
/// 1/(c r^{q0}(1+u)) = c^{-1} r^{-q0} Σ (−u)^ℓ.
template <class C>
PuiseuxSeries<C> inverse(const PuiseuxSeries<C>& a) {
  auto lead = a.leading_exponent();
  if (!lead) throw DomainError("inverse of the zero series");
  const Rational q0 = *lead;
  const C& c0 = a.terms().begin()->second;
  if (!c0.is_constant()) throw DomainError("inverse needs a constant leading coefficient");
  const Rational c = c0.constant_term();
  const Rational qmax = a.truncation_order() - 2 * q0;
  PuiseuxSeries<C> u = (a.shifted(-q0) * (1 / c)) - PuiseuxSeries<C>::constant(a.domain(), a.truncation_order() - q0, 1);
  if (u.is_zero() && u.tail_bound() == 0) {
    auto out = PuiseuxSeries<C>::r_power(a.domain(), qmax, -q0, 1 / c);
    return out;
  }
  const Rational step = u.leading_exponent() ? *u.leading_exponent() : Rational(1);
  if (step <= 0) throw DomainError("inverse: perturbation is not of positive order");
  const Rational span = (qmax + q0) / step;
  const int N = std::max(1, static_cast<int>(std::ceil(to_double(span))) + 1);
  auto g = AnalyticFunction::geometric(N);
  auto inv = compose_analytic(g, std::vector<PuiseuxSeries<C>>{-u});
  return (inv * (1 / c)).shifted(-q0).truncated(qmax);
}

/// Largest |value − model| of a series against a reference function on a
/// grid of (r, ξ) points.
template <class C>
double max_deviation(const PuiseuxSeries<C>& s, const std::vector<std::pair<double, std::vector<double>>>& pts,
                     const std::function<double(double, std::span<const double>)>& ref) {
  double m = 0;
  for (const auto& [r, xi] : pts) m = std::max(m, std::fabs(s.evaluate(r, xi) - ref(r, xi)));
  return m;
}

template <class C>
void to_json(nlohmann::json& j, const PuiseuxSeries<C>& s) {
  auto terms = nlohmann::json::array();
  for (const auto& [q, c] : s.terms()) terms.push_back({{"q", format_rational(q)}, {"coeff", c}});
  j = {{"domain", s.domain()},
       {"q_max", format_rational(s.truncation_order())},
       {"tail_bound", s.tail_bound()},
       {"terms", terms}};
}

template <class C>
void from_json(const nlohmann::json& j, PuiseuxSeries<C>& s) {
  s = PuiseuxSeries<C>(j.at("domain").get<CubeDomain>(), parse_rational(j.at("q_max").get<std::string>()));
  for (const auto& t : j.at("terms"))
    s.add_term(parse_rational(t.at("q").get<std::string>()), t.at("coeff").get<C>());
  s.set_tail_bound(j.value("tail_bound", 0.0));
}

}  // namespace ahis
