#pragma once

// Trigonometric polynomials Σ c_k e^{i k·θ} with exact complex-rational
// coefficients. Used as the coefficient ring of Puiseux series whose angular
// variables are genuine angles (surfaces of revolution, cones).

#include <cmath>
#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "ahis/error.hpp"
#include "ahis/rational.hpp"

namespace ahis {

struct ComplexRational {
  Rational re = 0, im = 0;

  bool is_zero() const { return re == 0 && im == 0; }
  ComplexRational operator+(const ComplexRational& o) const { return {re + o.re, im + o.im}; }
  ComplexRational operator-(const ComplexRational& o) const { return {re - o.re, im - o.im}; }
  ComplexRational operator*(const ComplexRational& o) const {
    return {re * o.re - im * o.im, re * o.im + im * o.re};
  }
  ComplexRational operator*(const Rational& s) const { return {re * s, im * s}; }
  double modulus() const { return std::hypot(to_double(re), to_double(im)); }
  friend bool operator==(const ComplexRational&, const ComplexRational&) = default;
};

class FourierPolynomial {
 public:
  using Mode = std::vector<int>;
  using TermMap = std::map<Mode, ComplexRational>;
  static constexpr bool kPeriodic = true;

  explicit FourierPolynomial(std::size_t dim = 0) : dim_(dim) {}

  static FourierPolynomial constant(std::size_t dim, const Rational& c) {
    FourierPolynomial p(dim);
    p.add_term(Mode(dim, 0), {c, 0});
    return p;
  }
  /// cos(k θ_j)
  static FourierPolynomial cos_mode(std::size_t dim, std::size_t j, int k) {
    FourierPolynomial p(dim);
    Mode plus(dim, 0), minus(dim, 0);
    plus.at(j) = k;
    minus.at(j) = -k;
    p.add_term(plus, {Rational(1, 2), 0});
    p.add_term(minus, {Rational(1, 2), 0});
    return p;
  }
  /// sin(k θ_j)
  static FourierPolynomial sin_mode(std::size_t dim, std::size_t j, int k) {
    FourierPolynomial p(dim);
    Mode plus(dim, 0), minus(dim, 0);
    plus.at(j) = k;
    minus.at(j) = -k;
    p.add_term(plus, {0, Rational(-1, 2)});
    p.add_term(minus, {0, Rational(1, 2)});
    return p;
  }

  std::size_t dim() const noexcept { return dim_; }
  const TermMap& terms() const noexcept { return terms_; }
  bool is_zero() const noexcept { return terms_.empty(); }

  void add_term(const Mode& k, const ComplexRational& c) {
    if (k.size() != dim_) throw DomainError("Fourier mode length does not match dimension");
    if (c.is_zero()) return;
    auto [it, inserted] = terms_.try_emplace(k, c);
    if (!inserted) {
      it->second = it->second + c;
      if (it->second.is_zero()) terms_.erase(it);
    }
  }

  /// Coefficient of the constant mode (real part).
  Rational constant_term() const {
    auto it = terms_.find(Mode(dim_, 0));
    return it == terms_.end() ? Rational(0) : it->second.re;
  }
  bool is_constant() const {
    return terms_.empty() || (terms_.size() == 1 && terms_.begin()->first == Mode(dim_, 0) &&
                              terms_.begin()->second.im == 0);
  }

  FourierPolynomial operator-() const {
    FourierPolynomial out(*this);
    for (auto& [k, c] : out.terms_) c = c * Rational(-1);
    return out;
  }
  FourierPolynomial& operator+=(const FourierPolynomial& o) {
    check(o);
    for (const auto& [k, c] : o.terms_) add_term(k, c);
    return *this;
  }
  FourierPolynomial& operator-=(const FourierPolynomial& o) {
    check(o);
    for (const auto& [k, c] : o.terms_) add_term(k, c * Rational(-1));
    return *this;
  }
  FourierPolynomial& operator*=(const Rational& s) {
    if (s == 0) terms_.clear();
    for (auto& [k, c] : terms_) c = c * s;
    return *this;
  }
  friend FourierPolynomial operator+(FourierPolynomial a, const FourierPolynomial& b) { return a += b; }
  friend FourierPolynomial operator-(FourierPolynomial a, const FourierPolynomial& b) { return a -= b; }
  friend FourierPolynomial operator*(FourierPolynomial a, const Rational& s) { return a *= s; }
  friend FourierPolynomial operator*(const Rational& s, FourierPolynomial a) { return a *= s; }
  friend FourierPolynomial operator*(const FourierPolynomial& a, const FourierPolynomial& b) {
    a.check(b);
    FourierPolynomial out(a.dim_);
    for (const auto& [ka, ca] : a.terms_)
      for (const auto& [kb, cb] : b.terms_) {
        Mode k(ka);
        for (std::size_t j = 0; j < k.size(); ++j) k[j] += kb[j];
        out.add_term(k, ca * cb);
      }
    return out;
  }
  friend bool operator==(const FourierPolynomial& a, const FourierPolynomial& b) {
    return a.dim_ == b.dim_ && a.terms_ == b.terms_;
  }

  /// ∂/∂θ_j
  FourierPolynomial derivative(std::size_t j) const {
    if (j >= dim_) throw DomainError("derivative index out of range");
    FourierPolynomial out(dim_);
    for (const auto& [k, c] : terms_) out.add_term(k, c * ComplexRational{0, Rational(k[j])});
    return out;
  }

  /// Σ|c_k|, an upper bound of the sup norm (δ is irrelevant for angles).
  double majorant(double /*delta*/) const {
    double s = 0;
    for (const auto& [k, c] : terms_) s += c.modulus();
    return s;
  }

  /// Real part of Σ c_k e^{i k·θ}.
  double evaluate(std::span<const double> theta) const {
    if (theta.size() != dim_) throw DomainError("angle dimension mismatch");
    double s = 0;
    for (const auto& [k, c] : terms_) {
      double ph = 0;
      for (std::size_t j = 0; j < dim_; ++j) ph += k[j] * theta[j];
      s += to_double(c.re) * std::cos(ph) - to_double(c.im) * std::sin(ph);
    }
    return s;
  }

  std::string to_string() const {
    if (terms_.empty()) return "0";
    std::string out;
    for (const auto& [k, c] : terms_) {
      if (!out.empty()) out += " + ";
      out += "(" + format_rational(c.re) + (c.im != 0 ? " + " + format_rational(c.im) + "i" : "") + ")";
      bool any = false;
      for (std::size_t j = 0; j < dim_; ++j)
        if (k[j] != 0) {
          out += (any ? "" : "*e^{i(") + std::string(any ? " + " : "") + std::to_string(k[j]) + "t" +
                 std::to_string(j + 1);
          any = true;
        }
      if (any) out += ")}";
    }
    return out;
  }

 private:
  void check(const FourierPolynomial& o) const {
    if (o.dim_ != dim_) throw DomainError("Fourier dimension mismatch");
  }

  std::size_t dim_;
  TermMap terms_;
};

inline void to_json(nlohmann::json& j, const FourierPolynomial& p) {
  auto terms = nlohmann::json::array();
  for (const auto& [k, c] : p.terms())
    terms.push_back({{"mode", k}, {"re", format_rational(c.re)}, {"im", format_rational(c.im)}});
  j = {{"dim", p.dim()}, {"fourier", terms}};
}

inline void from_json(const nlohmann::json& j, FourierPolynomial& p) {
  p = FourierPolynomial(j.at("dim").get<std::size_t>());
  for (const auto& t : j.at("fourier"))
    p.add_term(t.at("mode").get<std::vector<int>>(),
               {parse_rational(t.at("re").get<std::string>()), parse_rational(t.at("im").get<std::string>())});
}

}  // namespace ahis
