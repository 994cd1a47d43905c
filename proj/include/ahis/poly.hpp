#pragma once

// Exact multivariate polynomials over Q with dense exponent vectors.

#include <algorithm>
#include <cctype>
#include <compare>
#include <cstddef>
#include <initializer_list>
#include <map>
#include <memory>
#include <numeric>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "ahis/error.hpp"
#include "ahis/rational.hpp"

namespace ahis {

/// Monomial exponent α ∈ N^dim.
class ExponentVector {
 public:
  ExponentVector() = default;
  explicit ExponentVector(std::vector<int> entries) : e_(std::move(entries)) {
    for (int v : e_)
      if (v < 0) throw DomainError("exponent entries must be nonnegative");
  }
  ExponentVector(std::initializer_list<int> entries)
      : ExponentVector(std::vector<int>(entries)) {}

  static ExponentVector zero(std::size_t dim) { return ExponentVector(std::vector<int>(dim, 0)); }
  static ExponentVector unit(std::size_t dim, std::size_t j) {
    std::vector<int> v(dim, 0);
    v.at(j) = 1;
    return ExponentVector(std::move(v));
  }

  std::size_t size() const noexcept { return e_.size(); }
  int operator[](std::size_t j) const { return e_[j]; }
  const std::vector<int>& entries() const noexcept { return e_; }

  int degree() const { return std::accumulate(e_.begin(), e_.end(), 0); }

  ExponentVector operator+(const ExponentVector& o) const {
    if (o.size() != size()) throw DomainError("exponent dimension mismatch");
    std::vector<int> v(e_);
    for (std::size_t j = 0; j < v.size(); ++j) v[j] += o.e_[j];
    return ExponentVector(std::move(v));
  }

  /// Componentwise a >= b.
  bool dominates(const ExponentVector& o) const {
    for (std::size_t j = 0; j < e_.size(); ++j)
      if (e_[j] < o.e_[j]) return false;
    return true;
  }

  auto operator<=>(const ExponentVector&) const = default;
  bool operator==(const ExponentVector&) const = default;

 private:
  std::vector<int> e_;
};

inline Rational dot(const ExponentVector& a, std::span<const Rational> w) {
  if (a.size() != w.size()) throw DomainError("weight dimension mismatch");
  Rational s = 0;
  for (std::size_t j = 0; j < a.size(); ++j) s += a[j] * w[j];
  return s;
}

class Polynomial {
 public:
  static constexpr std::size_t kMaxDim = 8;
  static constexpr bool kPeriodic = false;
  using TermMap = std::map<ExponentVector, Rational>;

  explicit Polynomial(std::size_t dim = 0) : dim_(dim) {
    if (dim > kMaxDim) throw DomainError("polynomial dimension exceeds " + std::to_string(kMaxDim));
  }

  static Polynomial constant(std::size_t dim, const Rational& c) {
    Polynomial p(dim);
    p.add_term(ExponentVector::zero(dim), c);
    return p;
  }
  static Polynomial monomial(const ExponentVector& e, const Rational& c) {
    Polynomial p(e.size());
    p.add_term(e, c);
    return p;
  }
  static Polynomial variable(std::size_t dim, std::size_t j) {
    return monomial(ExponentVector::unit(dim, j), 1);
  }

  std::size_t dim() const noexcept { return dim_; }
  const TermMap& terms() const noexcept { return terms_; }
  bool is_zero() const noexcept { return terms_.empty(); }
  std::size_t size() const noexcept { return terms_.size(); }

  Rational constant_term() const { return coefficient(ExponentVector::zero(dim_)); }
  bool is_constant() const { return terms_.empty() || (terms_.size() == 1 && terms_.begin()->first.degree() == 0); }

  Rational coefficient(const ExponentVector& e) const {
    auto it = terms_.find(e);
    return it == terms_.end() ? Rational(0) : it->second;
  }

  /// Adds c·x^e, dropping the term if it cancels.
  void add_term(const ExponentVector& e, const Rational& c) {
    if (e.size() != dim_) throw DomainError("exponent vector length does not match polynomial dimension");
    if (c == 0) return;
    numeric_.reset();
    auto [it, inserted] = terms_.try_emplace(e, c);
    if (!inserted) {
      it->second += c;
      if (it->second == 0) terms_.erase(it);
    }
  }

  int total_degree() const {
    int d = -1;
    for (const auto& [e, c] : terms_) d = std::max(d, e.degree());
    return d;
  }

  Polynomial operator-() const {
    Polynomial out(*this);
    out.numeric_.reset();
    for (auto& [e, c] : out.terms_) c = -c;
    return out;
  }
  Polynomial& operator+=(const Polynomial& o) {
    check_dim(o);
    for (const auto& [e, c] : o.terms_) add_term(e, c);
    return *this;
  }
  Polynomial& operator-=(const Polynomial& o) {
    check_dim(o);
    for (const auto& [e, c] : o.terms_) add_term(e, -c);
    return *this;
  }
  Polynomial& operator*=(const Rational& s) {
    numeric_.reset();
    if (s == 0) {
      terms_.clear();
      return *this;
    }
    for (auto& [e, c] : terms_) c *= s;
    return *this;
  }
  friend Polynomial operator+(Polynomial a, const Polynomial& b) { return a += b; }
  friend Polynomial operator-(Polynomial a, const Polynomial& b) { return a -= b; }
  friend Polynomial operator*(Polynomial a, const Rational& s) { return a *= s; }
  friend Polynomial operator*(const Rational& s, Polynomial a) { return a *= s; }
  friend Polynomial operator*(const Polynomial& a, const Polynomial& b) {
    a.check_dim(b);
    Polynomial out(a.dim_);
    for (const auto& [ea, ca] : a.terms_)
      for (const auto& [eb, cb] : b.terms_) out.add_term(ea + eb, ca * cb);
    return out;
  }
  friend bool operator==(const Polynomial& a, const Polynomial& b) {
    return a.dim_ == b.dim_ && a.terms_ == b.terms_;
  }

  Polynomial pow(unsigned k) const {
    Polynomial out = constant(dim_, 1), base = *this;
    while (k) {
      if (k & 1u) out = out * base;
      base = base * base;
      k >>= 1u;
    }
    return out;
  }

  /// ∂/∂x_j.
  Polynomial derivative(std::size_t j) const {
    if (j >= dim_) throw DomainError("derivative index out of range");
    Polynomial out(dim_);
    for (const auto& [e, c] : terms_) {
      if (e[j] == 0) continue;
      std::vector<int> v = e.entries();
      v[j] -= 1;
      out.add_term(ExponentVector(std::move(v)), c * e[j]);
    }
    return out;
  }

  double evaluate(std::span<const double> x) const {
    if (x.size() != dim_) throw DomainError("evaluation point has wrong dimension");
    if (!numeric_) {
      auto cache = std::make_shared<std::vector<std::pair<ExponentVector, double>>>();
      for (const auto& [e, c] : terms_) cache->emplace_back(e, to_double(c));
      numeric_ = std::move(cache);
    }
    double s = 0.0;
    for (const auto& [e, c] : *numeric_) {
      double m = c;
      for (std::size_t j = 0; j < dim_; ++j)
        for (int k = 0; k < e[j]; ++k) m *= x[j];
      s += m;
    }
    return s;
  }

  Rational evaluate_exact(std::span<const Rational> x) const {
    if (x.size() != dim_) throw DomainError("evaluation point has wrong dimension");
    Rational s = 0;
    for (const auto& [e, c] : terms_) {
      Rational m = c;
      for (std::size_t j = 0; j < dim_; ++j) m *= ahis::pow(x[j], static_cast<unsigned>(e[j]));
      s += m;
    }
    return s;
  }

  /// Σ |c_α| δ^{|α|}: the coefficient-sum majorant of sup over [-δ,δ]^dim.
  double majorant(double delta) const {
    double s = 0.0;
    for (const auto& [e, c] : terms_) s += std::fabs(to_double(c)) * std::pow(delta, e.degree());
    return s;
  }

  std::string to_string() const {
    if (terms_.empty()) return "0";
    std::string out;
    bool first = true;
    // Ascending total degree.
    std::vector<std::pair<ExponentVector, Rational>> ordered(terms_.begin(), terms_.end());
    std::stable_sort(ordered.begin(), ordered.end(), [](const auto& a, const auto& b) {
      return a.first.degree() < b.first.degree();
    });
    for (const auto& [e, c] : ordered) {
      const bool neg = c < 0;
      const Rational mag = neg ? Rational(-c) : c;
      if (first) {
        if (neg) out += "-";
      } else {
        out += neg ? " - " : " + ";
      }
      first = false;
      std::string mono;
      for (std::size_t j = 0; j < dim_; ++j) {
        if (e[j] == 0) continue;
        if (!mono.empty()) mono += "*";
        mono += "x" + std::to_string(j + 1);
        if (e[j] > 1) mono += "^" + std::to_string(e[j]);
      }
      if (mono.empty()) {
        out += format_rational(mag);
      } else if (mag == 1) {
        out += mono;
      } else {
        out += format_rational(mag) + "*" + mono;
      }
    }
    return out;
  }

 private:
  void check_dim(const Polynomial& o) const {
    if (o.dim_ != dim_) throw DomainError("polynomial dimension mismatch");
  }

  std::size_t dim_;
  TermMap terms_;
  // Double coefficients for evaluate(); rebuilt after any change to terms_.
  mutable std::shared_ptr<const std::vector<std::pair<ExponentVector, double>>> numeric_;
};

inline std::vector<Polynomial> gradient(const Polynomial& f) {
  std::vector<Polynomial> g;
  g.reserve(f.dim());
  for (std::size_t j = 0; j < f.dim(); ++j) g.push_back(f.derivative(j));
  return g;
}

inline std::vector<std::vector<Polynomial>> hessian(const Polynomial& f) {
  std::vector<std::vector<Polynomial>> h(f.dim());
  for (std::size_t i = 0; i < f.dim(); ++i) {
    const Polynomial fi = f.derivative(i);
    for (std::size_t j = 0; j < f.dim(); ++j) h[i].push_back(fi.derivative(j));
  }
  return h;
}

inline std::vector<double> evaluate_all(const std::vector<Polynomial>& ps, std::span<const double> x) {
  std::vector<double> out;
  out.reserve(ps.size());
  for (const auto& p : ps) out.push_back(p.evaluate(x));
  return out;
}

namespace detail {

class PolynomialParser {
 public:
  PolynomialParser(std::string_view text, std::size_t dim) : s_(text), dim_(dim) {}

  Polynomial parse() {
    Polynomial out(dim_);
    skip_ws();
    if (pos_ == s_.size()) throw ParseError("empty polynomial", pos_);
    bool first = true;
    while (true) {
      skip_ws();
      if (pos_ == s_.size()) break;
      int sign = 1;
      if (s_[pos_] == '+' || s_[pos_] == '-') {
        sign = s_[pos_] == '-' ? -1 : 1;
        ++pos_;
        skip_ws();
      } else if (!first) {
        throw ParseError(std::string("expected '+' or '-' but found '") + s_[pos_] + "'", pos_);
      }
      first = false;
      auto [e, c] = parse_term();
      out.add_term(e, c * sign);
    }
    return out;
  }

 private:
  void skip_ws() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }

  bool at_factor_start() const {
    if (pos_ >= s_.size()) return false;
    const char ch = s_[pos_];
    return std::isdigit(static_cast<unsigned char>(ch)) || ch == 'x' || ch == '.';
  }

  std::pair<ExponentVector, Rational> parse_term() {
    std::vector<int> e(dim_, 0);
    Rational c = 1;
    bool any = false;
    while (true) {
      skip_ws();
      if (!at_factor_start()) {
        if (!any) {
          if (pos_ >= s_.size()) throw ParseError("unexpected end of input, expected a term", pos_);
          throw ParseError(std::string("unexpected character '") + s_[pos_] + "'", pos_);
        }
        break;
      }
      any = true;
      if (s_[pos_] == 'x') {
        const std::size_t at = pos_;
        ++pos_;
        const long idx = parse_uint("variable index");
        if (idx < 1 || static_cast<std::size_t>(idx) > dim_)
          throw ParseError("variable x" + std::to_string(idx) + " out of range for dimension " +
                               std::to_string(dim_),
                           at);
        long power = 1;
        skip_ws();
        if (pos_ < s_.size() && s_[pos_] == '^') {
          ++pos_;
          skip_ws();
          power = parse_uint("exponent");
        } else if (pos_ + 1 < s_.size() && s_[pos_] == '*' && s_[pos_ + 1] == '*') {
          pos_ += 2;
          skip_ws();
          power = parse_uint("exponent");
        }
        e[static_cast<std::size_t>(idx - 1)] += static_cast<int>(power);
      } else {
        c *= parse_number();
      }
      skip_ws();
      if (pos_ < s_.size() && s_[pos_] == '*' && !(pos_ + 1 < s_.size() && s_[pos_ + 1] == '*')) {
        ++pos_;
        skip_ws();
        if (!at_factor_start()) throw ParseError("expected a factor after '*'", pos_);
      }
    }
    return {ExponentVector(std::move(e)), c};
  }

  long parse_uint(const char* what) {
    const std::size_t start = pos_;
    while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    if (start == pos_) throw ParseError(std::string("expected ") + what, pos_);
    if (pos_ - start > 6) throw ParseError(std::string(what) + " too large", start);
    return std::stol(std::string(s_.substr(start, pos_ - start)));
  }

  Rational parse_number() {
    const std::size_t start = pos_;
    while (pos_ < s_.size() && (std::isdigit(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '.')) ++pos_;
    std::string lit(s_.substr(start, pos_ - start));
    skip_ws();
    if (pos_ < s_.size() && s_[pos_] == '/') {
      ++pos_;
      skip_ws();
      const std::size_t dstart = pos_;
      while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_;
      if (dstart == pos_) throw ParseError("expected denominator after '/'", pos_);
      lit += "/" + std::string(s_.substr(dstart, pos_ - dstart));
    }
    try {
      return parse_rational(lit);
    } catch (const ParseError& e) {
      throw ParseError(e.what(), start);
    }
  }

  std::string_view s_;
  std::size_t dim_;
  std::size_t pos_ = 0;
};

}  // namespace detail

/// Parses a sum of rational-coefficient monomials in x1..x{dim}, e.g.
/// "3/2*x1^2*x2 - x2^3 + 0.5 x1". Like monomials are collected.
inline Polynomial parse_polynomial(std::string_view text, std::size_t dim) {
  if (dim == 0 || dim > Polynomial::kMaxDim)
    throw DomainError("polynomial dimension must be in 1.." + std::to_string(Polynomial::kMaxDim));
  return detail::PolynomialParser(text, dim).parse();
}

/// Largest variable index mentioned in `text` (0 when none).
inline std::size_t infer_dimension(std::string_view text) {
  std::size_t best = 0;
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (text[i] != 'x') continue;
    std::size_t j = i + 1, v = 0;
    while (j < text.size() && std::isdigit(static_cast<unsigned char>(text[j]))) {
      v = v * 10 + static_cast<std::size_t>(text[j] - '0');
      ++j;
    }
    best = std::max(best, v);
  }
  return best;
}

inline std::string format_polynomial(const Polynomial& p) { return p.to_string(); }

// JSON form: {"dim": n, "terms": [{"coeff": "p/q", "exp": [...]}, ...]}
inline void to_json(nlohmann::json& j, const Polynomial& p) {
  j = nlohmann::json::object();
  j["dim"] = p.dim();
  auto terms = nlohmann::json::array();
  for (const auto& [e, c] : p.terms())
    terms.push_back({{"coeff", format_rational(c)}, {"exp", e.entries()}});
  j["terms"] = std::move(terms);
}

inline void from_json(const nlohmann::json& j, Polynomial& p) {
  try {
    const std::size_t dim = j.at("dim").get<std::size_t>();
    Polynomial out(dim);
    for (const auto& t : j.at("terms")) {
      const auto& cj = t.at("coeff");
      Rational c = cj.is_string() ? parse_rational(cj.get<std::string>())
                   : cj.is_number_integer() ? Rational(cj.get<long long>())
                                            : from_double(cj.get<double>());
      auto e = t.at("exp").get<std::vector<int>>();
      if (e.size() != dim) throw ParseError("exponent vector length does not match dim");
      out.add_term(ExponentVector(std::move(e)), c);
    }
    p = std::move(out);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("invalid polynomial JSON: ") + e.what());
  }
}

/// Reads either the JSON form or the text grammar. For text, `dim` = 0 means
/// "infer from the largest variable index".
inline Polynomial read_polynomial(std::string_view content, std::size_t dim = 0) {
  const auto first = content.find_first_not_of(" \t\r\n");
  if (first != std::string_view::npos && content[first] == '{') {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(content);
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError(std::string("invalid JSON: ") + e.what(), e.byte);
    }
    return j.get<Polynomial>();
  }
  if (dim == 0) dim = infer_dimension(content);
  if (dim == 0) throw ParseError("cannot infer dimension: no variables x1..xn found");
  return parse_polynomial(content, dim);
}

}  // namespace ahis
