#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <cmath>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "ahis/error.hpp"

namespace ahis {

using Rational = boost::multiprecision::cpp_rational;
using Integer = boost::multiprecision::cpp_int;

inline double to_double(const Rational& q) { return q.convert_to<double>(); }

inline Integer numerator(const Rational& q) {
  return boost::multiprecision::numerator(q);
}
inline Integer denominator(const Rational& q) {
  return boost::multiprecision::denominator(q);
}

inline bool is_integer(const Rational& q) { return denominator(q) == 1; }

/// Exact conversion of a finite double (every double is a dyadic rational).
inline Rational from_double(double x) {
  if (!std::isfinite(x)) throw DomainError("cannot convert non-finite value to a rational");
  return Rational(x);
}

/// Best rational approximation with denominator at most `max_den`
/// (continued fractions). Used only for reporting fitted exponents.
inline Rational rationalize(double x, std::int64_t max_den) {
  if (!std::isfinite(x)) throw DomainError("cannot rationalize non-finite value");
  const bool neg = x < 0;
  double v = std::fabs(x);
  Integer p0 = 0, q0 = 1, p1 = 1, q1 = 0;
  for (int it = 0; it < 64; ++it) {
    const double a = std::floor(v);
    const Integer ai = static_cast<std::int64_t>(a);
    const Integer p2 = ai * p1 + p0;
    const Integer q2 = ai * q1 + q0;
    if (q2 > max_den) break;
    p0 = p1; q0 = q1; p1 = p2; q1 = q2;
    const double frac = v - a;
    if (frac < 1e-15) break;
    v = 1.0 / frac;
  }
  if (q1 == 0) return Rational(0);
  Rational r(p1, q1);
  return neg ? Rational(-r) : r;
}

/// "p/q" or "p" (also accepts a leading sign and decimal notation "1.25").
inline Rational parse_rational(std::string_view text) {
  std::string s(text);
  auto trim = [](std::string& t) {
    const auto b = t.find_first_not_of(" \t\n\r");
    const auto e = t.find_last_not_of(" \t\n\r");
    t = b == std::string::npos ? std::string{} : t.substr(b, e - b + 1);
  };
  trim(s);
  if (s.empty()) throw ParseError("empty rational literal");
  auto parse_int = [&](const std::string& t) -> Integer {
    if (t.empty()) throw ParseError("malformed rational literal '" + s + "'");
    std::size_t i = (t[0] == '-' || t[0] == '+') ? 1 : 0;
    if (i == t.size()) throw ParseError("malformed rational literal '" + s + "'");
    for (std::size_t k = i; k < t.size(); ++k)
      if (t[k] < '0' || t[k] > '9') throw ParseError("malformed rational literal '" + s + "'");
    Integer v(t.substr(i));
    return t[0] == '-' ? Integer(-v) : v;
  };
  if (const auto slash = s.find('/'); slash != std::string::npos) {
    const Integer den = parse_int(s.substr(slash + 1));
    if (den == 0) throw ParseError("zero denominator in '" + s + "'");
    return Rational(parse_int(s.substr(0, slash)), den);
  }
  if (const auto dot = s.find('.'); dot != std::string::npos) {
    std::string frac = s.substr(dot + 1);
    std::string whole = s.substr(0, dot);
    const bool neg = !whole.empty() && whole[0] == '-';
    if (whole.empty() || whole == "-" || whole == "+") whole += "0";
    Integer scale = 1;
    for (std::size_t k = 0; k < frac.size(); ++k) scale *= 10;
    const Integer w = parse_int(whole);
    const Integer f = frac.empty() ? Integer(0) : parse_int(frac);
    Rational mag = Rational(neg ? Integer(-w) : w) + Rational(f, scale);
    return neg ? Rational(-mag) : mag;
  }
  return Rational(parse_int(s));
}

inline std::string format_rational(const Rational& q) {
  if (is_integer(q)) return numerator(q).str();
  return numerator(q).str() + "/" + denominator(q).str();
}

inline Integer lcm(const Integer& a, const Integer& b) {
  if (a == 0 || b == 0) return 0;
  return boost::multiprecision::abs(a / boost::multiprecision::gcd(a, b) * b);
}

inline Rational abs(const Rational& q) { return q < 0 ? Rational(-q) : q; }

/// Integer power of a rational, exponent >= 0.
inline Rational pow(const Rational& base, unsigned e) {
  Rational out = 1, b = base;
  while (e) {
    if (e & 1u) out *= b;
    b *= b;
    e >>= 1u;
  }
  return out;
}

}  // namespace ahis
