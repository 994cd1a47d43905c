#pragma once

// Small numeric helpers: real roots of univariate polynomials, 1-D Newton
// polishing, dyadic snapping of doubles, Chebyshev nodes.

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <numbers>
#include <vector>

#include <Eigen/Dense>

#include "ahis/error.hpp"
#include "ahis/rational.hpp"

namespace ahis {

/// Exact dyadic rational agreeing with x in its leading `bits` bits. Keeps
/// exact dyadics (1/2, -1/8, ...) exact and bounds coefficient growth.
inline Rational snap(double x, int bits = 46) {
  if (!std::isfinite(x)) throw NumericalError("cannot snap a non-finite value");
  if (x == 0) return 0;
  int e = 0;
  const double m = std::frexp(x, &e);  // x = m 2^e, 0.5 <= |m| < 1
  const double scaled = std::round(std::ldexp(m, bits));
  Rational out(static_cast<long long>(scaled));
  const int shift = e - bits;
  if (shift >= 0)
    out *= pow(Rational(2), static_cast<unsigned>(shift));
  else
    out /= pow(Rational(2), static_cast<unsigned>(-shift));
  return out;
}

/// p(x) = Σ c[k] x^k
inline double horner(const std::vector<double>& c, double x) {
  double s = 0;
  for (auto it = c.rbegin(); it != c.rend(); ++it) s = s * x + *it;
  return s;
}

inline std::vector<double> derivative_coeffs(const std::vector<double>& c) {
  std::vector<double> d;
  for (std::size_t k = 1; k < c.size(); ++k) d.push_back(c[k] * static_cast<double>(k));
  return d;
}

/// Real roots of Σ c[k] x^k via the companion matrix, polished by Newton.
/// Returns sorted roots; multiple roots may appear once or repeated.
inline std::vector<double> real_roots(std::vector<double> c, double imag_tol = 1e-7) {
  while (!c.empty() && c.back() == 0) c.pop_back();
  if (c.size() <= 1) return {};
  std::size_t lead_zeros = 0;
  while (c[lead_zeros] == 0) ++lead_zeros;
  std::vector<double> roots(lead_zeros > 0 ? 1 : 0, 0.0);
  std::vector<double> q(c.begin() + static_cast<long>(lead_zeros), c.end());
  const std::size_t deg = q.size() - 1;
  if (deg >= 1) {
    Eigen::MatrixXd comp = Eigen::MatrixXd::Zero(static_cast<long>(deg), static_cast<long>(deg));
    for (std::size_t i = 1; i < deg; ++i) comp(static_cast<long>(i), static_cast<long>(i - 1)) = 1;
    for (std::size_t i = 0; i < deg; ++i) comp(static_cast<long>(i), static_cast<long>(deg - 1)) = -q[i] / q[deg];
    Eigen::EigenSolver<Eigen::MatrixXd> es(comp, false);
    const auto dq = derivative_coeffs(q);
    for (long i = 0; i < es.eigenvalues().size(); ++i) {
      const std::complex<double> z = es.eigenvalues()[i];
      if (std::fabs(z.imag()) > imag_tol * std::max(1.0, std::abs(z))) continue;
      double x = z.real();
      for (int it = 0; it < 50; ++it) {
        const double d = horner(dq, x);
        if (d == 0) break;
        const double step = horner(q, x) / d;
        x -= step;
        if (std::fabs(step) <= 1e-16 * std::max(1.0, std::fabs(x))) break;
      }
      roots.push_back(x);
    }
  }
  std::sort(roots.begin(), roots.end());
  return roots;
}

/// Newton iteration for a scalar equation, returning the root; throws when
/// the derivative vanishes or the iteration does not settle.
inline double newton_1d(const std::function<double(double)>& g, const std::function<double(double)>& dg, double x,
                        double tol = 1e-15, int max_iter = 60) {
  for (int it = 0; it < max_iter; ++it) {
    const double d = dg(x);
    if (d == 0 || !std::isfinite(d)) throw NumericalError("vanishing derivative in scalar Newton solve");
    const double step = g(x) / d;
    x -= step;
    if (!std::isfinite(x)) throw NumericalError("scalar Newton solve diverged");
    if (std::fabs(step) <= tol * std::max(1.0, std::fabs(x))) return x;
  }
  return x;
}

/// Bisection on a sign change in [a, b].
inline double bisect(const std::function<double(double)>& g, double a, double b, int iters = 200) {
  double ga = g(a);
  if (ga == 0) return a;
  const double gb = g(b);
  if (gb == 0) return b;
  if ((ga > 0) == (gb > 0)) throw NumericalError("bisection interval has no sign change");
  for (int i = 0; i < iters; ++i) {
    const double m = 0.5 * (a + b);
    const double gm = g(m);
    if (gm == 0 || m == a || m == b) return m;
    if ((gm > 0) == (ga > 0)) {
      a = m;
      ga = gm;
    } else {
      b = m;
    }
  }
  return 0.5 * (a + b);
}

/// Chebyshev points of the first kind mapped to [a, b], increasing.
inline std::vector<double> chebyshev_nodes(std::size_t n, double a, double b) {
  std::vector<double> x(n);
  for (std::size_t k = 0; k < n; ++k)
    x[k] = 0.5 * (a + b) - 0.5 * (b - a) * std::cos(std::numbers::pi * (k + 0.5) / static_cast<double>(n));
  return x;
}

inline std::vector<double> linspace(double a, double b, std::size_t n) {
  std::vector<double> x(n);
  for (std::size_t k = 0; k < n; ++k) x[k] = n == 1 ? a : a + (b - a) * static_cast<double>(k) / static_cast<double>(n - 1);
  return x;
}

/// Least-squares slope and intercept of y against x.
inline std::pair<double, double> linear_fit(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw DomainError("linear fit needs at least two points");
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(x.size());
  my /= static_cast<double>(y.size());
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (sxx == 0) throw DomainError("degenerate abscissae in linear fit");
  const double slope = sxy / sxx;
  return {slope, my - slope * mx};
}

}  // namespace ahis
