#pragma once

// Link charts of the quasihomogeneous tangent cone, the normal field, the
// one-dimensional Newton map and the Puiseux parametrization
// x_k = r^{ν_k} χ_k(r, η) of one branch of H.
//
// Conventions. ν = σ / min σ, i* = index of the smallest weight (last one on
// ties). The radial variable is fixed by x_{i*} = s·r with s = ±1. On the
// slice x_{i*} = s the cone {f_Γ = 0} is solved for one coordinate j, the
// remaining n-1 coordinates are the chart variables η, and the Newton
// correction T(r, η) runs along e_j:
//   x_{i*} = s r,  x_m = r^{ν_m} η_m,  x_j = r^{ν_j} (ζ_j(η) + T(r, η)).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "ahis/error.hpp"
#include "ahis/newton.hpp"
#include "ahis/poly.hpp"
#include "ahis/puiseux.hpp"
#include "ahis/rational.hpp"
#include "ahis/roots.hpp"

namespace ahis {

struct LinkOptions {
  double delta = 0.5;          // half-width of Ω
  double epsilon = 0.1;        // radial extent recorded in the chart domain
  std::size_t nodes = 9;       // chart samples per η dimension
  std::vector<double> center;  // η center (defaults to 0)
};

namespace detail {

/// Coefficients of y ↦ p(x with x_j = y) for a numeric x.
inline std::vector<double> univariate_slice(const Polynomial& p, std::span<const double> x, std::size_t j) {
  std::vector<double> c;
  for (const auto& [e, coef] : p.terms()) {
    double m = to_double(coef);
    for (std::size_t k = 0; k < p.dim(); ++k)
      if (k != j) m *= std::pow(x[k], e[k]);
    const auto d = static_cast<std::size_t>(e[j]);
    if (c.size() <= d) c.resize(d + 1, 0.0);
    c[d] += m;
  }
  return c;
}

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

/// Tensor grid of `n` points per dimension on [-δ, δ]^d (linspace or
/// Chebyshev), in lexicographic order.
inline std::vector<std::vector<double>> tensor_grid(std::size_t d, std::size_t n, double delta, bool cheb) {
  if (d == 0) return {std::vector<double>{}};
  const auto axis = cheb ? chebyshev_nodes(n, -delta, delta) : linspace(-delta, delta, n);
  std::vector<std::vector<double>> out{{}};
  for (std::size_t k = 0; k < d; ++k) {
    std::vector<std::vector<double>> next;
    for (const auto& p : out)
      for (double a : axis) {
        auto q = p;
        q.push_back(a);
        next.push_back(std::move(q));
      }
    out = std::move(next);
  }
  return out;
}

}  // namespace detail

/// One chart of the link L(1) = {f_Γ = 0, φ_Γ = 1} and the matching slice
/// chart {f_Γ = 0, x_{i*} = s} used by the parametrization.
struct LinkChart {
  NewtonFace face;
  WeightVector nu;  // normalized weights
  CubeDomain eta_domain;
  std::size_t radial_index = 0;
  int radial_sign = 1;
  std::size_t slice_index = 0;              // j
  std::vector<std::size_t> free_indices;    // coordinates carrying η
  std::vector<double> center;               // η center
  double base_root = 0;                     // ζ_j at the center on the slice
  std::pair<std::size_t, std::size_t> solved_indices{0, 1};  // pair solved on φ_Γ = 1
  std::vector<std::size_t> zeta_free;       // complement of solved_indices
  std::vector<double> zeta_base;            // ζ at ξ = 0 (on φ_Γ = 1)
  int branch = 0;

  // Sampled chart and its certificates.
  std::vector<std::vector<double>> xi_grid, zeta_samples;
  double max_f_residual = 0, max_phi_residual = 0, max_jump_ratio = 0;
  double euler_phi = 0;  // E_Γ(φ_Γ) = deg φ_Γ · φ_Γ = deg φ_Γ on the link

  std::size_t dim() const { return face.face_poly.dim(); }

  /// Slice point p(η) with p_{i*} = s, p_m = center_m + η_m, f_Γ(p) = 0,
  /// continued from the center to avoid branch jumps.
  std::vector<double> slice_point(std::span<const double> eta) const {
    if (eta.size() != free_indices.size()) throw DomainError("chart variable dimension mismatch");
    const std::size_t d = dim();
    std::vector<double> p(d, 0.0);
    p[radial_index] = radial_sign;
    double y = base_root;
    const Polynomial dfj = face.face_poly.derivative(slice_index);
    const int steps = eta.empty() ? 1 : 8;
    for (int s = 1; s <= steps; ++s) {
      const double lam = static_cast<double>(s) / steps;
      for (std::size_t m = 0; m < free_indices.size(); ++m)
        p[free_indices[m]] = (center.empty() ? 0.0 : center[m]) + lam * eta[m];
      auto g = [&](double v) {
        p[slice_index] = v;
        return face.face_poly.evaluate(p);
      };
      auto dg = [&](double v) {
        p[slice_index] = v;
        return dfj.evaluate(p);
      };
      y = newton_1d(g, dg, y);
    }
    p[slice_index] = y;
    return p;
  }

  /// Chart ζ(ξ) of the Brieskorn link: ζ_m = zeta_base_m + ξ_m on the free
  /// coordinates, the solved pair from f_Γ(ζ) = 0, φ_Γ(ζ) = 1.
  std::vector<double> zeta(std::span<const double> xi) const {
    if (xi.size() != zeta_free.size()) throw DomainError("chart variable dimension mismatch");
    const auto phi = phi_gamma(face.weight);
    const auto gf = gradient(face.face_poly);
    const auto gp = gradient(phi.phi);
    std::vector<double> z = zeta_base;
    const auto [a, b] = solved_indices;
    const int steps = xi.empty() ? 1 : 8;
    for (int s = 1; s <= steps; ++s) {
      const double lam = static_cast<double>(s) / steps;
      for (std::size_t m = 0; m < zeta_free.size(); ++m) z[zeta_free[m]] = zeta_base[zeta_free[m]] + lam * xi[m];
      for (int it = 0; it < 60; ++it) {
        const double F1 = face.face_poly.evaluate(z), F2 = phi.phi.evaluate(z) - 1.0;
        const double j11 = gf[a].evaluate(z), j12 = gf[b].evaluate(z);
        const double j21 = gp[a].evaluate(z), j22 = gp[b].evaluate(z);
        const double det = j11 * j22 - j12 * j21;
        if (det == 0 || !std::isfinite(det)) throw NumericalError("singular link Jacobian during chart solve");
        const double da = (F1 * j22 - F2 * j12) / det, db = (j11 * F2 - j21 * F1) / det;
        z[a] -= da;
        z[b] -= db;
        if (std::fabs(da) + std::fabs(db) <= 1e-15 * (1 + std::fabs(z[a]) + std::fabs(z[b]))) break;
      }
    }
    return z;
  }
};

/// Enumerates the branches of the tangent cone of a face: one chart per
/// (sign s, simple real root ζ_j at the η center).
inline std::vector<LinkChart> link_charts(const NewtonFace& face, const Polynomial& f, const LinkOptions& opts = {}) {
  const Polynomial& fg = face.face_poly;
  if (fg.dim() != f.dim()) throw DomainError("face and polynomial dimensions differ");
  if (fg.size() < 2)
    throw DomainError("face polynomial is a monomial: a coordinate plane lies in the zero set of f_Gamma");
  const std::size_t d = fg.dim();
  if (d < 2) throw DomainError("a hypersurface germ needs at least two variables");
  const WeightVector nu = face.weight.normalized();
  const std::size_t istar = nu.min_index();
  const std::size_t eta_dim = d - 2;
  std::vector<double> center = opts.center.empty() ? std::vector<double>(eta_dim, 0.0) : opts.center;
  if (center.size() != eta_dim) throw DomainError("chart center has the wrong dimension");

  std::vector<LinkChart> charts;
  for (int s : {1, -1}) {
    for (std::size_t j = 0; j < d; ++j) {
      if (j == istar) continue;
      std::vector<std::size_t> free;
      for (std::size_t m = 0; m < d; ++m)
        if (m != istar && m != j) free.push_back(m);
      std::vector<double> p(d, 0.0);
      p[istar] = s;
      for (std::size_t m = 0; m < free.size(); ++m) p[free[m]] = center[m];
      const auto coeffs = detail::univariate_slice(fg, p, j);
      const auto dcoeffs = derivative_coeffs(coeffs);
      double scale = 0;
      for (double c : coeffs) scale = std::max(scale, std::fabs(c));
      std::vector<double> simple;
      for (double y : real_roots(coeffs))
        if (std::fabs(horner(dcoeffs, y)) > 1e-8 * std::max(1.0, scale) &&
            (simple.empty() || std::fabs(simple.back() - y) > 1e-9 * std::max(1.0, std::fabs(y))))
          simple.push_back(y);
      if (simple.empty()) continue;
      for (double y : simple) {
        LinkChart c;
        c.face = face;
        c.nu = nu;
        c.eta_domain = CubeDomain{eta_dim, opts.delta, opts.epsilon};
        c.radial_index = istar;
        c.radial_sign = s;
        c.slice_index = j;
        c.free_indices = free;
        c.center = center;
        c.base_root = y;
        c.branch = static_cast<int>(charts.size());
        charts.push_back(std::move(c));
      }
      break;
    }
  }
  if (charts.empty())
    throw DomainError("no simple real branch of f_Gamma = 0 on the slices x_" + std::to_string(istar + 1) + " = ±1");

  // Brieskorn link charts.
  const auto phi = phi_gamma(face.weight);
  const auto gf = gradient(fg);
  const auto gp = gradient(phi.phi);
  for (auto& c : charts) {
    auto p = c.slice_point(std::vector<double>(eta_dim, 0.0));
    const double t = std::pow(phi.phi.evaluate(p), -1.0 / to_double(phi.degree));
    c.zeta_base = scaling_apply(face.weight, t, p);
    double best = -1;
    for (std::size_t a = 0; a < d; ++a)
      for (std::size_t b = a + 1; b < d; ++b) {
        const auto& z = c.zeta_base;
        const double det = gf[a].evaluate(z) * gp[b].evaluate(z) - gf[b].evaluate(z) * gp[a].evaluate(z);
        if (std::fabs(det) > best + 1e-12) {
          best = std::fabs(det);
          c.solved_indices = {a, b};
        }
      }
    if (best < 1e-12) throw NumericalError("link Jacobian is singular for every coordinate pair");
    c.zeta_free.clear();
    for (std::size_t m = 0; m < d; ++m)
      if (m != c.solved_indices.first && m != c.solved_indices.second) c.zeta_free.push_back(m);

    c.xi_grid = detail::tensor_grid(eta_dim, opts.nodes, opts.delta, false);
    c.zeta_samples.clear();
    for (const auto& xi : c.xi_grid) {
      auto z = c.zeta(xi);
      c.max_f_residual = std::max(c.max_f_residual, std::fabs(fg.evaluate(z)));
      c.max_phi_residual = std::max(c.max_phi_residual, std::fabs(phi.phi.evaluate(z) - 1.0));
      c.zeta_samples.push_back(std::move(z));
    }
    // Neighbour jumps along each grid axis, relative to the step.
    const double h = opts.nodes > 1 ? 2 * opts.delta / static_cast<double>(opts.nodes - 1) : 1.0;
    for (std::size_t i = 1; i < c.zeta_samples.size(); ++i) {
      std::vector<double> diff(d);
      for (std::size_t k = 0; k < d; ++k) diff[k] = c.zeta_samples[i][k] - c.zeta_samples[i - 1][k];
      if (i % opts.nodes == 0) continue;
      c.max_jump_ratio = std::max(c.max_jump_ratio, detail::norm2(diff) / h);
    }
    c.euler_phi = to_double(phi.degree) * phi.phi.evaluate(c.zeta_base);
  }
  return charts;
}

/// The chart of a given branch (see link_charts).
inline LinkChart link_solve(const NewtonFace& face, const Polynomial& f, const LinkOptions& opts = {},
                            std::size_t branch = 0) {
  auto charts = link_charts(face, f, opts);
  if (branch >= charts.size()) throw DomainError("branch index out of range");
  return charts[branch];
}

/// n_Γ = ∇f_Γ/|∇f_Γ|, at a point or along the chart x = S_{r,ν} ζ(ξ).
struct NormalField {
  Polynomial face_poly;
  std::vector<Polynomial> grad;
  WeightVector nu;
  LinkChart chart;

  std::vector<double> at(std::span<const double> x) const {
    std::vector<double> g = evaluate_all(grad, x);
    const double n = detail::norm2(g);
    if (!(n > 0)) {
      std::string where;
      for (double v : x) where += (where.empty() ? "" : ", ") + std::to_string(v);
      throw NumericalError("vanishing gradient of f_Gamma at (" + where + ")");
    }
    for (auto& v : g) v /= n;
    return g;
  }

  std::vector<double> operator()(double r, std::span<const double> xi) const {
    const auto z = chart.zeta(xi);
    return at(scaling_apply(nu, r, z));
  }
};

inline NormalField normal_field(const NewtonFace& face, const LinkChart& chart) {
  return NormalField{face.face_poly, gradient(face.face_poly), face.weight.normalized(), chart};
}

/// N(t, η) = t − f(η + t n)/f′ with f′ = ∇f(η + t n)·n.
inline double newton_step(const Polynomial& f, std::span<const double> eta, std::span<const double> n, double t) {
  if (eta.size() != f.dim() || n.size() != f.dim()) throw DomainError("point dimension mismatch");
  std::vector<double> x(eta.begin(), eta.end());
  for (std::size_t k = 0; k < x.size(); ++k) x[k] += t * n[k];
  const auto g = evaluate_all(gradient(f), x);
  const double fp = detail::dot(g, n);
  if (std::fabs(fp) < 1e-14 * std::max(1.0, detail::norm2(g))) {
    std::string where;
    for (double v : x) where += (where.empty() ? "" : ", ") + std::to_string(v);
    throw NumericalError("Newton derivative |f'| = " + std::to_string(std::fabs(fp)) + " too small at (" + where + ")");
  }
  return t - f.evaluate(x) / fp;
}

struct ParametrizeOptions {
  Rational q_max = 6;
  double epsilon = 0.1;
  double delta = 0.5;
  std::size_t eta_nodes = 0;      // fit nodes per η dimension (0 = automatic)
  double residual_tol = 1e-9;
  double contraction_target = 0.5;
  int max_halvings = 20;
  int max_iterations = 40;
  std::size_t validation_r = 32;
  std::size_t validation_eta = 16;
};

/// Iteration telemetry of the Newton scheme.
struct ContractionTelemetry {
  std::vector<double> correction_norms;  // ‖T_{n+1} − T_n‖ per iteration
  std::vector<double> ratios;            // successive quotients
  double max_ratio = 0;
  double kappa = 0, c = 0;               // ‖δ_n‖ ≤ κ n² cⁿ
  int iterations = 0;
  double epsilon_initial = 0, epsilon_used = 0;
  int halvings = 0;
  double leading_T_exponent = 0;         // measured (NaN if T ≡ 0)
  double off_lattice_energy = 0;         // relative rms of the r-fit (semi-numeric path)
  bool lattice_ok = true;
};

template <class C>
struct ParametrizationT {
  std::vector<Rational> nu;
  std::vector<PuiseuxSeries<C>> chi;
  std::optional<LinkChart> chart;
  std::optional<PuiseuxSeries<C>> correction;  // T
  std::size_t radial_index = 0, solved_index = 0;
  int branch = 0;
  bool symbolic = true;
  double residual_certificate = 0;
  ContractionTelemetry telemetry;
  /// Exact q = 0 data χ(0, η) when the stored series only approximates it.
  std::function<std::vector<double>(std::span<const double>)> base;

  std::size_t dim() const { return chi.size(); }
  const CubeDomain& domain() const { return chi.front().domain(); }

  /// r^{ν_k} χ_k, the coordinate x_k as a Puiseux series.
  PuiseuxSeries<C> component_series(std::size_t k) const { return chi.at(k).shifted(nu.at(k)); }

  std::vector<double> point(double r, std::span<const double> eta) const {
    std::vector<double> x(chi.size());
    std::vector<double> b;
    if (base) b = base(eta);
    for (std::size_t k = 0; k < chi.size(); ++k) {
      double v = chi[k].evaluate(r, eta);
      if (base) v += b[k] - chi[k].evaluate(0.0, eta);
      x[k] = std::pow(r, to_double(nu[k])) * v;
    }
    return x;
  }
};

using Parametrization = ParametrizationT<Polynomial>;

namespace detail {

struct GeometricFit {
  double kappa = 0, c = 0;
};

/// Fits ‖δ_n‖ ≤ κ n² cⁿ: c from a log-linear fit, κ the smallest constant
/// making the bound hold at every n.
inline GeometricFit fit_geometric(const std::vector<double>& norms) {
  std::vector<double> n, y;
  for (std::size_t i = 0; i < norms.size(); ++i)
    if (norms[i] > 0) {
      const double k = static_cast<double>(i + 1);
      n.push_back(k);
      y.push_back(std::log(norms[i] / (k * k)));
    }
  GeometricFit g;
  if (n.empty()) return {0.0, 0.0};
  if (n.size() == 1) {
    g.c = 0.5;
  } else {
    g.c = std::exp(linear_fit(n, y).first);
  }
  for (std::size_t i = 0; i < n.size(); ++i)
    g.kappa = std::max(g.kappa, std::exp(y[i]) / std::pow(g.c, n[i]));
  return g;
}

inline std::vector<double> ratios_of(const std::vector<double>& norms) {
  std::vector<double> r;
  for (std::size_t i = 0; i + 1 < norms.size(); ++i)
    if (norms[i] > 0) r.push_back(norms[i + 1] / norms[i]);
  return r;
}

/// Least squares with column scaling; returns coefficients and residual.
inline std::pair<Eigen::VectorXd, double> lstsq(const Eigen::MatrixXd& A, const Eigen::VectorXd& b) {
  Eigen::VectorXd scale = A.colwise().norm().transpose();
  for (long i = 0; i < scale.size(); ++i)
    if (scale(i) == 0) scale(i) = 1;
  const Eigen::MatrixXd As = A * scale.cwiseInverse().asDiagonal();
  Eigen::VectorXd x = As.colPivHouseholderQr().solve(b);
  x = x.cwiseQuotient(scale);
  return {x, (A * x - b).norm()};
}

/// Monomials of total degree ≤ D in d variables.
inline std::vector<std::vector<int>> monomials_upto(std::size_t d, int D) {
  std::vector<std::vector<int>> out{{}};
  for (std::size_t k = 0; k < d; ++k) {
    std::vector<std::vector<int>> next;
    for (const auto& m : out) {
      int used = 0;
      for (int v : m) used += v;
      for (int e = 0; e + used <= D; ++e) {
        auto q = m;
        q.push_back(e);
        next.push_back(std::move(q));
      }
    }
    out = std::move(next);
  }
  return out;
}

/// Polynomial of total degree ≤ D in η fitted to samples on [-δ, δ]^d.
inline Polynomial fit_eta_polynomial(const std::vector<std::vector<double>>& nodes, const std::vector<double>& vals,
                                     std::size_t d, int D, double delta) {
  const auto monos = monomials_upto(d, D);
  Eigen::MatrixXd A(static_cast<long>(nodes.size()), static_cast<long>(monos.size()));
  Eigen::VectorXd b(static_cast<long>(nodes.size()));
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    for (std::size_t k = 0; k < monos.size(); ++k) {
      double v = 1;
      for (std::size_t m = 0; m < d; ++m) v *= std::pow(nodes[i][m] / delta, monos[k][m]);
      A(static_cast<long>(i), static_cast<long>(k)) = v;
    }
    b(static_cast<long>(i)) = vals[i];
  }
  const auto [x, res] = lstsq(A, b);
  Polynomial p(d);
  for (std::size_t k = 0; k < monos.size(); ++k) {
    int deg = 0;
    for (int v : monos[k]) deg += v;
    const double c = x(static_cast<long>(k)) / std::pow(delta, deg);
    if (c != 0 && std::fabs(c) > 1e-300) p.add_term(ExponentVector(monos[k]), snap(c));
  }
  return p;
}

}  // namespace detail

/// Max |f(Φ(r, η))| over a validation grid, with r ∈ (0, ε].
template <class C>
double validation_residual(const ParametrizationT<C>& P, const Polynomial& f, std::size_t nr, std::size_t neta) {
  const auto& dom = P.domain();
  double worst = 0;
  const auto rs = linspace(dom.epsilon / static_cast<double>(nr), dom.epsilon, nr);
  std::size_t per_dim = neta;
  while (dom.eta_dim > 0 && std::pow(static_cast<double>(per_dim), static_cast<double>(dom.eta_dim)) > 4096) --per_dim;
  const double half = C::kPeriodic ? std::numbers::pi : dom.delta;
  const auto etas = detail::tensor_grid(dom.eta_dim, per_dim, half, false);
  for (double r : rs)
    for (const auto& e : etas) worst = std::max(worst, std::fabs(f.evaluate(P.point(r, e))));
  return worst;
}

namespace detail {

inline Parametrization solve_symbolic(const Polynomial& f, const LinkChart& chart, const ParametrizeOptions& opts,
                                      double eps) {
  const CubeDomain dom{0, opts.delta, eps};
  const Rational Q = opts.q_max;
  const WeightVector& nu = chart.nu;
  const std::size_t is = chart.radial_index, j = chart.slice_index;
  const Rational s = chart.radial_sign;

  // ζ_j: exact when the root is a small rational, otherwise snapped.
  Rational zeta = snap(chart.base_root);
  {
    const Rational cand = rationalize(chart.base_root, 1000);
    std::vector<Rational> p(2);
    p[is] = s;
    p[j] = cand;
    if (chart.face.face_poly.evaluate_exact(p) == 0) zeta = cand;
  }

  Parametrization P;
  P.nu = nu.sigma;
  P.radial_index = is;
  P.solved_index = j;
  P.symbolic = true;
  P.branch = chart.branch;
  P.chart = chart;
  P.telemetry.epsilon_used = eps;

  PSeries T(dom, Q);
  const PSeries X0 = PSeries::constant(dom, Q, zeta);
  if (!chart.face.remainder.is_zero() || chart.face.face_poly.evaluate_exact(std::vector<Rational>{
                                             is == 0 ? s : zeta, is == 0 ? zeta : s}) != 0) {
    int max_pow = 0;
    for (const auto& [e, c] : f.terms()) max_pow = std::max(max_pow, e[j]);
    for (int it = 0; it < opts.max_iterations; ++it) {
      const PSeries X = X0 + T;
      std::vector<PSeries> pw{PSeries::constant(dom, Q, 1)};
      for (int k = 1; k <= max_pow; ++k) pw.push_back(pw.back() * X);
      PSeries F(dom, Q), dF(dom, Q);
      for (const auto& [e, c] : f.terms()) {
        const Rational shift = nu.weighted_degree(e) - nu.degree;
        const Rational coef = c * pow(s, static_cast<unsigned>(e[is]));
        F = F + (coef * pw[e[j]]).shifted(shift).truncated(Q);
        if (e[j] > 0) dF = dF + (coef * Rational(e[j]) * pw[e[j] - 1]).shifted(shift).truncated(Q);
      }
      PSeries step = -(F * inverse(dF));
      PSeries snapped(dom, Q);
      for (const auto& [q, c] : step.terms()) snapped.add_term(q, Polynomial::constant(0, snap(to_double(c.constant_term()))));
      const double nrm = snapped.norm();
      P.telemetry.correction_norms.push_back(nrm);
      T = (T + snapped).truncated(Q);
      T.set_tail_bound(0);
      P.telemetry.iterations = it + 1;
      if (snapped.is_zero() || nrm < 1e-16) break;
    }
  }
  P.correction = T;
  P.chi.assign(2, PSeries(dom, Q));
  P.chi[is] = PSeries::constant(dom, Q, s);
  P.chi[j] = X0 + T;
  return P;
}

inline Parametrization solve_seminumeric(const Polynomial& f, const LinkChart& chart, const ParametrizeOptions& opts,
                                         double eps) {
  const std::size_t d = f.dim(), ed = d - 2;
  const CubeDomain dom{ed, opts.delta, eps};
  const Rational Q = opts.q_max;
  const WeightVector& nu = chart.nu;
  const std::size_t is = chart.radial_index, j = chart.slice_index;
  const double s = chart.radial_sign;
  const double m_nu = to_double(nu.degree);
  std::vector<double> nud = nu.as_doubles();

  const std::size_t per_dim = opts.eta_nodes ? opts.eta_nodes : (ed == 1 ? 17 : ed == 2 ? 9 : 5);
  const int D = static_cast<int>(per_dim) - 1;
  const auto nodes = tensor_grid(ed, per_dim, opts.delta, true);

  std::vector<Rational> lattice;
  for (const auto& q : exponent_lattice(nu, Q).sequence())
    if (q > 0) lattice.push_back(q);
  const std::size_t K = std::max<std::size_t>(3 * lattice.size() + 8, 24);
  const auto rs = chebyshev_nodes(K, 0.0, eps);

  Parametrization P;
  P.nu = nu.sigma;
  P.radial_index = is;
  P.solved_index = j;
  P.symbolic = false;
  P.branch = chart.branch;
  P.chart = chart;
  P.telemetry.epsilon_used = eps;

  const auto grad = gradient(f);
  const bool exact_cone = chart.face.remainder.is_zero();
  std::vector<double> zeta_vals(nodes.size());
  std::vector<std::vector<double>> coeff_vals(lattice.size(), std::vector<double>(nodes.size(), 0.0));
  std::vector<double> iter_sup;  // sup over grid of the k-th correction
  double fit_res2 = 0, t_norm2 = 0;
  double lead_num = 0;
  bool have_lead = false;

  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const auto p = chart.slice_point(nodes[i]);
    zeta_vals[i] = p[j];
    if (exact_cone) continue;
    Eigen::MatrixXd A(static_cast<long>(K), static_cast<long>(lattice.size()));
    Eigen::VectorXd b(static_cast<long>(K));
    std::vector<double> Tvals(K);
    for (std::size_t k = 0; k < K; ++k) {
      const double r = rs[k];
      std::vector<double> x(d);
      x[is] = s * r;
      for (std::size_t m = 0; m < chart.free_indices.size(); ++m)
        x[chart.free_indices[m]] = std::pow(r, nud[chart.free_indices[m]]) * p[chart.free_indices[m]];
      const double rj = std::pow(r, nud[j]), rm = std::pow(r, m_nu);
      double t = 0;
      double prev = 0;
      for (int it = 0; it < opts.max_iterations; ++it) {
        x[j] = rj * (p[j] + t);
        const double g = f.evaluate(x) / rm;
        const double dg = grad[j].evaluate(x) * rj / rm;
        if (dg == 0 || !std::isfinite(dg)) throw NumericalError("vanishing Newton derivative on the grid");
        const double step = -g / dg;
        t += step;
        if (iter_sup.size() <= static_cast<std::size_t>(it)) iter_sup.resize(it + 1, 0.0);
        iter_sup[it] = std::max(iter_sup[it], std::fabs(step));
        if (std::fabs(step) <= 1e-16 * (1 + std::fabs(p[j])) || (it > 0 && std::fabs(step) >= std::fabs(prev) && std::fabs(step) < 1e-13))
          break;
        prev = step;
        if (it + 1 == opts.max_iterations) throw NumericalError("Newton iteration did not converge on the grid");
      }
      Tvals[k] = t;
      for (std::size_t q = 0; q < lattice.size(); ++q)
        A(static_cast<long>(k), static_cast<long>(q)) = std::pow(r / eps, to_double(lattice[q]));
      b(static_cast<long>(k)) = t;
      t_norm2 += t * t;
    }
    const auto [coef, res] = lstsq(A, b);
    fit_res2 += res * res;
    for (std::size_t q = 0; q < lattice.size(); ++q)
      coeff_vals[q][i] = coef(static_cast<long>(q)) / std::pow(eps, to_double(lattice[q]));
    // Leading exponent of T at the first node from the two smallest radii.
    if (!have_lead && std::fabs(Tvals[0]) > 0 && std::fabs(Tvals[1]) > 0) {
      lead_num = std::log(std::fabs(Tvals[1] / Tvals[0])) / std::log(rs[1] / rs[0]);
      have_lead = true;
    }
  }

  P.telemetry.correction_norms = iter_sup;
  P.telemetry.off_lattice_energy = t_norm2 > 0 ? std::sqrt(fit_res2 / t_norm2) : 0.0;
  P.telemetry.leading_T_exponent = have_lead ? lead_num : std::nan("");

  PSeries chij(dom, Q);
  chij.add_term(0, fit_eta_polynomial(nodes, zeta_vals, ed, D, opts.delta));
  PSeries T(dom, Q);
  for (std::size_t q = 0; q < lattice.size(); ++q)
    T.add_term(lattice[q], fit_eta_polynomial(nodes, coeff_vals[q], ed, D, opts.delta));
  P.correction = T;
  P.chi.assign(d, PSeries(dom, Q));
  P.chi[is] = PSeries::constant(dom, Q, Rational(chart.radial_sign));
  P.chi[j] = chij + T;
  for (std::size_t m = 0; m < chart.free_indices.size(); ++m) {
    Polynomial c = Polynomial::variable(ed, m) + Polynomial::constant(ed, snap(chart.center.empty() ? 0.0 : chart.center[m]));
    P.chi[chart.free_indices[m]] = PSeries::monomial(dom, Q, 0, c);
  }
  const LinkChart ch = chart;
  P.base = [ch](std::span<const double> eta) { return ch.slice_point(eta); };
  return P;
}

}  // namespace detail

/// Runs the Newton scheme for one branch and returns the parametrization
/// x_k = r^{ν_k} χ_k(r, η). ε is halved until the measured contraction
/// factor is below the target and the residual certificate meets the
/// tolerance.
inline Parametrization newton_solve_series(const Polynomial& f, const NewtonFace& face, const LinkChart& chart,
                                           const ParametrizeOptions& opts = {}) {
  if (opts.q_max <= 0) throw DomainError("truncation order must be positive");
  if (!(face.weight == chart.face.weight)) throw DomainError("chart belongs to a different face");
  double eps = opts.epsilon;
  std::string last;
  for (int h = 0; h <= opts.max_halvings; ++h, eps *= 0.5) {
    Parametrization P = f.dim() == 2 ? detail::solve_symbolic(f, chart, opts, eps)
                                     : detail::solve_seminumeric(f, chart, opts, eps);
    auto& tel = P.telemetry;
    tel.epsilon_initial = opts.epsilon;
    tel.halvings = h;
    tel.ratios = detail::ratios_of(tel.correction_norms);
    tel.max_ratio = tel.ratios.empty() ? 0.0 : *std::max_element(tel.ratios.begin(), tel.ratios.end());
    const auto g = detail::fit_geometric(tel.correction_norms);
    tel.kappa = g.kappa;
    tel.c = g.c;
    if (P.symbolic) {
      const auto& T = *P.correction;
      tel.leading_T_exponent = T.leading_exponent() ? to_double(*T.leading_exponent()) : std::nan("");
    }
    const auto lattice = exponent_lattice(chart.nu, opts.q_max);
    for (const auto& c : P.chi)
      for (const auto& q : c.exponents()) tel.lattice_ok = tel.lattice_ok && lattice.contains(q);
    P.residual_certificate = validation_residual(P, f, opts.validation_r, opts.validation_eta);
    if (tel.max_ratio < opts.contraction_target && P.residual_certificate <= opts.residual_tol) {
      if (!tel.lattice_ok || tel.off_lattice_energy > 1e-2)
        throw NumericalError("lattice mismatch: parametrization exponents leave the weight lattice");
      return P;
    }
    last = "contraction " + std::to_string(tel.max_ratio) + ", residual " + std::to_string(P.residual_certificate);
  }
  throw NumericalError("Newton scheme not certified after epsilon shrinking (" + last + ")");
}

struct ResidualReport {
  double max_residual = 0;
  std::vector<double> r_values;
  std::vector<double> residuals;  // max over η at each r
  double decay_exponent = 0;      // fitted s in residual ~ r^s
};

/// |f(Φ(r, η))| over a grid of radii and chart points; fits the decay
/// exponent on the radii where the residual is above roundoff.
template <class C>
ResidualReport parametrization_residual(const ParametrizationT<C>& P, const Polynomial& f,
                                        const std::vector<double>& r_grid,
                                        const std::vector<std::vector<double>>& eta_grid) {
  if (r_grid.empty() || eta_grid.empty()) throw DomainError("empty validation grid");
  ResidualReport rep;
  std::vector<double> lx, ly;
  for (double r : r_grid) {
    double worst = 0;
    for (const auto& e : eta_grid) worst = std::max(worst, std::fabs(f.evaluate(P.point(r, e))));
    rep.r_values.push_back(r);
    rep.residuals.push_back(worst);
    rep.max_residual = std::max(rep.max_residual, worst);
    if (worst > 1e-300 && r > 0) {
      lx.push_back(std::log(r));
      ly.push_back(std::log(worst));
    }
  }
  rep.decay_exponent = lx.size() >= 2 ? linear_fit(lx, ly).first : std::numeric_limits<double>::infinity();
  return rep;
}

/// Sampled check of the quasihomogeneous tangent cone: |f|/t^{m'} and the
/// gradient angle between f and f_Γ on {f_Γ = 0, φ_Γ ≤ ε^{2m}, |f| < δ}.
struct TangentConeReport {
  std::size_t samples = 0;
  double max_scaled_residual = 0;  // max |f| / t^{m'}
  double max_relative = 0;         // max |f| / t^{m}
  double bound = 0;                // c · ε^{m'−m}
  double min_cosine = 1;
  bool angle_ok = true;
  double m = 0, m_prime = 0;
};

inline TangentConeReport tangent_cone_check(const Polynomial& f, const NewtonFace& face, std::size_t samples,
                                            double eps, double delta) {
  if (samples == 0) throw DomainError("no sample points requested");
  const WeightVector& nu = face.weight;
  TangentConeReport rep;
  rep.m = to_double(nu.degree);
  const auto mp = weighted_order(face.remainder, nu);
  rep.m_prime = mp ? to_double(*mp) : std::numeric_limits<double>::infinity();
  LinkOptions lo;
  lo.nodes = 1;
  auto charts = link_charts(face, f, lo);
  const std::size_t ed = f.dim() - 2;
  const std::size_t per_chart = std::max<std::size_t>(1, samples / charts.size());
  std::size_t nxi = 1;
  if (ed > 0) nxi = std::max<std::size_t>(2, static_cast<std::size_t>(std::pow(static_cast<double>(per_chart) / 10.0, 1.0 / static_cast<double>(ed))));
  const std::size_t xi_count = static_cast<std::size_t>(std::pow(static_cast<double>(nxi), static_cast<double>(ed)));
  const std::size_t nt = std::max<std::size_t>(2, per_chart / std::max<std::size_t>(1, xi_count));
  const auto gf = gradient(f), gg = gradient(face.face_poly);
  for (const auto& c : charts) {
    const auto xis = detail::tensor_grid(ed, nxi, 0.5 * lo.delta, false);
    for (const auto& xi : xis) {
      const auto z = c.zeta(xi);
      for (std::size_t k = 1; k <= nt; ++k) {
        const double t = eps * static_cast<double>(k) / static_cast<double>(nt);
        const auto x = scaling_apply(nu, t, z);
        const double fv = f.evaluate(x);
        if (!(std::fabs(fv) < delta)) continue;
        ++rep.samples;
        if (std::isfinite(rep.m_prime)) rep.max_scaled_residual = std::max(rep.max_scaled_residual, std::fabs(fv) / std::pow(t, rep.m_prime));
        rep.max_relative = std::max(rep.max_relative, std::fabs(fv) / std::pow(t, rep.m));
        const auto a = evaluate_all(gf, x), b = evaluate_all(gg, x);
        const double na = detail::norm2(a), nb = detail::norm2(b);
        if (na > 0 && nb > 0) rep.min_cosine = std::min(rep.min_cosine, std::fabs(detail::dot(a, b)) / (na * nb));
      }
    }
  }
  if (rep.samples == 0) throw DomainError("no sample points in the truncated cone");
  rep.bound = std::isfinite(rep.m_prime) ? rep.max_scaled_residual * std::pow(eps, rep.m_prime - rep.m) : 0.0;
  rep.angle_ok = rep.min_cosine >= 1 - eps * eps;
  return rep;
}

inline void to_json(nlohmann::json& j, const ContractionTelemetry& t) {
  j = {{"correction_norms", t.correction_norms},
       {"ratios", t.ratios},
       {"max_ratio", t.max_ratio},
       {"kappa", t.kappa},
       {"c", t.c},
       {"iterations", t.iterations},
       {"epsilon_initial", t.epsilon_initial},
       {"epsilon_used", t.epsilon_used},
       {"halvings", t.halvings},
       {"leading_T_exponent", std::isfinite(t.leading_T_exponent) ? nlohmann::json(t.leading_T_exponent) : nlohmann::json(nullptr)},
       {"off_lattice_energy", t.off_lattice_energy},
       {"lattice_ok", t.lattice_ok}};
}

template <class C>
void to_json(nlohmann::json& j, const ParametrizationT<C>& P) {
  auto nu = nlohmann::json::array();
  for (const auto& v : P.nu) nu.push_back(format_rational(v));
  j = {{"nu", nu},
       {"chi", P.chi},
       {"branch", P.branch},
       {"radial_index", P.radial_index + 1},
       {"solved_index", P.solved_index + 1},
       {"path", P.symbolic ? "symbolic" : "semi-numeric"},
       {"residual_certificate", P.residual_certificate},
       {"telemetry", P.telemetry}};
  if (P.chart) {
    j["radial_sign"] = P.chart->radial_sign;
    j["link_point"] = P.chart->zeta_base;
  }
}

}  // namespace ahis
