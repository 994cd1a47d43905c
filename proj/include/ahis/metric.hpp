#pragma once

// Induced metric g = ω dr² + 2 β·dη dr + Σ of a parametrized branch, removal
// of the cross term by the flow η′ = −Σ⁻¹β, the normalized metric
// ĝ = dr² + Σ̂ and the data of the radial model operator.

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <numbers>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <boost/math/interpolators/cardinal_cubic_b_spline.hpp>
#include <boost/numeric/odeint.hpp>
#include <json.hpp>

#include "ahis/cone.hpp"
#include "ahis/error.hpp"
#include "ahis/fourier.hpp"
#include "ahis/puiseux.hpp"
#include "ahis/rational.hpp"

namespace ahis {

template <class C>
struct MetricData {
  using Series = PuiseuxSeries<C>;

  std::size_t eta_dim = 0;
  std::vector<Rational> nu;
  Series omega;
  std::vector<Series> beta;                 // length n−1
  std::vector<std::vector<Series>> sigma;   // (n−1)×(n−1)
  std::vector<std::vector<Series>> Lambda;  // Λ_{k,j} = ∂χ_k/∂η_j
  std::vector<Series> radial;               // ν_k χ_k + r ∂_r χ_k

  // Grid certificates.
  double omega_min = 0;
  double sigma_min_eigenvalue = 0;  // min over grid r > 0 of λ_min(Σ)/r^{2ν_max}
  Rational mu;                      // max ν_j − 1
  double sigma_norm_c = 0;          // ‖Σ‖₂ ≤ c r^{2+2μ}

  /// Point on H for the chart, when known (used by the Lyapunov check).
  std::function<std::vector<double>(double, std::span<const double>)> point;

  const CubeDomain& domain() const { return omega.domain(); }
  double angle_half_width() const { return C::kPeriodic ? std::numbers::pi : domain().delta; }

  double omega_at(double r, std::span<const double> eta) const { return omega.evaluate(r, eta); }

  Eigen::VectorXd beta_at(double r, std::span<const double> eta) const {
    Eigen::VectorXd b(static_cast<long>(eta_dim));
    for (std::size_t k = 0; k < eta_dim; ++k) b(static_cast<long>(k)) = beta[k].evaluate(r, eta);
    return b;
  }

  Eigen::MatrixXd sigma_at(double r, std::span<const double> eta) const {
    Eigen::MatrixXd S(static_cast<long>(eta_dim), static_cast<long>(eta_dim));
    for (std::size_t k = 0; k < eta_dim; ++k)
      for (std::size_t l = 0; l < eta_dim; ++l) S(static_cast<long>(k), static_cast<long>(l)) = sigma[k][l].evaluate(r, eta);
    return S;
  }

  bool has_cross_term() const {
    return std::any_of(beta.begin(), beta.end(), [](const Series& b) { return !b.is_zero(); });
  }
};

namespace detail {

/// Angular sample grid: periodic charts use [−π, π), cube charts [−δ, δ].
inline std::vector<std::vector<double>> angle_grid(std::size_t d, std::size_t n, double half, bool periodic) {
  if (!periodic) return tensor_grid(d, n, half, false);
  if (d == 0) return {std::vector<double>{}};
  std::vector<double> axis(n);
  for (std::size_t i = 0; i < n; ++i) axis[i] = -half + 2 * half * static_cast<double>(i) / static_cast<double>(n);
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

template <class C>
void certify_metric(MetricData<C>& M, std::size_t nr = 32, std::size_t neta = 16) {
  const auto& dom = M.domain();
  const auto etas = angle_grid(M.eta_dim, neta, M.angle_half_width() * (C::kPeriodic ? 1.0 : 1.0), C::kPeriodic);
  double numax = 0;
  for (const auto& v : M.nu) numax = std::max(numax, to_double(v));
  M.omega_min = std::numeric_limits<double>::infinity();
  M.sigma_min_eigenvalue = std::numeric_limits<double>::infinity();
  M.sigma_norm_c = 0;
  for (std::size_t i = 0; i <= nr; ++i) {
    const double r = dom.epsilon * static_cast<double>(i) / static_cast<double>(nr);
    for (const auto& e : etas) {
      M.omega_min = std::min(M.omega_min, M.omega_at(r, e));
      if (i == 0 || M.eta_dim == 0) continue;
      const Eigen::MatrixXd S = M.sigma_at(r, e);
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S);
      M.sigma_min_eigenvalue = std::min(M.sigma_min_eigenvalue, es.eigenvalues()(0) / std::pow(r, 2 * numax));
      M.sigma_norm_c = std::max(M.sigma_norm_c, es.eigenvalues().cwiseAbs().maxCoeff() / std::pow(r, 2 + 2 * to_double(M.mu)));
    }
  }
  if (!(M.omega_min > 1e-12))
    throw DomainError("omega is not bounded below on [0, epsilon]: the branch is tangent to a coordinate axis");
  if (M.eta_dim > 0 && !(M.sigma_min_eigenvalue > 0))
    throw DomainError("Sigma is not positive definite on the grid");
}

}  // namespace detail

/// Assembles ω = ‖R(Aχ + r∂_rχ)‖², β = rΛᵀR²(Aχ + r∂_rχ), Σ = r²ΛᵀR²Λ in
/// the Puiseux ring. For r-independent χ this is ω = ‖ARχ‖².
template <class C>
MetricData<C> induced_metric(const ParametrizationT<C>& P) {
  using S = PuiseuxSeries<C>;
  const std::size_t d = P.dim();
  if (d < 2) throw DomainError("parametrization has fewer than two coordinates");
  const CubeDomain& dom = P.domain();
  const std::size_t ed = dom.eta_dim;
  MetricData<C> M;
  M.eta_dim = ed;
  M.nu = P.nu;
  Rational numax = P.nu.front();
  for (const auto& v : P.nu) numax = std::max(numax, v);
  M.mu = numax - 1;

  M.radial.reserve(d);
  M.Lambda.assign(d, {});
  // Products are kept to full order: the fitted coefficients of a
  // semi-numeric chart cancel only in the untruncated sums.
  Rational order = 0;
  for (const auto& c : P.chi) order = std::max(order, Rational(2 * c.truncation_order()));
  order += 2 * numax + 2;
  for (std::size_t k = 0; k < d; ++k) {
    S chi(dom, order);
    chi.set_tail_bound(P.chi[k].tail_bound());
    for (const auto& [q, c] : P.chi[k].terms()) chi.add_term(q, c);
    S v = chi * P.nu[k];
    if (chi.size() > 1 || (chi.size() == 1 && *chi.leading_exponent() != 0)) v = v + chi.r_derivative().shifted(1);
    M.radial.push_back(v);
    for (std::size_t j = 0; j < ed; ++j) M.Lambda[k].push_back(chi.eta_derivative(j));
  }
  M.omega = S(dom, 0);
  bool first = false;
  M.beta.assign(ed, S(dom, 0));
  M.sigma.assign(ed, std::vector<S>(ed, S(dom, 0)));
  std::vector<bool> beta_set(ed, false);
  std::vector<std::vector<bool>> sigma_set(ed, std::vector<bool>(ed, false));
  auto acc = [](S& target, bool& set, const S& term) {
    target = set ? target + term : term;
    set = true;
  };
  for (std::size_t k = 0; k < d; ++k) {
    const Rational shift = 2 * (P.nu[k] - 1);
    acc(M.omega, first, (M.radial[k] * M.radial[k]).shifted(shift));
    for (std::size_t a = 0; a < ed; ++a) {
      bool bset = beta_set[a];
      acc(M.beta[a], bset, (M.Lambda[k][a] * M.radial[k]).shifted(shift + 1));
      beta_set[a] = bset;
      for (std::size_t b = 0; b < ed; ++b) {
        bool sset = sigma_set[a][b];
        acc(M.sigma[a][b], sset, (M.Lambda[k][a] * M.Lambda[k][b]).shifted(shift + 2));
        sigma_set[a][b] = sset;
      }
    }
  }
  M.point = [P](double r, std::span<const double> eta) { return P.point(r, eta); };
  detail::certify_metric(M);
  return M;
}

/// x = r^a cos θ, y = r^a sin θ, z = r; a = 1 is the round cone.
inline ParametrizationT<FourierPolynomial> surface_of_revolution(const Rational& a, double epsilon,
                                                                 const Rational& q_max = 4) {
  using S = PSeriesAngular;
  const CubeDomain dom{1, std::numbers::pi, epsilon};
  ParametrizationT<FourierPolynomial> P;
  P.nu = {a, a, 1};
  P.chi = {S::monomial(dom, q_max, 0, FourierPolynomial::cos_mode(1, 0, 1)),
           S::monomial(dom, q_max, 0, FourierPolynomial::sin_mode(1, 0, 1)), S::constant(dom, q_max, 1)};
  P.correction = S(dom, q_max);
  P.radial_index = 2;
  P.solved_index = 0;
  return P;
}

struct FlowOptions {
  double abs_tol = 1e-12;
  double rel_tol = 1e-12;
  double r_min_ratio = 1e-4;  // flow is followed down to r_min_ratio·ε
  std::size_t lines = 8;      // flow lines per angular dimension
  std::size_t samples = 24;   // radii per flow line (geometric)
};

struct FlowLine {
  std::vector<double> theta;
  std::vector<double> r;
  std::vector<std::vector<double>> eta;
  std::vector<double> phi;  // Brieskorn function of the point along the line
};

template <class C>
struct NormalizedMetric {
  MetricData<C> metric;
  FlowOptions options;
  bool identity_flow = true;
  /// Σ̂ = Σ/ω as series, when there is no cross term and ω has a constant
  /// leading coefficient.
  std::optional<std::vector<std::vector<PuiseuxSeries<C>>>> sigma_hat;
  std::vector<FlowLine> lines;
  double max_cross_residual = 0;
  double smallest_r = 0;
  double lyapunov_exponent = std::nan("");  // fitted exponent of φ along flow lines
  double lyapunov_alpha = std::nan("");     // certified exponent (quasihomogeneous degree of φ)
  double lyapunov_delta = std::nan("");     // max φ / r^α
  bool lyapunov_ok = true;

  double epsilon() const { return metric.domain().epsilon; }

  /// η(r) along the flow line through θ at r = ε.
  std::vector<double> flow(double r, std::span<const double> theta) const {
    std::vector<double> eta(theta.begin(), theta.end());
    if (identity_flow || r == epsilon()) return eta;
    if (!(r > 0) || r > epsilon()) throw DomainError("flow radius outside (0, epsilon]");
    namespace ode = boost::numeric::odeint;
    using State = std::vector<double>;
    const auto& M = metric;
    auto rhs = [&M](const State& y, State& dyds, double s) {
      const double rr = std::exp(s);
      const Eigen::MatrixXd S = M.sigma_at(rr, y);
      const Eigen::VectorXd b = M.beta_at(rr, y);
      const Eigen::VectorXd v = -rr * S.ldlt().solve(b);
      for (std::size_t k = 0; k < y.size(); ++k) dyds[k] = v(static_cast<long>(k));
    };
    auto stepper = ode::make_controlled(options.abs_tol, options.rel_tol, ode::runge_kutta_dopri5<State>());
    try {
      ode::integrate_adaptive(stepper, rhs, eta, std::log(epsilon()), std::log(r), -1e-3);
    } catch (const DomainError&) {
      throw NumericalError("cross-term flow left the chart before r = " + std::to_string(r));
    }
    for (double v : eta)
      if (!std::isfinite(v)) throw NumericalError("cross-term flow blew up before r = " + std::to_string(r));
    return eta;
  }

  /// ∂η/∂θ by central differences of the flow.
  Eigen::MatrixXd flow_jacobian(double r, std::span<const double> theta) const {
    const std::size_t d = theta.size();
    Eigen::MatrixXd J = Eigen::MatrixXd::Identity(static_cast<long>(d), static_cast<long>(d));
    if (identity_flow) return J;
    const double h = 1e-5;
    for (std::size_t j = 0; j < d; ++j) {
      std::vector<double> tp(theta.begin(), theta.end()), tm = tp;
      tp[j] += h;
      tm[j] -= h;
      const auto ep = flow(r, tp), em = flow(r, tm);
      for (std::size_t k = 0; k < d; ++k) J(static_cast<long>(k), static_cast<long>(j)) = (ep[k] - em[k]) / (2 * h);
    }
    return J;
  }

  /// Coefficient of dr² after the change of variables.
  double omega_at(double r, std::span<const double> theta) const {
    const auto eta = flow(r, theta);
    const double w = metric.omega_at(r, eta);
    if (identity_flow || metric.eta_dim == 0) return w;
    const Eigen::MatrixXd S = metric.sigma_at(r, eta);
    const Eigen::VectorXd b = metric.beta_at(r, eta);
    return w - b.dot(S.ldlt().solve(b));
  }

  /// Angular block Jᵀ Σ J in the flowed coordinates.
  Eigen::MatrixXd sigma_theta_at(double r, std::span<const double> theta) const {
    const auto eta = flow(r, theta);
    const Eigen::MatrixXd J = flow_jacobian(r, theta);
    return J.transpose() * metric.sigma_at(r, eta) * J;
  }

  Eigen::MatrixXd sigma_hat_at(double r, std::span<const double> theta) const {
    return sigma_theta_at(r, theta) / omega_at(r, theta);
  }
};

/// Integrates the cross-term flow from r = ε towards 0 on a grid of initial
/// angles, certifies the cross-term removal and the Lyapunov decay.
template <class C>
NormalizedMetric<C> remove_cross_term(const MetricData<C>& M, const FlowOptions& opts = {}) {
  NormalizedMetric<C> N;
  N.metric = M;
  N.options = opts;
  N.identity_flow = !M.has_cross_term() || M.eta_dim == 0;
  const double eps = M.domain().epsilon;
  if (N.identity_flow && M.eta_dim > 0) {
    const auto& c0 = M.omega.terms().begin()->second;
    if (M.omega.leading_exponent() == Rational(0) && c0.is_constant()) {
      try {
        const auto winv = inverse(M.omega);
        std::vector<std::vector<PuiseuxSeries<C>>> sh(M.eta_dim);
        for (std::size_t a = 0; a < M.eta_dim; ++a)
          for (std::size_t b = 0; b < M.eta_dim; ++b) sh[a].push_back(M.sigma[a][b] * winv);
        N.sigma_hat = std::move(sh);
      } catch (const DomainError&) {
        // 1/ω does not converge as a series on this ε; Σ̂ stays numeric.
      }
    }
  }

  const auto thetas = detail::angle_grid(M.eta_dim, opts.lines, 0.5 * M.angle_half_width(), C::kPeriodic);
  const double r_min = opts.r_min_ratio * eps;
  N.smallest_r = r_min;
  std::vector<double> radii(opts.samples);
  for (std::size_t i = 0; i < opts.samples; ++i)
    radii[i] = eps * std::pow(opts.r_min_ratio, static_cast<double>(i) / static_cast<double>(opts.samples - 1));

  std::optional<BrieskornFunction> phi;
  if (M.point) phi = phi_gamma(WeightVector{M.nu, 1});
  std::vector<double> lx, ly;
  double delta = 0;
  for (const auto& th : thetas) {
    FlowLine line;
    line.theta = th;
    for (double r : radii) {
      const auto eta = N.flow(r, th);
      line.r.push_back(r);
      line.eta.push_back(eta);
      if (phi) {
        const double v = phi->phi.evaluate(M.point(r, eta));
        line.phi.push_back(v);
        if (v > 0) {
          lx.push_back(std::log(r));
          ly.push_back(std::log(v));
        }
      }
      // Cross term in (r, θ): Jᵀ(β + Σ ∂_rη), ∂_rη by differencing the flow.
      if (!N.identity_flow && r < eps) {
        const double h = 1e-4 * r;
        const auto ep = N.flow(r + h, th), em = N.flow(r - h, th);
        Eigen::VectorXd deta(static_cast<long>(M.eta_dim));
        for (std::size_t k = 0; k < M.eta_dim; ++k) deta(static_cast<long>(k)) = (ep[k] - em[k]) / (2 * h);
        const Eigen::VectorXd cross = N.flow_jacobian(r, th).transpose() * (M.beta_at(r, eta) + M.sigma_at(r, eta) * deta);
        N.max_cross_residual = std::max(N.max_cross_residual, cross.cwiseAbs().maxCoeff());
      }
    }
    N.lines.push_back(std::move(line));
  }
  if (phi) {
    N.lyapunov_alpha = to_double(phi->degree);
    if (lx.size() >= 2) {
      N.lyapunov_exponent = linear_fit(lx, ly).first;
      delta = 0;
      for (std::size_t i = 0; i < lx.size(); ++i) delta = std::max(delta, std::exp(ly[i] - N.lyapunov_alpha * lx[i]));
      N.lyapunov_delta = delta;
      N.lyapunov_ok = N.lyapunov_exponent >= N.lyapunov_alpha - 0.01;
      if (!N.lyapunov_ok)
        throw NumericalError("Lyapunov check failed: phi decays like r^" + std::to_string(N.lyapunov_exponent) +
                             ", below r^" + std::to_string(N.lyapunov_alpha) + "; shrink epsilon");
    }
  }
  return N;
}

/// Radial Sturm–Liouville data of the Laplacian −Δ_g restricted to angular
/// mode eigenvalue μ: −(p u′)′ + μ q u = λ w u on (0, ε).
struct RadialProfile {
  std::function<double(double)> p, w, q;
  double epsilon = 0;
  double p_exponent = 0;  // p ~ r^a as r → 0
  double q_exponent = 0;  // q ~ r^b as r → 0
  std::string name;
};

struct ModelOperator {
  Rational alpha = 0;
  double alpha_fitted = 0;
  std::size_t k = 0;
  double epsilon = 0;
  std::vector<double> direction_exponents;  // fitted exponents of the Σ̂ eigenvalues
  double frozen_laplacian_error = 0;
  double potential_bound = 0;               // |V| ≤ C r^{−2} on [ε/100, ε]
  double sigma_norm_c = 0;
  RadialProfile profile;                    // angle-averaged profile of the true metric
};

/// Pure power model −∂_r² − Δ_k / r^α on (0, ε).
inline RadialProfile model_profile(double alpha, double epsilon) {
  RadialProfile pr;
  pr.p = [](double) { return 1.0; };
  pr.w = [](double) { return 1.0; };
  pr.q = [alpha](double r) { return std::pow(r, -alpha); };
  pr.epsilon = epsilon;
  pr.p_exponent = 0;
  pr.q_exponent = -alpha;
  pr.name = "model(alpha=" + std::to_string(alpha) + ")";
  return pr;
}

namespace detail {

inline double log_slope(const std::function<double(double)>& f, double r0, double r1) {
  std::vector<double> lx, ly;
  for (int i = 0; i < 12; ++i) {
    const double r = r0 * std::pow(r1 / r0, i / 11.0);
    const double v = f(r);
    if (v > 0) {
      lx.push_back(std::log(r));
      ly.push_back(std::log(v));
    }
  }
  return lx.size() >= 2 ? linear_fit(lx, ly).first : 0.0;
}

}  // namespace detail

/// Leading exponents of Σ̂, the model exponent α, the fast-direction count
/// k, the frozen-coefficient deviation and the O(r^{−2}) potential constant.
template <class C>
ModelOperator model_operator(const NormalizedMetric<C>& N) {
  ModelOperator op;
  const auto& M = N.metric;
  const double eps = N.epsilon();
  op.epsilon = eps;
  op.sigma_norm_c = M.sigma_norm_c;
  const std::size_t ed = M.eta_dim;
  const auto thetas = detail::angle_grid(ed, std::max<std::size_t>(4, N.options.lines), 0.5 * M.angle_half_width(), C::kPeriodic);
  const double r0 = eps / 100, r1 = 0.99 * eps;
  std::vector<double> radii;
  for (int i = 0; i < 16; ++i) radii.push_back(r0 * std::pow(r1 / r0, i / 15.0));

  if (ed == 0) {
    op.alpha = 0;
    op.k = 0;
  } else {
    // Per-direction exponents from the ordered eigenvalues of Σ̂, fitted
    // on small radii where the leading power dominates.
    std::vector<std::vector<double>> ly(ed);
    std::vector<double> lx;
    const double f0 = std::max(2 * N.smallest_r, 2e-4 * eps), f1 = 1e-2 * eps;
    for (int i = 0; i < 12; ++i) {
      const double r = f0 * std::pow(f1 / f0, i / 11.0);
      lx.push_back(std::log(r));
      std::vector<double> acc(ed, 0.0);
      for (const auto& th : thetas) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(N.sigma_hat_at(r, th));
        for (std::size_t a = 0; a < ed; ++a) acc[a] += std::log(es.eigenvalues()(static_cast<long>(a)));
      }
      for (std::size_t a = 0; a < ed; ++a) ly[a].push_back(acc[a] / static_cast<double>(thetas.size()));
    }
    for (std::size_t a = 0; a < ed; ++a) op.direction_exponents.push_back(linear_fit(lx, ly[a]).first);
    op.alpha_fitted = *std::max_element(op.direction_exponents.begin(), op.direction_exponents.end());
    // Candidates 2ν_j.
    std::optional<Rational> best;
    for (const auto& v : M.nu) {
      const Rational c = 2 * v;
      if (!best || std::fabs(to_double(c) - op.alpha_fitted) < std::fabs(to_double(*best) - op.alpha_fitted)) best = c;
    }
    if (std::fabs(to_double(*best) - op.alpha_fitted) > 0.05) {
      std::string ex;
      for (double e : op.direction_exponents) ex += (ex.empty() ? "" : ", ") + std::to_string(e);
      throw NumericalError("leading exponents of Sigma-hat are not a clean power: (" + ex + ")");
    }
    op.alpha = *best;
    for (double e : op.direction_exponents)
      if (std::fabs(e - op.alpha_fitted) <= 0.05) ++op.k;

    // Frozen-coefficient deviation of r^{−α}Σ̂ from its value at the smallest radius.
    const double a = to_double(op.alpha);
    for (const auto& th : thetas) {
      const Eigen::MatrixXd lead = N.sigma_hat_at(r0, th) / std::pow(r0, a);
      const double ln = lead.norm();
      for (double r : radii)
        op.frozen_laplacian_error = std::max(op.frozen_laplacian_error, (N.sigma_hat_at(r, th) / std::pow(r, a) - lead).norm() / ln);
    }
  }

  // Potential of the unitary transform u = σ^{1/4} φ, σ = det Σ̂:
  // V = L″ + L′², L = ¼ log σ.
  for (const auto& th : thetas) {
    auto L = [&](double r) {
      if (ed == 0) return 0.0;
      return 0.25 * std::log(N.sigma_hat_at(r, th).determinant());
    };
    for (double r : radii) {
      const double hh = 1e-3 * r;
      const double lp = L(r + hh), lm = L(r - hh), l0 = L(r);
      const double d1 = (lp - lm) / (2 * hh), d2 = (lp - 2 * l0 + lm) / (hh * hh);
      op.potential_bound = std::max(op.potential_bound, std::fabs(d2 + d1 * d1) * r * r);
    }
  }

  // Angle-averaged profile of −Δ_g for the true metric (volume √(ω det Σ_θ)).
  if (ed <= 1) {
    const auto ths = thetas;
    const NormalizedMetric<C> Ncopy = N;
    auto avg = [Ncopy, ths, ed](double r, int which) {
      if (r <= 0) return 0.0;
      double s = 0;
      for (const auto& th : ths) {
        const double w = Ncopy.omega_at(r, th);
        const double S = ed == 0 ? 1.0 : Ncopy.sigma_theta_at(r, th)(0, 0);
        s += which == 0 ? std::sqrt(S / w) : which == 1 ? std::sqrt(w * S) : std::sqrt(w / S);
      }
      return s / static_cast<double>(ths.size());
    };
    // Tabulated in log-log on [ε/10⁴, ε]; pure power continuation below.
    const std::size_t nt = 241;
    const double lr0 = std::log(eps * 1e-4), dl = (std::log(eps) - lr0) / static_cast<double>(nt - 1);
    std::array<std::vector<double>, 3> tab;
    for (auto& v : tab) v.resize(nt);
    for (std::size_t i = 0; i < nt; ++i) {
      const double r = i + 1 == nt ? eps : std::exp(lr0 + dl * static_cast<double>(i));
      for (int k = 0; k < 3; ++k) tab[static_cast<std::size_t>(k)][i] = std::log(avg(r, k));
    }
    auto make = [&](int k) -> std::function<double(double)> {
      const auto& v = tab[static_cast<std::size_t>(k)];
      const double slope = (v[10] - v[0]) / (10 * dl), v0 = v[0];
      auto spline = std::make_shared<boost::math::interpolators::cardinal_cubic_b_spline<double>>(v.begin(), v.end(), lr0, dl);
      const double lr1 = lr0 + dl * static_cast<double>(nt - 1);
      return [spline, slope, v0, lr0, lr1](double r) {
        if (r <= 0) return 0.0;
        const double x = std::log(r);
        if (x <= lr0) return std::exp(v0 + slope * (x - lr0));
        return std::exp((*spline)(std::min(x, lr1)));
      };
    };
    op.profile.p = make(0);
    op.profile.w = make(1);
    op.profile.q = make(2);
    op.profile.epsilon = eps;
    op.profile.p_exponent = detail::log_slope(op.profile.p, r0, r0 * 10);
    op.profile.q_exponent = ed == 0 ? 0.0 : detail::log_slope(op.profile.q, r0, r0 * 10);
    op.profile.name = "induced metric";
  }
  return op;
}

/// Grid dump r, θ..., ω, β..., Σ entries (row-major).
template <class C>
void write_metric_csv(std::ostream& os, const MetricData<C>& M, std::size_t nr = 32, std::size_t neta = 16) {
  os << "r";
  for (std::size_t k = 0; k < M.eta_dim; ++k) os << ",theta" << k + 1;
  os << ",omega";
  for (std::size_t k = 0; k < M.eta_dim; ++k) os << ",beta" << k + 1;
  for (std::size_t a = 0; a < M.eta_dim; ++a)
    for (std::size_t b = 0; b < M.eta_dim; ++b) os << ",sigma" << a + 1 << b + 1;
  os << "\n";
  const auto etas = detail::angle_grid(M.eta_dim, neta, M.angle_half_width(), C::kPeriodic);
  char buf[64];
  auto put = [&](double v) {
    std::snprintf(buf, sizeof buf, ",%.12g", v);
    os << buf;
  };
  for (std::size_t i = 1; i <= nr; ++i) {
    const double r = M.domain().epsilon * static_cast<double>(i) / static_cast<double>(nr);
    for (const auto& e : etas) {
      std::snprintf(buf, sizeof buf, "%.12g", r);
      os << buf;
      for (double v : e) put(v);
      put(M.omega_at(r, e));
      const auto b = M.beta_at(r, e);
      for (long k = 0; k < b.size(); ++k) put(b(k));
      const auto S = M.sigma_at(r, e);
      for (long a = 0; a < S.rows(); ++a)
        for (long c = 0; c < S.cols(); ++c) put(S(a, c));
      os << "\n";
    }
  }
}

template <class C>
void to_json(nlohmann::json& j, const MetricData<C>& M) {
  auto nu = nlohmann::json::array();
  for (const auto& v : M.nu) nu.push_back(format_rational(v));
  j = {{"nu", nu},
       {"omega", M.omega.to_string()},
       {"omega_min", M.omega_min},
       {"mu", format_rational(M.mu)},
       {"sigma_norm_c", M.sigma_norm_c}};
  auto b = nlohmann::json::array();
  for (const auto& s : M.beta) b.push_back(s.to_string());
  j["beta"] = b;
  auto S = nlohmann::json::array();
  for (const auto& row : M.sigma) {
    auto jr = nlohmann::json::array();
    for (const auto& s : row) jr.push_back(s.to_string());
    S.push_back(jr);
  }
  j["sigma"] = S;
}

template <class C>
void to_json(nlohmann::json& j, const NormalizedMetric<C>& N) {
  auto opt = [](double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); };
  j = {{"metric", N.metric},
       {"identity_flow", N.identity_flow},
       {"max_cross_residual", N.max_cross_residual},
       {"smallest_r", N.smallest_r},
       {"lyapunov_exponent", opt(N.lyapunov_exponent)},
       {"lyapunov_alpha", opt(N.lyapunov_alpha)},
       {"lyapunov_delta", opt(N.lyapunov_delta)},
       {"lyapunov_ok", N.lyapunov_ok}};
  if (N.sigma_hat) {
    auto S = nlohmann::json::array();
    for (const auto& row : *N.sigma_hat) {
      auto jr = nlohmann::json::array();
      for (const auto& s : row) jr.push_back(s.to_string());
      S.push_back(jr);
    }
    j["sigma_hat"] = S;
  }
}

inline void to_json(nlohmann::json& j, const ModelOperator& m) {
  j = {{"alpha", format_rational(m.alpha)},
       {"alpha_fitted", m.alpha_fitted},
       {"k", m.k},
       {"epsilon", m.epsilon},
       {"direction_exponents", m.direction_exponents},
       {"frozen_laplacian_error", m.frozen_laplacian_error},
       {"potential_bound", m.potential_bound},
       {"sigma_norm_c", m.sigma_norm_c}};
}

}  // namespace ahis
