#pragma once

// Radial discretization of the model operator and of −Δ_g on a graded grid,
// eigenpairs per angular mode, and the localized heat trace
// tr(χ e^{−tH}) = Σ_modes mult Σ_j e^{−tλ_j} ⟨φ_j, χ φ_j⟩.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>
#include <lapacke.h>

#include "ahis/error.hpp"
#include "ahis/metric.hpp"

namespace ahis {

struct AngularMode {
  double mu = 0;             // eigenvalue of −Δ on the angular torus
  int multiplicity = 1;
  int label = 0;             // |m|² for k ≥ 2, |m| for k = 1
};

/// Spectrum of −Δ on T^k = (R/2πZ)^k with |m|_∞ ≤ M, grouped by |m|².
inline std::vector<AngularMode> torus_modes(std::size_t k, int M) {
  if (k == 0) return {AngularMode{0, 1, 0}};
  if (k == 1) {
    std::vector<AngularMode> out;
    for (int m = 0; m <= M; ++m) out.push_back({static_cast<double>(m * m), m == 0 ? 1 : 2, m});
    return out;
  }
  std::map<int, int> count;
  std::vector<int> idx(k, -M);
  while (true) {
    int s = 0;
    for (int v : idx) s += v * v;
    ++count[s];
    std::size_t p = 0;
    while (p < k && idx[p] == M) idx[p++] = -M;
    if (p == k) break;
    ++idx[p];
  }
  std::vector<AngularMode> out;
  for (const auto& [s, c] : count) out.push_back({static_cast<double>(s), c, s});
  return out;
}

struct DiscretizeOptions {
  std::size_t n_r = 512;
  int modes = 32;        // angular cutoff M
  double grading = 2.0;  // r_i = ε (i/N)^γ
};

/// Symmetric tridiagonal block of one angular mode in the mass-normalized
/// basis: T = M^{−1/2} K M^{−1/2}.
struct ModeBlock {
  std::size_t first = 1;          // first free node (0 when r = 0 is in the form domain)
  std::vector<double> diag, off;  // T
  std::vector<double> mass;       // lumped mass of the free nodes
};

struct DiscretizedOperator {
  RadialProfile profile;
  double alpha = 0;
  std::size_t k = 0;
  double epsilon = 0;
  DiscretizeOptions options;
  std::vector<double> r;  // nodes r_0 = 0 < ... < r_N = ε
  std::vector<AngularMode> modes;
  std::vector<double> p_bar;   // element averages of p
  std::vector<double> w_mass;  // ∫ w φ_i
  std::vector<double> q_node;  // q(r_i)·ℓ_i (nodal quadrature)
  std::vector<double> q_mass;  // ∫ q φ_i (used at r = 0)

  std::size_t n() const { return r.size() - 1; }

  /// r = 0 belongs to the form domain iff p ~ r^a with a ≥ 1 and the angular
  /// term is integrable there.
  bool includes_origin(double mu) const {
    if (profile.p_exponent < 1 - 1e-3) return false;
    return mu == 0 || profile.q_exponent > -1 + 1e-3;
  }

  ModeBlock block(double mu) const {
    ModeBlock b;
    const std::size_t N = n();
    b.first = includes_origin(mu) ? 0 : 1;
    const std::size_t m = N - b.first;  // free nodes first..N−1
    std::vector<double> kd(m, 0.0), ko(m > 0 ? m - 1 : 0, 0.0);
    for (std::size_t e = 0; e < N; ++e) {
      const double h = r[e + 1] - r[e];
      const double s = p_bar[e] / h;
      const long i = static_cast<long>(e) - static_cast<long>(b.first), j = i + 1;
      if (i >= 0 && i < static_cast<long>(m)) kd[static_cast<std::size_t>(i)] += s;
      if (j >= 0 && j < static_cast<long>(m)) kd[static_cast<std::size_t>(j)] += s;
      if (i >= 0 && j < static_cast<long>(m)) ko[static_cast<std::size_t>(i)] -= s;
    }
    b.mass.resize(m);
    for (std::size_t i = 0; i < m; ++i) {
      const std::size_t node = i + b.first;
      b.mass[i] = w_mass[node];
      if (mu != 0) kd[i] += mu * (node == 0 ? q_mass[0] : q_node[node]);
    }
    b.diag.resize(m);
    b.off.resize(ko.size());
    for (std::size_t i = 0; i < m; ++i) b.diag[i] = kd[i] / b.mass[i];
    for (std::size_t i = 0; i + 1 < m; ++i) b.off[i] = ko[i] / std::sqrt(b.mass[i] * b.mass[i + 1]);
    return b;
  }
};

namespace detail {

/// ∫_a^b f by 5-point Gauss–Legendre.
inline double gauss5(const std::function<double(double)>& f, double a, double b) {
  static const double x[5] = {0.0, -0.5384693101056831, 0.5384693101056831, -0.9061798459386640, 0.9061798459386640};
  static const double w[5] = {0.5688888888888889, 0.4786286704993665, 0.4786286704993665, 0.2369268850561891,
                              0.2369268850561891};
  const double c = 0.5 * (a + b), h = 0.5 * (b - a);
  double s = 0;
  for (int i = 0; i < 5; ++i) s += w[i] * f(c + h * x[i]);
  return s * h;
}

struct Eigenpairs {
  std::vector<double> values;
  std::vector<double> vectors;  // column-major, n × count
  std::size_t n = 0;
};

/// All eigenpairs, or only those with eigenvalue ≤ `upper` when it is finite.
inline Eigenpairs tridiagonal_eigen(std::vector<double> d, std::vector<double> e, bool want_vectors,
                                    double upper = std::numeric_limits<double>::infinity()) {
  Eigenpairs out;
  const auto n = static_cast<lapack_int>(d.size());
  out.n = d.size();
  if (n == 0) return out;
  e.resize(d.size(), 0.0);
  out.values.resize(d.size());
  if (want_vectors) out.vectors.resize(d.size() * d.size());
  std::vector<lapack_int> isuppz(2 * d.size());
  lapack_int found = 0;
  lapack_logical tryrac = 1;
  const bool ranged = std::isfinite(upper);
  const lapack_int info =
      LAPACKE_dstemr(LAPACK_COL_MAJOR, want_vectors ? 'V' : 'N', ranged ? 'V' : 'A', n, d.data(), e.data(),
                     ranged ? -std::numeric_limits<double>::max() : 0.0, ranged ? upper : 0.0, 0, 0, &found,
                     out.values.data(), want_vectors ? out.vectors.data() : nullptr, n, n, isuppz.data(), &tryrac);
  if (info != 0) throw NumericalError("tridiagonal eigensolver failed (info " + std::to_string(info) + ")");
  out.values.resize(static_cast<std::size_t>(found));
  return out;
}

/// Smallest eigenvalue by bisection.
inline double lowest_eigenvalue(const std::vector<double>& d, const std::vector<double>& e) {
  const auto n = static_cast<lapack_int>(d.size());
  if (n == 0) throw DomainError("empty tridiagonal block");
  std::vector<double> ee(e.begin(), e.end());
  ee.resize(d.size(), 0.0);
  std::vector<double> w(d.size());
  std::vector<lapack_int> iblock(d.size()), isplit(d.size());
  lapack_int m = 0, nsplit = 0;
  const lapack_int info = LAPACKE_dstebz('I', 'E', n, 0.0, 0.0, 1, 1, 0.0, d.data(), ee.data(), &m, &nsplit, w.data(),
                                         iblock.data(), isplit.data());
  if (info != 0 || m < 1) throw NumericalError("bisection for the lowest eigenvalue failed");
  return w[0];
}

}  // namespace detail

/// Discretizes −(p u′)′ + μ q u = λ w u on (0, ε), Dirichlet at ε and the
/// Friedrichs condition at 0, for each angular mode μ of T^k.
inline DiscretizedOperator discretize_profile(const RadialProfile& profile, double alpha, std::size_t k,
                                              const DiscretizeOptions& opts) {
  if (opts.n_r < 64) throw DomainError("radial grid needs at least 64 intervals");
  if (!(profile.epsilon > 0)) throw DomainError("radial extent must be positive");
  if (!(opts.grading >= 1)) throw DomainError("grading exponent must be at least 1");
  DiscretizedOperator D;
  D.profile = profile;
  D.alpha = alpha;
  D.k = k;
  D.epsilon = profile.epsilon;
  D.options = opts;
  const std::size_t N = opts.n_r;
  D.r.resize(N + 1);
  for (std::size_t i = 0; i <= N; ++i)
    D.r[i] = profile.epsilon * std::pow(static_cast<double>(i) / static_cast<double>(N), opts.grading);
  D.modes = torus_modes(k, opts.modes);
  D.p_bar.resize(N);
  D.w_mass.assign(N + 1, 0.0);
  D.q_node.assign(N + 1, 0.0);
  D.q_mass.assign(N + 1, 0.0);
  for (std::size_t e = 0; e < N; ++e) {
    const double a = D.r[e], b = D.r[e + 1], h = b - a;
    D.p_bar[e] = detail::gauss5(profile.p, a, b) / h;
    D.w_mass[e] += detail::gauss5([&](double x) { return profile.w(x) * (b - x) / h; }, a, b);
    D.w_mass[e + 1] += detail::gauss5([&](double x) { return profile.w(x) * (x - a) / h; }, a, b);
  }
  D.q_mass[0] = detail::gauss5([&](double x) { return profile.q(x) * (D.r[1] - x) / D.r[1]; }, 0.0, D.r[1]);
  for (std::size_t i = 1; i < N; ++i) D.q_node[i] = profile.q(D.r[i]) * 0.5 * (D.r[i + 1] - D.r[i - 1]);
  for (std::size_t i = 0; i < N; ++i)
    if (!(D.w_mass[i] > 0)) throw NumericalError("non-positive mass on the radial grid");
  return D;
}

/// Discretization of the pure model −∂_r² − Δ_k/r^α on (0, ε).
inline DiscretizedOperator discretize_model(double alpha, std::size_t k, double epsilon, const DiscretizeOptions& opts = {}) {
  return discretize_profile(model_profile(alpha, epsilon), alpha, k, opts);
}

/// Discretization of −Δ_g from the angle-averaged induced metric.
inline DiscretizedOperator discretize_model(const ModelOperator& op, const DiscretizeOptions& opts = {}) {
  if (!op.profile.p) throw DomainError("model operator carries no radial profile");
  return discretize_profile(op.profile, to_double(op.alpha), op.k, opts);
}

/// Lowest `count` eigenvalues of the block of angular mode `mode`.
inline std::vector<double> mode_eigenvalues(const DiscretizedOperator& D, std::size_t mode, std::size_t count) {
  if (mode >= D.modes.size()) throw DomainError("angular mode index out of range");
  const auto b = D.block(D.modes[mode].mu);
  auto ev = detail::tridiagonal_eigen(b.diag, b.off, false).values;
  if (ev.size() > count) ev.resize(count);
  return ev;
}

/// Lowest `count` eigenvalues at N and 2N combined by Richardson
/// extrapolation (second order).
inline std::vector<double> mode_eigenvalues_extrapolated(const DiscretizedOperator& D, std::size_t mode, std::size_t count) {
  auto opts = D.options;
  opts.n_r *= 2;
  const auto fine = discretize_profile(D.profile, D.alpha, D.k, opts);
  const auto a = mode_eigenvalues(D, mode, count), b = mode_eigenvalues(fine, mode, count);
  std::vector<double> out(std::min(a.size(), b.size()));
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = (4 * b[i] - a[i]) / 3;
  return out;
}

/// Smooth radial cutoff: 1 on [0, a], 0 on [b, ε], C³ polynomial step between.
struct RadialCutoff {
  double a = 0, b = 0;
  bool identity = true;

  static RadialCutoff one() { return {}; }
  static RadialCutoff bump(double a, double b) {
    if (!(0 < a && a < b)) throw DomainError("cutoff needs 0 < a < b");
    return {a, b, false};
  }

  double operator()(double r) const {
    if (identity || r <= a) return 1.0;
    if (r >= b) return 0.0;
    const double s = (r - a) / (b - a);
    return 1 - s * s * s * s * (35 - 84 * s + 70 * s * s - 20 * s * s * s);
  }
};

inline std::vector<double> geometric_grid(double t0, double t1, std::size_t n) {
  if (!(t0 > 0 && t1 > t0) || n < 2) throw DomainError("geometric grid needs 0 < t0 < t1 and n ≥ 2");
  std::vector<double> t(n);
  for (std::size_t i = 0; i < n; ++i) t[i] = t0 * std::pow(t1 / t0, static_cast<double>(i) / static_cast<double>(n - 1));
  return t;
}

struct HeatTraceSamples {
  std::vector<double> t;
  std::vector<double> values;         // Richardson-extrapolated when requested
  std::vector<double> values_coarse;  // N
  std::vector<double> values_fine;    // 2N (empty without extrapolation)
  double convergence = 0;             // max relative change from N to 2N
  double tail_bound = 0;              // relative bound on the omitted modes
  RadialCutoff cutoff;
};

namespace detail {

inline std::vector<double> heat_values(const DiscretizedOperator& D, const std::vector<double>& t, const RadialCutoff& chi,
                                       double& tail_rel) {
  std::vector<double> total(t.size(), 0.0), last(t.size(), 0.0), prev(t.size(), 0.0);
  // Eigenvalues above this level contribute below e^{-60} relative to the ground state.
  const auto b0 = D.block(D.modes.front().mu);
  const double upper = std::max(0.0, lowest_eigenvalue(b0.diag, b0.off)) + 60 / *std::min_element(t.begin(), t.end());
  for (std::size_t mi = 0; mi < D.modes.size(); ++mi) {
    const auto& mode = D.modes[mi];
    auto b = D.block(mode.mu);
    // Nodes where the angular potential alone exceeds the eigenvalue range by
    // a wide margin carry exponentially small eigenfunctions; cutting them
    // keeps the block's dynamic range within what the solver resolves.
    if (mode.mu != 0) {
      std::size_t cut = 0;
      for (std::size_t i = 0; i < b.diag.size(); ++i) {
        const std::size_t node = i + b.first;
        const double v = mode.mu * (node == 0 ? D.q_mass[0] : D.q_node[node]) / b.mass[i];
        if (v > 1e4 * upper) cut = i + 1;
      }
      if (cut >= b.diag.size()) continue;
      if (cut > 0) {
        b.diag.erase(b.diag.begin(), b.diag.begin() + static_cast<long>(cut));
        b.off.erase(b.off.begin(), b.off.begin() + static_cast<long>(std::min(cut, b.off.size())));
        b.mass.erase(b.mass.begin(), b.mass.begin() + static_cast<long>(cut));
        b.first += cut;
      }
    }
    const auto ep = tridiagonal_eigen(b.diag, b.off, !chi.identity, upper);
    std::vector<double> weight(ep.values.size(), 1.0);
    if (!chi.identity) {
      std::vector<double> cr(ep.n);
      for (std::size_t i = 0; i < ep.n; ++i) cr[i] = chi(D.r[i + b.first]);
      for (std::size_t j = 0; j < ep.values.size(); ++j) {
        double s = 0;
        const double* v = ep.vectors.data() + j * ep.n;
        for (std::size_t i = 0; i < ep.n; ++i) s += cr[i] * v[i] * v[i];
        weight[j] = s;
      }
    }
    prev = last;
    for (std::size_t ti = 0; ti < t.size(); ++ti) {
      double s = 0;
      for (std::size_t j = 0; j < ep.values.size(); ++j) s += weight[j] * std::exp(-t[ti] * ep.values[j]);
      last[ti] = mode.multiplicity * s;
      total[ti] += last[ti];
    }
    // Later modes have larger eigenvalues; stop once they no longer register.
    bool negligible = mi >= 2;
    for (std::size_t ti = 0; ti < t.size() && negligible; ++ti) negligible = last[ti] <= 1e-17 * total[ti];
    if (negligible) break;
  }
  tail_rel = 0;
  for (std::size_t ti = 0; ti < t.size(); ++ti) {
    if (D.modes.size() < 2 || last[ti] == 0) continue;
    const double rho = prev[ti] > 0 ? last[ti] / prev[ti] : 1.0;
    const double tail = rho < 1 ? last[ti] * rho / (1 - rho) : std::numeric_limits<double>::infinity();
    tail_rel = std::max(tail_rel, tail / total[ti]);
  }
  return total;
}

}  // namespace detail

/// Localized heat trace on a time grid. With `extrapolate` the grid is
/// doubled and the two traces are combined by Richardson extrapolation.
inline HeatTraceSamples heat_trace(const DiscretizedOperator& D, const std::vector<double>& t, const RadialCutoff& chi,
                                   bool extrapolate = true, double tail_tol = 1e-10) {
  if (t.empty()) throw DomainError("empty time grid");
  for (double v : t)
    if (!(v > 0)) throw DomainError("heat trace times must be positive");
  HeatTraceSamples out;
  out.t = t;
  out.cutoff = chi;
  double tail = 0;
  out.values_coarse = detail::heat_values(D, t, chi, tail);
  out.tail_bound = tail;
  if (extrapolate) {
    auto opts = D.options;
    opts.n_r *= 2;
    const auto fine = discretize_profile(D.profile, D.alpha, D.k, opts);
    double tail2 = 0;
    out.values_fine = detail::heat_values(fine, t, chi, tail2);
    out.tail_bound = std::max(out.tail_bound, tail2);
    out.values.resize(t.size());
    for (std::size_t i = 0; i < t.size(); ++i) {
      out.values[i] = (4 * out.values_fine[i] - out.values_coarse[i]) / 3;
      out.convergence = std::max(out.convergence, std::fabs(out.values_fine[i] - out.values_coarse[i]) / std::fabs(out.values_fine[i]));
    }
  } else {
    out.values = out.values_coarse;
  }
  if (out.tail_bound > tail_tol)
    throw NumericalError("angular mode cutoff insufficient: relative tail " + std::to_string(out.tail_bound));
  return out;
}

/// ∫ χ dA for the angle-averaged profile: 2π ∫ χ w dr (times (2π)^k).
inline double weighted_area(const RadialProfile& profile, std::size_t k, const RadialCutoff& chi, std::size_t n = 4000) {
  double s = 0;
  const double eps = profile.epsilon;
  for (std::size_t i = 0; i < n; ++i) {
    // Substitution r = ε u² resolves the algebraic behavior at 0.
    const double u0 = static_cast<double>(i) / static_cast<double>(n), u1 = static_cast<double>(i + 1) / static_cast<double>(n);
    s += detail::gauss5([&](double u) { const double r = eps * u * u; return chi(r) * profile.w(r) * 2 * eps * u; }, u0, u1);
  }
  return s * std::pow(2 * std::numbers::pi, static_cast<double>(k));
}

inline void to_json(nlohmann::json& j, const HeatTraceSamples& h) {
  j = {{"t", h.t},
       {"values", h.values},
       {"values_coarse", h.values_coarse},
       {"values_fine", h.values_fine},
       {"convergence", h.convergence},
       {"tail_bound", h.tail_bound},
       {"cutoff", h.cutoff.identity ? nlohmann::json("identity") : nlohmann::json({{"a", h.cutoff.a}, {"b", h.cutoff.b}})}};
}

inline void write_heat_csv(std::ostream& os, const HeatTraceSamples& h) {
  os << "t,trace,trace_coarse\n";
  char buf[96];
  for (std::size_t i = 0; i < h.t.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.12g,%.15g,%.15g\n", h.t[i], h.values[i], h.values_coarse[i]);
    os << buf;
  }
}

}  // namespace ahis
