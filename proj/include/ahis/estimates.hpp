#pragma once

// Numerical surrogates for the a priori estimates of the model operator:
// the basic estimate ‖Hφ‖² ≥ ‖∂_r²φ‖² + c‖Δ r^{−α}φ‖² − B‖φ‖² and the
// decay of r^{−β} Δ ∂_r^d R(λ) along the ray Re λ = −|Im λ|.

#include <cmath>
#include <complex>
#include <cstddef>
#include <random>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SVD>
#include <json.hpp>

#include "ahis/error.hpp"
#include "ahis/expansion.hpp"
#include "ahis/rational.hpp"
#include "ahis/roots.hpp"
#include "ahis/spectral.hpp"

namespace ahis {

namespace detail {

/// Angular potential of a mode block in mass-normalized coordinates.
inline std::vector<double> block_potential(const DiscretizedOperator& D, const ModeBlock& b, double mu) {
  std::vector<double> v(b.diag.size(), 0.0);
  if (mu == 0) return v;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const std::size_t node = i + b.first;
    v[i] = mu * (node == 0 ? D.q_mass[0] : D.q_node[node]) / b.mass[i];
  }
  return v;
}

inline Eigen::VectorXd tridiag_apply(const ModeBlock& b, const std::vector<double>& diag, const Eigen::VectorXd& u) {
  const long n = u.size();
  Eigen::VectorXd out(n);
  for (long i = 0; i < n; ++i) {
    double s = diag[static_cast<std::size_t>(i)] * u(i);
    if (i > 0) s += b.off[static_cast<std::size_t>(i - 1)] * u(i - 1);
    if (i + 1 < n) s += b.off[static_cast<std::size_t>(i)] * u(i + 1);
    out(i) = s;
  }
  return out;
}

}  // namespace detail

struct BasicEstimateReport {
  double c = 0, B = 0;
  bool found = false;
  std::size_t samples = 0;
  double min_margin = 0;  // min over samples of the normalized margin at (c, B)
  std::vector<double> c_grid, B_grid;
};

/// Searches (c, B) on a fixed grid, largest c first, then smallest B, such
/// that ‖Hφ‖² + B‖φ‖² − ‖∂_r²φ‖² − c‖Δ r^{−α}φ‖² ≥ 0 for all samples φ.
/// Samples are random combinations of the low eigenvectors of random angular
/// modes (finite combinations lie in the form domain).
inline BasicEstimateReport basic_estimate_check(const DiscretizedOperator& D, std::size_t samples = 50, unsigned seed = 7,
                                                std::size_t components = 64) {
  if (D.modes.size() < 2) throw DomainError("basic estimate needs at least one non-constant angular mode");
  BasicEstimateReport rep;
  rep.samples = samples;
  rep.c_grid = {0.5, 0.25, 0.125, 0.0625, 0.03125, 0.015625};
  rep.B_grid = {0.0};
  for (int e = 0; e <= 6; ++e) rep.B_grid.push_back(std::pow(10.0, e));

  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(1, D.modes.size() - 1);
  std::normal_distribution<double> gauss(0.0, 1.0);
  struct Norms {
    double h, n, kin, pot;
  };
  std::vector<Norms> data;
  for (std::size_t s = 0; s < samples; ++s) {
    const auto& mode = D.modes[pick(rng)];
    const auto b = D.block(mode.mu);
    const auto V = detail::block_potential(D, b, mode.mu);
    std::vector<double> kin(b.diag.size());
    for (std::size_t i = 0; i < kin.size(); ++i) kin[i] = b.diag[i] - V[i];
    const auto ep = detail::tridiagonal_eigen(b.diag, b.off, true);
    const std::size_t n = ep.n, m = std::min(components, ep.values.size());
    Eigen::VectorXd u = Eigen::VectorXd::Zero(static_cast<long>(n));
    for (std::size_t j = 0; j < m; ++j)
      u += gauss(rng) * Eigen::Map<const Eigen::VectorXd>(ep.vectors.data() + j * n, static_cast<long>(n));
    const Eigen::VectorXd Hu = detail::tridiag_apply(b, b.diag, u), Ku = detail::tridiag_apply(b, kin, u);
    Eigen::VectorXd Vu(static_cast<long>(n));
    for (std::size_t i = 0; i < n; ++i) Vu(static_cast<long>(i)) = V[i] * u(static_cast<long>(i));
    data.push_back({Hu.squaredNorm(), u.squaredNorm(), Ku.squaredNorm(), Vu.squaredNorm()});
  }
  for (double c : rep.c_grid) {
    for (double B : rep.B_grid) {
      double worst = std::numeric_limits<double>::infinity();
      for (const auto& d : data) worst = std::min(worst, (d.h + B * d.n - d.kin - c * d.pot) / d.h);
      if (worst >= 0) {
        rep.c = c;
        rep.B = B;
        rep.found = true;
        rep.min_margin = worst;
        return rep;
      }
    }
  }
  return rep;
}

struct ResolventDecayReport {
  Rational beta = 0;
  int d = 0;
  double predicted = 0;
  double fitted = 0;
  std::vector<double> lambda_abs, norms;
};

/// ‖r^{−β} Δ ∂_r^d R(λ)‖ for λ = |λ| e^{3πi/4}, maximized over the angular
/// modes of D, with the log-log slope over the given |λ| grid.
inline ResolventDecayReport resolvent_decay_check(const DiscretizedOperator& D, const Rational& beta, int d,
                                                  const std::vector<double>& lambda_abs) {
  if (d < 0 || d > 2) throw DomainError("resolvent decay check supports d = 0, 1, 2");
  if (lambda_abs.size() < 2) throw DomainError("resolvent decay check needs at least two |lambda| values");
  if (!(D.alpha > 0)) throw DomainError("resolvent decay check needs a positive model exponent");
  using cd = std::complex<double>;
  ResolventDecayReport rep;
  rep.beta = beta;
  rep.d = d;
  rep.predicted = to_double(resolvent_decay_exponent(beta, d, rationalize(D.alpha, 64)));
  rep.lambda_abs = lambda_abs;
  const double b = to_double(beta);
  std::vector<double> lx, ly;
  for (double L : lambda_abs) {
    const cd lam = L * std::exp(cd(0, 0.75 * std::numbers::pi));
    double best = 0;
    for (const auto& mode : D.modes) {
      if (mode.mu == 0) continue;
      const auto blk = D.block(mode.mu);
      const long n = static_cast<long>(blk.diag.size());
      Eigen::MatrixXcd A = Eigen::MatrixXcd::Zero(n, n);
      for (long i = 0; i < n; ++i) {
        A(i, i) = blk.diag[static_cast<std::size_t>(i)] - lam;
        if (i + 1 < n) A(i, i + 1) = A(i + 1, i) = blk.off[static_cast<std::size_t>(i)];
      }
      const Eigen::MatrixXcd X = A.partialPivLu().inverse();
      auto node_r = [&](long i) { return D.r[static_cast<std::size_t>(i) + blk.first]; };
      Eigen::MatrixXcd Bm;
      if (d == 0) {
        Bm = X;
        for (long i = 0; i < n; ++i) Bm.row(i) *= mode.mu * std::pow(node_r(i), -b);
      } else if (d == 1) {
        // Element derivatives of φ = M^{−1/2}u, L²-weighted by √h.
        Eigen::MatrixXcd Phi = X;
        for (long i = 0; i < n; ++i) Phi.row(i) /= std::sqrt(blk.mass[static_cast<std::size_t>(i)]);
        const long first = static_cast<long>(blk.first);
        const long ne = n + first;  // elements up to r = ε
        Bm = Eigen::MatrixXcd::Zero(ne, n);
        for (long e = 0; e < ne; ++e) {
          const double ra = D.r[static_cast<std::size_t>(e)], rb = D.r[static_cast<std::size_t>(e + 1)], h = rb - ra;
          const long i0 = e - first, i1 = e + 1 - first;
          Eigen::RowVectorXcd row = Eigen::RowVectorXcd::Zero(n);
          if (i1 >= 0 && i1 < n) row += Phi.row(i1);
          if (i0 >= 0 && i0 < n) row -= Phi.row(i0);
          Bm.row(e) = row * (mode.mu * std::pow(0.5 * (ra + rb), -b) / std::sqrt(h));
        }
      } else {
        const auto V = detail::block_potential(D, blk, mode.mu);
        Eigen::MatrixXcd K = Eigen::MatrixXcd::Zero(n, n);
        for (long i = 0; i < n; ++i) {
          K(i, i) = blk.diag[static_cast<std::size_t>(i)] - V[static_cast<std::size_t>(i)];
          if (i + 1 < n) K(i, i + 1) = K(i + 1, i) = blk.off[static_cast<std::size_t>(i)];
        }
        Bm = K * X;
        for (long i = 0; i < n; ++i) Bm.row(i) *= mode.mu * std::pow(node_r(i), -b);
      }
      Eigen::BDCSVD<Eigen::MatrixXcd> svd(Bm);
      best = std::max(best, svd.singularValues()(0));
    }
    rep.norms.push_back(best);
    lx.push_back(std::log(L));
    ly.push_back(std::log(best));
  }
  rep.fitted = linear_fit(lx, ly).first;
  return rep;
}

inline void to_json(nlohmann::json& j, const BasicEstimateReport& r) {
  j = {{"c", r.c}, {"B", r.B}, {"found", r.found}, {"samples", r.samples}, {"min_margin", r.min_margin}};
}

inline void to_json(nlohmann::json& j, const ResolventDecayReport& r) {
  j = {{"beta", format_rational(r.beta)},
       {"d", r.d},
       {"predicted", r.predicted},
       {"fitted", r.fitted},
       {"lambda_abs", r.lambda_abs},
       {"norms", r.norms}};
}

}  // namespace ahis
