// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <boost/math/special_functions/bessel.hpp>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <random>
#include <set>
#include <sstream>
#include <string>

#include "ahis/ahis.hpp"
#include "newton_oracle.hpp"

using namespace ahis;

namespace {

constexpr double kPi = std::numbers::pi;

struct Outcome {
  bool pass = false;
  std::string detail;
};

class Clock {
 public:
  double seconds() const { return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0_).count(); }

 private:
  std::chrono::steady_clock::time_point t0_ = std::chrono::steady_clock::now();
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

Polynomial random_sparse(std::mt19937_64& rng, std::size_t dim, int terms) {
  std::uniform_int_distribution<int> deg(0, 5), coef(-4, 4);
  Polynomial p(dim);
  for (int attempt = 0; attempt < 200 && p.size() < static_cast<std::size_t>(terms); ++attempt) {
    std::vector<int> e(dim);
    for (auto& x : e) x = deg(rng);
    if (std::all_of(e.begin(), e.end(), [](int x) { return x == 0; })) continue;
    const int c = coef(rng);
    p.add_term(ExponentVector(e), c == 0 ? 1 : c);
  }
  return p;
}

Outcome newton_oracle() {
  Clock clk;
  std::mt19937_64 rng(20240601);
  int mismatches = 0;
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t dim = 1 + trial % 4;
    const auto f = random_sparse(rng, dim, 1 + static_cast<int>(rng() % 20));
    std::set<std::set<std::vector<int>>> got;
    for (const auto& face : newton_diagram(f).faces) {
      std::set<std::vector<int>> vs;
      for (const auto& v : face.vertices) vs.insert(v.entries());
      got.insert(vs);
    }
    if (got != oracle::maximal_compact_faces(f)) ++mismatches;
  }
  const double s = clk.seconds();
  return {mismatches == 0 && s < 10, fmt("%d/50 mismatches, %.2f s", mismatches, s)};
}

Outcome quasihomogeneity() {
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<int> num(-9, 9), den(1, 7), base(2, 5);
  std::uniform_real_distribution<double> lam(0.2, 3.0), xs(-1.0, 1.0);
  std::size_t faces = 0, exact_fail = 0;
  double worst = 0;
  for (const char* text : {"x1^2 - x2^3 - x2^4", "x1^3 + x1 x2 + x2^3", "x1^2 + x2^2 - x3^3 - x3^5",
                           "x1^2 + x2^3 + x3^5 + x1 x2 x3", "x1^2 x2^2 + x1^5 + x2^5"}) {
    const auto f = read_polynomial(text);
    for (const auto& face : newton_diagram(f).faces) {
      ++faces;
      const auto& w = face.weight;
      if (!(euler_apply(w, face.face_poly) - face.face_poly * w.degree).is_zero()) ++exact_fail;
      // λ = s^L with L the common denominator of σ makes every λ^{σ_j} rational.
      long L = 1;
      for (const auto& s : w.sigma) L = std::lcm(L, boost::multiprecision::denominator(s).convert_to<long>());
      for (int k = 0; k < 100; ++k) {
        const Rational s(1, base(rng));
        std::vector<Rational> x(f.dim()), sx(f.dim());
        for (std::size_t j = 0; j < x.size(); ++j) {
          x[j] = Rational(num(rng), den(rng));
          const Rational e = w.sigma[j] * L;
          sx[j] = x[j] * pow(s, boost::multiprecision::numerator(e).convert_to<unsigned>());
        }
        const Rational me = w.degree * L;
        const Rational lhs = face.face_poly.evaluate_exact(sx);
        const Rational rhs = pow(s, boost::multiprecision::numerator(me).convert_to<unsigned>()) * face.face_poly.evaluate_exact(x);
        if (lhs != rhs) ++exact_fail;

        const double l = lam(rng);
        std::vector<double> xd(f.dim());
        for (auto& v : xd) v = xs(rng);
        const double a = face.face_poly.evaluate(scaling_apply(w, l, xd));
        const double b = std::pow(l, to_double(w.degree)) * face.face_poly.evaluate(xd);
        worst = std::max(worst, std::fabs(a - b) / std::max(1.0, std::fabs(b)));
      }
    }
  }
  return {exact_fail == 0 && worst <= 1e-12, fmt("%zu faces, %zu exact failures, float rel err %.2e", faces, exact_fail, worst)};
}

Outcome puiseux_composition() {
  const CubeDomain d{0, 1.0, 0.5};
  const auto F = PSeries::r_power(d, 6, 1, 1);
  const auto G = compose_analytic(AnalyticFunction::binomial(Rational(1, 2), 3), std::vector<PSeries>{F});
  const std::vector<Rational> exact{1, Rational(1, 2), Rational(-1, 8), Rational(1, 16)};
  bool coeffs = G.size() == exact.size();
  int l = 0;
  for (const auto& [q, c] : G.terms()) coeffs = coeffs && q == l && c.constant_term() == exact[static_cast<std::size_t>(l++)];
  double worst = 0;
  for (int i = 0; i < 100; ++i) {
    const double r = 0.5 * i / 99.0;
    worst = std::max(worst, std::fabs(G.evaluate(r) - std::sqrt(1 + r)));
  }
  return {coeffs && worst <= G.tail_bound(), fmt("coefficients %s, max error %.3e, tail bound %.3e", coeffs ? "exact" : "wrong", worst, G.tail_bound())};
}

struct CuspRun {
  Parametrization P;
  double seconds;
};

CuspRun cusp_parametrization() {
  Clock clk;
  const auto f = parse_polynomial("x1^2 - x2^3 - x2^4", 2);
  const auto face = newton_diagram(f).faces.at(0);
  const auto charts = link_charts(face, f);
  ParametrizeOptions opts;
  opts.q_max = 3;
  auto P = newton_solve_series(f, face, detail::preferred_chart(charts), opts);
  return {std::move(P), clk.seconds()};
}

Outcome newton_scheme(const CuspRun& run) {
  // y^{3/2}(1+y)^{1/2}: binomial recurrence c_{l+1} = c_l (1/2 − l)/(l + 1).
  std::vector<double> oracle{1.0};
  for (int l = 0; l < 3; ++l) oracle.push_back(oracle.back() * (0.5 - l) / (l + 1));
  const auto x1 = run.P.component_series(0);
  double err = 0;
  for (int l = 0; l < 4; ++l) err = std::max(err, std::fabs(to_double(x1.coefficient(Rational(3 + 2 * l, 2)).constant_term()) - oracle[static_cast<std::size_t>(l)]));
  const double res = run.P.residual_certificate;
  return {err <= 1e-8 && res <= 1e-10 && run.seconds < 5, fmt("coefficient error %.2e, residual %.2e, %.2f s", err, res, run.seconds)};
}

Outcome contraction(const CuspRun& run) {
  const auto& T = run.P.telemetry;
  bool bound = T.c < 1;
  for (std::size_t n = 0; n < T.correction_norms.size(); ++n) {
    const double k = static_cast<double>(n + 1);
    bound = bound && T.correction_norms[n] <= T.kappa * k * k * std::pow(T.c, k) * (1 + 1e-12);
  }
  return {T.max_ratio <= 0.5 && bound,
          fmt("max ratio %.3g, kappa %.3g, c %.3g, epsilon %.3g -> %.3g (%d halvings)", T.max_ratio, T.kappa, T.c, T.epsilon_initial,
              T.epsilon_used, T.halvings)};
}

Outcome metric_benchmarks() {
  Clock clk;
  double cone_err = 0, br_err = 0;
  const auto Mc = induced_metric(surface_of_revolution(1, 0.1));
  const auto Nc = remove_cross_term(Mc);
  for (double r : {0.01, 0.05, 0.1})
    for (double th : {-2.5, 0.0, 1.3}) {
      const std::vector<double> e{th};
      cone_err = std::max({cone_err, std::fabs(Mc.omega_at(r, e) - 2), std::fabs(Mc.beta_at(r, e)(0)),
                           std::fabs(Mc.sigma_at(r, e)(0, 0) - r * r), std::fabs(Nc.sigma_hat_at(r, e)(0, 0) - r * r / 2)});
    }
  const auto Mb = induced_metric(surface_of_revolution(Rational(3, 2), 0.1));
  for (double r : {0.001, 0.05, 0.1})
    for (double th : {-2.0, 0.5}) {
      const std::vector<double> e{th};
      br_err = std::max({br_err, std::fabs(Mb.omega_at(r, e) - (1 + 2.25 * r)), std::fabs(Mb.sigma_at(r, e)(0, 0) - r * r * r)});
    }
  const auto op = model_operator(remove_cross_term(Mb));
  const double s = clk.seconds();
  const bool ok = cone_err <= 1e-10 && br_err <= 1e-10 && op.alpha == 3 && op.k == 1 && std::fabs(op.alpha_fitted - 3) <= 0.05 && s < 10;
  return {ok, fmt("cone err %.2e, Brieskorn err %.2e, alpha %s (fitted %.4f), k %zu, %.2f s", cone_err, br_err,
                  format_rational(op.alpha).c_str(), op.alpha_fitted, op.k, s)};
}

Outcome spectral_oracle() {
  const auto D = discretize_model(0, 0, kPi, {1024, 0, 1.0});
  const double h = heat_trace(D, {0.01}, RadialCutoff::one()).values[0];
  const auto B = discretize_model(2, 1, 1.0, {512, 1, 2.0});
  const double j = boost::math::cyl_bessel_j_zero(std::sqrt(1.25), 1);
  const double rel = std::fabs(mode_eigenvalues(B, 1, 1)[0] / (j * j) - 1);
  return {std::fabs(h - 8.36227) <= 1e-3 && rel <= 5e-3, fmt("trace(0.01) = %.6f, Bessel relative error %.2e", h, rel)};
}

Outcome fit_round_trip() {
  const auto t = geometric_grid(1e-5, 1e-1, 48);
  std::vector<double> y;
  for (double v : t) y.push_back(1 / v + 2 * std::pow(v, -1.0 / 3) * std::log(v));
  ExponentSet dict;
  for (const auto& [z, l] : std::vector<std::pair<Rational, unsigned>>{{-1, 0}, {Rational(-1, 3), 1}, {0, 0}, {Rational(1, 3), 0}})
    dict.entries.push_back({z, l, 1, false, false});
  dict.cutoff = Rational(1, 3);
  const auto fit = refine_exponents(t, y, fit_power_log(t, y, dict));
  const auto* a = fit.find(Rational(-1));
  const auto* b = fit.find(Rational(-1, 3), 1);
  if (!a || !b) return {false, "generating terms not recovered"};
  const double de = std::max(std::fabs(a->exponent_fitted + 1), std::fabs(b->exponent_fitted + 1.0 / 3));
  const double dc = std::max(std::fabs(a->coeff - 1), std::fabs(b->coeff - 2));
  return {de <= 1e-3 && dc <= 1e-5 && fit.half_window_ok,
          fmt("exponent error %.2e, coefficient error %.2e, half-window change %.2e", de, dc, fit.half_window_exponent_change)};
}

struct BrieskornRun {
  HeatTraceSamples heat;
  ExponentSet predicted;
  ExpansionFit fit;
  double area = 0;
  double seconds = 0;
};

BrieskornRun brieskorn_heat() {
  Clock clk;
  const double eps = 0.1;
  const auto f = parse_polynomial("x1^2 + x2^2 - x3^3", 3);
  const auto op = model_operator(remove_cross_term(induced_metric(surface_of_revolution(Rational(3, 2), eps))));
  const auto D = discretize_model(op, {1024, 256, 2.0});
  const auto chi = RadialCutoff::bump(0.5 * eps, 0.9 * eps);
  BrieskornRun run;
  run.heat = heat_trace(D, geometric_grid(1e-4 * eps * eps, 1e-2 * eps * eps, 32), chi);
  ExponentParams p;
  p.alpha = {op.alpha};
  p.cutoff = 0;
  run.predicted = predicted_exponents(newton_diagram(f), p);
  run.fit = fit_power_log(run.heat, run.predicted);
  run.area = weighted_area(op.profile, op.k, chi);
  run.seconds = clk.seconds();
  return run;
}

Outcome singular_expansion(const BrieskornRun& run) {
  const auto* a = run.fit.find(Rational(-1));
  if (!a) return {false, "no t^-1 term in the fit"};
  const double weyl = run.area / (4 * kPi);
  const double ratio = a->coeff / weyl;
  const auto* b = run.fit.find(Rational(0));
  const auto& t = run.heat.t;
  std::vector<double> rest;
  for (std::size_t i = 0; i < t.size(); ++i) rest.push_back(run.heat.values[i] - a->coeff / t[i] - (b ? b->coeff : 0.0));
  const auto s = fit_single_exponent(t, rest, -0.95, 1.0, false);
  const double dist = run.predicted.distance(s.exponent);
  return {std::fabs(ratio - 1) <= 0.05 && dist <= 0.05 && run.seconds < 300,
          fmt("leading/(A/4pi) = %.5f, residual exponent %.4f (distance %.4f), %.1f s", ratio, s.exponent, dist, run.seconds)};
}

Outcome estimates() {
  const auto B = basic_estimate_check(discretize_model(3.0, 1, 1.0, {256, 8, 2.0}), 50, 7);
  const auto D = discretize_model(3.0, 1, 2.0, {256, 2, 2.0});
  const auto lam = geometric_grid(10.0, 1e4, 13);
  std::string detail = fmt("c = %g, B = %g", B.c, B.B);
  bool ok = B.found;
  for (const auto& [beta, d] : std::vector<std::pair<Rational, int>>{{0, 0}, {Rational(3, 2), 0}, {1, 1}}) {
    const auto r = resolvent_decay_check(D, beta, d, lam);
    ok = ok && std::fabs(r.fitted - r.predicted) <= 0.1;
    detail += fmt("; (%s,%d) %.3f vs %.3f", format_rational(beta).c_str(), d, r.fitted, r.predicted);
  }
  return {ok, detail};
}

Outcome sal_algebra(const BrieskornRun& run) {
  bool ok = true;
  const MultiplicityFunction S0{{Rational(0), 1}}, S1{{Rational(1), 1}}, S2{{Rational(2), 1}};
  ok = ok && sal_projector_apply(S0, Rational(1), {{Rational(0), 0, 5.0}}).empty();
  ok = ok && sal_projector_apply(S0, Rational(2), {{Rational(1), 0, 3.0}}) == Expansion{{Rational(1), 0, 3.0}};
  ok = ok && sal_projector_apply(S1, Rational(2), {{Rational(1), 1, 1.0}}) == Expansion{{Rational(1), 0, 1.0}};
  ok = ok && sal_convolution_exponents(S1, S2) == MultiplicityFunction{{Rational(1), 1}, {Rational(2), 1}};
  ok = ok && sal_convolution_exponents(S1, S1) == MultiplicityFunction{{Rational(1), 2}};
  std::mt19937 rng(5);
  std::uniform_int_distribution<int> num(-12, 12), lg(0, 2), mult(1, 3);
  std::uniform_real_distribution<double> c(-3, 3);
  for (int trial = 0; trial < 50 && ok; ++trial) {
    Expansion e;
    for (int k = 0; k < 5; ++k) e.push_back({Rational(num(rng), 6), static_cast<unsigned>(lg(rng)), c(rng)});
    ok = sal_projector_apply(multiplicity_of(e), Rational(100), e).empty();
    MultiplicityFunction a, b;
    for (int k = 0; k < 3; ++k) {
      a[Rational(num(rng), 4)] += static_cast<unsigned>(mult(rng));
      b[Rational(num(rng), 4)] += static_cast<unsigned>(mult(rng));
    }
    const auto ab = sal_convolution_exponents(a, b);
    ok = ok && degree(ab) == degree(a) + degree(b);
    for (const auto& [z, m] : ab) ok = ok && m == (a.count(z) ? a.at(z) : 0u) + (b.count(z) ? b.at(z) : 0u);
  }
  const auto e = run.fit.expansion();
  const auto rest = sal_projector_apply(multiplicity_of(e), Rational(10), e);
  double sup = 0;
  for (double v : run.heat.t) sup = std::max(sup, std::fabs(evaluate(rest, v)));
  return {ok && sup <= run.fit.residual,
          fmt("examples and properties %s; projected Brieskorn fit %.3e vs fit residual %.3e", ok ? "hold" : "fail", sup, run.fit.residual)};
}

Outcome guarded(const std::function<Outcome()>& f) {
  try {
    return f();
  } catch (const std::exception& e) {
    return {false, std::string("exception: ") + e.what()};
  }
}

}  // namespace

int main() {
  int failed = 0;
  auto report = [&](int n, const char* name, const Outcome& o) {
    std::printf("%s %2d %s: %s\n", o.pass ? "PASS" : "FAIL", n, name, o.detail.c_str());
    std::fflush(stdout);
    if (!o.pass) ++failed;
  };
  report(1, "newton diagram oracle", guarded(newton_oracle));
  report(2, "quasihomogeneity identities", guarded(quasihomogeneity));
  report(3, "puiseux composition certificate", guarded(puiseux_composition));
  std::optional<CuspRun> cusp;
  const auto cusp_guard = [&](auto check) {
    return guarded([&] {
      if (!cusp) cusp = cusp_parametrization();
      return check(*cusp);
    });
  };
  report(4, "newton scheme benchmark", cusp_guard(newton_scheme));
  report(5, "contraction telemetry", cusp_guard(contraction));
  report(6, "metric benchmarks", guarded(metric_benchmarks));
  report(7, "spectral oracle", guarded(spectral_oracle));
  report(8, "power-log fit round trip", guarded(fit_round_trip));
  std::optional<BrieskornRun> bk;
  const auto bk_guard = [&](auto check) {
    return guarded([&] {
      if (!bk) bk = brieskorn_heat();
      return check(*bk);
    });
  };
  report(9, "singular expansion (Brieskorn)", bk_guard(singular_expansion));
  report(10, "basic estimate and resolvent decay", guarded(estimates));
  report(11, "SAL algebra", bk_guard(sal_algebra));
  std::printf("%d/11 criteria passed\n", 11 - failed);
  return failed == 0 ? 0 : 1;
}
