#include <gtest/gtest.h>

#include <chrono>
#include <cmath>
#include <sstream>

#include "ahis/metric.hpp"

using namespace ahis;

namespace {

constexpr double kPi = std::numbers::pi;

// Metric of x(r, θ) = (r^a cos θ, r^a sin θ, r) by direct differentiation.
struct RevolutionOracle {
  double a;
  double omega(double r) const { return 1 + a * a * std::pow(r, 2 * a - 2); }
  double sigma(double r) const { return std::pow(r, 2 * a); }
};

// Finite-difference metric of a parametrization point map at (r, η).
template <class P>
void fd_metric(const P& param, double r, std::vector<double> eta, double& w, Eigen::VectorXd& b, Eigen::MatrixXd& S) {
  const double h = 1e-6 * std::max(r, 1e-3);
  const std::size_t ed = eta.size();
  auto x_r = [&](double rr) { return param.point(rr, eta); };
  const auto xp = x_r(r + h), xm = x_r(r - h);
  std::vector<double> dr(xp.size());
  for (std::size_t k = 0; k < xp.size(); ++k) dr[k] = (xp[k] - xm[k]) / (2 * h);
  std::vector<std::vector<double>> de(ed, std::vector<double>(xp.size()));
  for (std::size_t j = 0; j < ed; ++j) {
    auto ep = eta, em = eta;
    ep[j] += 1e-6;
    em[j] -= 1e-6;
    const auto a = param.point(r, ep), c = param.point(r, em);
    for (std::size_t k = 0; k < xp.size(); ++k) de[j][k] = (a[k] - c[k]) / 2e-6;
  }
  w = 0;
  for (double v : dr) w += v * v;
  b.resize(static_cast<long>(ed));
  S.resize(static_cast<long>(ed), static_cast<long>(ed));
  for (std::size_t j = 0; j < ed; ++j) {
    double s = 0;
    for (std::size_t k = 0; k < xp.size(); ++k) s += de[j][k] * dr[k];
    b(static_cast<long>(j)) = s;
    for (std::size_t l = 0; l < ed; ++l) {
      double t = 0;
      for (std::size_t k = 0; k < xp.size(); ++k) t += de[j][k] * de[l][k];
      S(static_cast<long>(j), static_cast<long>(l)) = t;
    }
  }
}

}  // namespace

TEST(InducedMetric, Cone) {
  auto P = surface_of_revolution(1, 0.1);
  auto M = induced_metric(P);
  EXPECT_EQ(M.omega.size(), 1u);
  EXPECT_TRUE(M.beta[0].is_zero());
  for (double r : {0.0, 0.03, 0.1})
    for (double th : {-3.0, 0.0, 1.2}) {
      std::vector<double> e{th};
      EXPECT_NEAR(M.omega_at(r, e), 2.0, 1e-10);
      EXPECT_NEAR(M.sigma_at(r, e)(0, 0), r * r, 1e-10);
    }
  EXPECT_NEAR(M.omega_min, 2.0, 1e-12);
  EXPECT_NEAR(M.sigma_norm_c, 1.0, 1e-10);
}

TEST(InducedMetric, BrieskornSurfaceOfRevolution) {
  auto P = surface_of_revolution(Rational(3, 2), 0.1);
  auto M = induced_metric(P);
  RevolutionOracle o{1.5};
  for (double r : {0.001, 0.05, 0.1})
    for (double th : {-2.0, 0.5}) {
      std::vector<double> e{th};
      EXPECT_NEAR(M.omega_at(r, e), o.omega(r), 1e-10);
      EXPECT_NEAR(M.omega_at(r, e), 1 + 2.25 * r, 1e-12);
      EXPECT_NEAR(M.sigma_at(r, e)(0, 0), o.sigma(r), 1e-12);
      EXPECT_NEAR(M.beta_at(r, e)(0), 0.0, 1e-14);
    }
}

TEST(InducedMetric, MatchesFiniteDifferencesOnSemiNumericChart) {
  auto f = parse_polynomial("x1^2 + x2^2 - x3^3 - x3^5", 3);
  auto face = newton_diagram(f).faces.front();
  ParametrizeOptions po;
  po.q_max = 5;
  auto P = newton_solve_series(f, face, link_solve(face, f), po);
  auto M = induced_metric(P);
  const double eps = P.domain().epsilon;
  for (double r : {0.2 * eps, 0.6 * eps, 0.9 * eps})
    for (double e0 : {-0.3, 0.0, 0.25}) {
      double w;
      Eigen::VectorXd b;
      Eigen::MatrixXd S;
      fd_metric(P, r, {e0}, w, b, S);
      std::vector<double> e{e0};
      EXPECT_NEAR(M.omega_at(r, e), w, 1e-6 * w);
      EXPECT_NEAR(M.beta_at(r, e)(0), b(0), 1e-6 * (std::fabs(b(0)) + r * r));
      EXPECT_NEAR(M.sigma_at(r, e)(0, 0), S(0, 0), 1e-6 * S(0, 0));
      EXPECT_GT(M.sigma_at(r, e)(0, 0), 0.0);
    }
}

TEST(InducedMetric, CurveHasNoAngularPart) {
  auto f = parse_polynomial("x1^2 - x2^3 - x2^4", 2);
  auto face = newton_diagram(f).faces.front();
  auto P = newton_solve_series(f, face, link_solve(face, f, {}, 1));
  auto M = induced_metric(P);
  EXPECT_EQ(M.eta_dim, 0u);
  EXPECT_TRUE(M.beta.empty());
  EXPECT_TRUE(M.sigma.empty());
  // ω = (dx1/dr)² + 1 with x1 = r^{3/2}√(1+r).
  const double r = 0.05;
  const double dx1 = 1.5 * std::sqrt(r) * std::sqrt(1 + r) + std::pow(r, 1.5) / (2 * std::sqrt(1 + r));
  EXPECT_NEAR(M.omega_at(r, {}), dx1 * dx1 + 1, 1e-8);
  auto N = remove_cross_term(M);
  auto op = model_operator(N);
  EXPECT_EQ(op.k, 0u);
}

TEST(InducedMetric, AxisTangentBranchRejected) {
  // x = r^a cos θ with a < 1 cannot occur after normalization; an axis-tangent
  // chart shows up as ω vanishing at r = 0.
  using S = PSeriesAngular;
  const CubeDomain dom{1, kPi, 0.1};
  ParametrizationT<FourierPolynomial> P;
  P.nu = {2, 2, 1};
  P.chi = {S::monomial(dom, 4, 0, FourierPolynomial::cos_mode(1, 0, 1)),
           S::monomial(dom, 4, 0, FourierPolynomial::sin_mode(1, 0, 1)), S(dom, 4)};
  EXPECT_THROW(induced_metric(P), DomainError);
}

TEST(CrossTerm, IdentityWithoutCrossTerm) {
  auto M = induced_metric(surface_of_revolution(1, 0.1));
  auto N = remove_cross_term(M);
  EXPECT_TRUE(N.identity_flow);
  ASSERT_TRUE(N.sigma_hat.has_value());
  for (double r : {0.01, 0.07}) {
    std::vector<double> th{0.4};
    EXPECT_NEAR((*N.sigma_hat)[0][0].evaluate(r, th), r * r / 2, 1e-10);
    EXPECT_NEAR(N.sigma_hat_at(r, th)(0, 0), r * r / 2, 1e-10);
  }
  EXPECT_NEAR(N.lyapunov_exponent, 2.0, 1e-6);
  EXPECT_TRUE(N.lyapunov_ok);
}

TEST(CrossTerm, SyntheticPerturbationConverges) {
  // Cone with β = r³ η: the flow solves η′ = −r η, η(r) = θ exp((ε² − r²)/2).
  const double eps = 0.5;
  const CubeDomain dom{1, 1.0, eps};
  MetricData<Polynomial> M;
  M.eta_dim = 1;
  M.nu = {1, 1, 1};
  M.omega = PSeries::constant(dom, 6, 2);
  M.beta = {PSeries::monomial(dom, 6, 3, Polynomial::variable(1, 0))};
  M.sigma = {{PSeries::r_power(dom, 6, 2)}};
  FlowOptions fo;
  fo.lines = 5;
  auto N = remove_cross_term(M, fo);
  EXPECT_FALSE(N.identity_flow);
  for (double r : {1e-4, 0.1, 0.3}) {
    std::vector<double> th{0.3};
    EXPECT_NEAR(N.flow(r, th)[0], 0.3 * std::exp((eps * eps - r * r) / 2), 1e-9);
  }
  EXPECT_LE(N.max_cross_residual, 1e-8);
  EXPECT_NEAR(N.smallest_r, 1e-4 * eps, 1e-18);
}

TEST(CrossTerm, FlowLeavingChartReported) {
  const CubeDomain dom{1, 1.0, 0.5};
  MetricData<Polynomial> M;
  M.eta_dim = 1;
  M.nu = {1, 1, 1};
  M.omega = PSeries::constant(dom, 6, 2);
  // η′ = 1/r drives η out of [−1, 1] well before r = 0.
  M.beta = {PSeries::r_power(dom, 6, 1, -1)};
  M.sigma = {{PSeries::r_power(dom, 6, 2)}};
  EXPECT_THROW(remove_cross_term(M), NumericalError);
}

TEST(ModelOperator, ConeAndBrieskorn) {
  const auto t0 = std::chrono::steady_clock::now();
  auto cone = model_operator(remove_cross_term(induced_metric(surface_of_revolution(1, 0.1))));
  EXPECT_EQ(cone.alpha, 2);
  EXPECT_EQ(cone.k, 1u);
  EXPECT_NEAR(cone.alpha_fitted, 2.0, 0.05);
  // σ = r²/2: V = (σ^{1/4})″/σ^{1/4} = −1/(4 r²).
  EXPECT_NEAR(cone.potential_bound, 0.25, 1e-3);

  auto NB = remove_cross_term(induced_metric(surface_of_revolution(Rational(3, 2), 0.1)));
  auto br = model_operator(NB);
  EXPECT_EQ(br.alpha, 3);
  EXPECT_EQ(br.k, 1u);
  EXPECT_NEAR(br.alpha_fitted, 3.0, 0.05);
  // Oracle: σ = r³/(1 + 9r/4), L = ¼ log σ, V = L″ + L′².
  double vmax = 0;
  for (int i = 0; i < 16; ++i) {
    const double r = 1e-3 * std::pow(99.0, i / 15.0);
    const double l1 = 0.75 / r - 0.5625 / (1 + 2.25 * r);
    const double l2 = -0.75 / (r * r) + 1.265625 / std::pow(1 + 2.25 * r, 2);
    vmax = std::max(vmax, std::fabs(l2 + l1 * l1) * r * r);
  }
  EXPECT_NEAR(br.potential_bound, vmax, 1e-4);
  EXPECT_LT(br.frozen_laplacian_error, 0.3);
  EXPECT_NEAR(NB.lyapunov_exponent, NB.lyapunov_alpha, 0.01);
  EXPECT_NEAR(br.profile.p_exponent, 1.5, 0.02);
  EXPECT_NEAR(br.profile.q_exponent, -1.5, 0.02);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  EXPECT_LT(secs, 10.0);
}

TEST(ModelOperator, SemiNumericSurface) {
  auto f = parse_polynomial("x1^2 + x2^2 - x3^3", 3);
  auto face = newton_diagram(f).faces.front();
  auto P = newton_solve_series(f, face, link_solve(face, f));
  auto N = remove_cross_term(induced_metric(P));
  auto op = model_operator(N);
  EXPECT_EQ(op.alpha, 3);
  EXPECT_EQ(op.k, 1u);
}

TEST(MetricCsv, Header) {
  auto M = induced_metric(surface_of_revolution(1, 0.1));
  std::ostringstream os;
  write_metric_csv(os, M, 2, 2);
  const auto s = os.str();
  EXPECT_EQ(s.substr(0, s.find('\n')), "r,theta1,omega,beta1,sigma11");
  EXPECT_EQ(std::count(s.begin(), s.end(), '\n'), 5);
}
