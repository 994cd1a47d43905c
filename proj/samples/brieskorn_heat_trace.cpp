// Heat trace of x^2 + y^2 = z^3 near the singular point, localized by a
// radial bump, with its power-log fit and the Weyl comparison.

#include <cmath>
#include <cstdio>
#include <numbers>

#include "ahis/ahis.hpp"

int main() {
  using namespace ahis;
  const double eps = 0.1;
  const auto op = model_operator(remove_cross_term(induced_metric(surface_of_revolution(Rational(3, 2), eps))));
  std::printf("model exponent alpha = %s, k = %zu\n", format_rational(op.alpha).c_str(), op.k);

  const auto D = discretize_model(op, {512, 128, 2.0});
  const auto chi = RadialCutoff::bump(0.5 * eps, 0.9 * eps);
  const auto h = heat_trace(D, geometric_grid(1e-4 * eps * eps, 1e-2 * eps * eps, 24), chi);

  ExponentParams p;
  p.alpha = {op.alpha};
  p.cutoff = 0;
  const auto fit = fit_power_log(h, predicted_exponents(newton_diagram(parse_polynomial("x1^2 + x2^2 - x3^3", 3)), p));
  for (const auto& term : fit.terms)
    std::printf("  t^%-5s log^%u  %+.6e\n", format_rational(term.exponent).c_str(), term.log_power, term.coeff);
  const double weyl = weighted_area(op.profile, op.k, chi) / (4 * std::numbers::pi);
  if (const auto* a = fit.find(Rational(-1))) std::printf("t^-1 coefficient / (area/4pi) = %.5f\n", a->coeff / weyl);
}
