// Parametrizes the link of the cusp x1^2 - x2^3 - x2^4 and prints the
// Puiseux coefficients of x1 along the positive branch.

#include <cstdio>

#include "ahis/ahis.hpp"

int main() {
  using namespace ahis;
  const auto f = parse_polynomial("x1^2 - x2^3 - x2^4", 2);
  const auto diagram = newton_diagram(f);
  const auto& face = diagram.faces.front();
  std::printf("face polynomial: %s\n", face.face_poly.to_string().c_str());

  ParametrizeOptions opts;
  opts.q_max = 4;
  const auto charts = link_charts(face, f);
  const auto P = newton_solve_series(f, face, detail::preferred_chart(charts), opts);
  const auto x1 = P.component_series(0);
  for (const auto& [q, c] : x1.terms())
    std::printf("  r^%-5s %+.10f\n", format_rational(q).c_str(), to_double(c.constant_term()));
  std::printf("residual certificate %.3e, contraction ratio %.3e\n", P.residual_certificate, P.telemetry.max_ratio);
}
