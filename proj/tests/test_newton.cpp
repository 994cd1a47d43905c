#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "ahis/newton.hpp"
#include "newton_oracle.hpp"

using namespace ahis;

namespace {

std::vector<Rational> q(std::initializer_list<int> v) {
  std::vector<Rational> out;
  for (int x : v) out.emplace_back(x);
  return out;
}

std::set<std::vector<int>> vertex_set(const NewtonFace& f) {
  std::set<std::vector<int>> s;
  for (const auto& v : f.vertices) s.insert(v.entries());
  return s;
}

Polynomial random_sparse(std::mt19937_64& rng, std::size_t dim, int terms) {
  std::uniform_int_distribution<int> deg(0, 5), coef(-4, 4);
  Polynomial p(dim);
  for (int attempt = 0; attempt < 200 && p.size() < static_cast<std::size_t>(terms); ++attempt) {
    std::vector<int> e(dim);
    for (auto& x : e) x = deg(rng);
    if (std::all_of(e.begin(), e.end(), [](int x) { return x == 0; })) continue;
    int c = coef(rng);
    if (c == 0) c = 1;
    p.add_term(ExponentVector(e), c);
  }
  return p;
}

}  // namespace

TEST(NewtonDiagram, Cusp) {
  auto d = newton_diagram(parse_polynomial("x1^2 + x2^3", 2));
  ASSERT_EQ(d.faces.size(), 1u);
  EXPECT_EQ(vertex_set(d.faces[0]), (std::set<std::vector<int>>{{2, 0}, {0, 3}}));
  EXPECT_EQ(d.faces[0].weight.sigma, q({3, 2}));
  EXPECT_EQ(d.faces[0].weight.degree, 6);
}

TEST(NewtonDiagram, TwoFaces) {
  auto d = newton_diagram(parse_polynomial("x1^3 + x1 x2 + x2^3", 2));
  ASSERT_EQ(d.faces.size(), 2u);
  EXPECT_EQ(vertex_set(d.faces[0]), (std::set<std::vector<int>>{{3, 0}, {1, 1}}));
  EXPECT_EQ(d.faces[0].weight.sigma, q({1, 2}));
  EXPECT_EQ(d.faces[0].weight.degree, 3);
  EXPECT_EQ(vertex_set(d.faces[1]), (std::set<std::vector<int>>{{1, 1}, {0, 3}}));
  EXPECT_EQ(d.faces[1].weight.sigma, q({2, 1}));
  EXPECT_EQ(d.faces[1].weight.degree, 3);
}

TEST(NewtonDiagram, ThreeVariables) {
  auto d = newton_diagram(parse_polynomial("x1^2 + x2^2 + x3^3", 3));
  ASSERT_EQ(d.faces.size(), 1u);
  EXPECT_EQ(d.faces[0].weight.sigma, q({3, 3, 2}));
  EXPECT_EQ(d.faces[0].weight.degree, 6);
}

TEST(NewtonDiagram, LowerDimensionalMaximalFace) {
  // The segment between (1,1,0) and (0,0,2) is the only compact face.
  auto d = newton_diagram(parse_polynomial("x1 x2 + x3^2", 3));
  ASSERT_EQ(d.faces.size(), 1u);
  EXPECT_EQ(vertex_set(d.faces[0]), (std::set<std::vector<int>>{{1, 1, 0}, {0, 0, 2}}));
  for (const auto& s : d.faces[0].weight.sigma) EXPECT_GT(s, 0);
}

TEST(NewtonDiagram, Errors) {
  EXPECT_THROW(newton_diagram(Polynomial(2)), DomainError);
  EXPECT_THROW(newton_diagram(parse_polynomial("1 + x1^2 + x2^2", 2)), DomainError);
}

TEST(NewtonDiagram, OneVariable) {
  auto d = newton_diagram(parse_polynomial("x1^3 + x1^5", 1));
  ASSERT_EQ(d.faces.size(), 1u);
  EXPECT_EQ(d.faces[0].weight.sigma, q({1}));
  EXPECT_EQ(d.faces[0].weight.degree, 3);
}

TEST(NewtonDiagram, MatchesBruteForceOracle) {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t dim = 1 + trial % 4;
    const int terms = 1 + static_cast<int>(rng() % 20);
    auto f = random_sparse(rng, dim, terms);
    auto diagram = newton_diagram(f);
    std::set<std::set<std::vector<int>>> got;
    for (const auto& face : diagram.faces) got.insert(vertex_set(face));
    EXPECT_EQ(got, oracle::maximal_compact_faces(f)) << f.to_string();
  }
}

TEST(NewtonDiagram, WeightedDegreeSeparation) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 30; ++trial) {
    auto f = random_sparse(rng, 2 + trial % 3, 12);
    for (const auto& face : newton_diagram(f).faces) {
      const auto& w = face.weight;
      for (const auto& s : w.sigma) EXPECT_GT(s, 0);
      for (const auto& v : face.vertices) EXPECT_EQ(w.weighted_degree(v), w.degree);
      for (const auto& [e, c] : f.terms()) {
        const bool on = std::find(face.vertices.begin(), face.vertices.end(), e) != face.vertices.end();
        if (on)
          EXPECT_EQ(w.weighted_degree(e), w.degree);
        else
          EXPECT_GT(w.weighted_degree(e), w.degree);
      }
      EXPECT_EQ(face.face_poly + face.remainder, f);
    }
  }
}

TEST(FacePolynomial, Split) {
  auto f = parse_polynomial("x1^2 - x2^3 - x2^4", 2);
  auto d = newton_diagram(f);
  ASSERT_EQ(d.faces.size(), 1u);
  auto [fg, r] = face_polynomial(f, d.faces[0]);
  EXPECT_EQ(fg, parse_polynomial("x1^2 - x2^3", 2));
  EXPECT_EQ(r, parse_polynomial("-x2^4", 2));

  auto g = parse_polynomial("x1^2 + x2^3", 2);
  EXPECT_TRUE(face_polynomial(g, newton_diagram(g).faces[0]).second.is_zero());

  auto h = parse_polynomial("x1^3 + x1 x2 + x2^3", 2);
  EXPECT_EQ(face_polynomial(h, newton_diagram(h).faces[0]).first, parse_polynomial("x1^3 + x1 x2", 2));
}

TEST(FacePolynomial, RejectsForeignFace) {
  auto f = parse_polynomial("x1^2 - x2^3", 2);
  auto face = newton_diagram(f).faces[0];
  EXPECT_THROW(face_polynomial(parse_polynomial("x1 + x2^3", 2), face), DomainError);
  EXPECT_THROW(face_polynomial(parse_polynomial("x1^2 + x2^5", 2), face), DomainError);
}

TEST(Scaling, Examples) {
  WeightVector w{q({3, 2}), 6};
  std::vector<double> x{5, 7};
  EXPECT_EQ(scaling_apply(w, 1.0, x), (std::vector<double>{5, 7}));
  WeightVector u{q({1, 1}), 1};
  std::vector<double> one{1, 1};
  EXPECT_EQ(scaling_apply(u, 2.0, one), (std::vector<double>{2, 2}));
  EXPECT_EQ(scaling_apply(w, 2.0, one), (std::vector<double>{8, 4}));
  EXPECT_THROW(scaling_apply(w, 0.0, one), DomainError);
}

TEST(Brieskorn, Exponents) {
  auto p = phi_gamma(WeightVector{q({3, 2}), 6});
  EXPECT_EQ(p.phi, parse_polynomial("x1^4 + x2^6", 2));
  EXPECT_EQ(phi_gamma(WeightVector{q({1, 1}), 1}).phi, parse_polynomial("x1^2 + x2^2", 2));
  EXPECT_EQ(phi_gamma(WeightVector{q({3, 3, 2}), 6}).phi, parse_polynomial("x1^4 + x2^4 + x3^6", 3));
  // 2m/σ odd → m is scaled to make every exponent even.
  auto odd = phi_gamma(WeightVector{q({2, 1}), 3});
  EXPECT_EQ(odd.multiple, 2);
  EXPECT_EQ(odd.phi, parse_polynomial("x1^6 + x2^12", 2));
}

TEST(Quasihomogeneity, ScalingAndEulerIdentities) {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> lam(0.2, 3.0), xs(-1.0, 1.0);
  for (const char* text : {"x1^2 - x2^3 - x2^4", "x1^3 + x1 x2 + x2^3", "x1^2 + x2^2 - x3^3 - x3^5",
                           "x1^2 + x2^3 + x3^5 + x1 x2 x3"}) {
    auto f = read_polynomial(text);
    for (const auto& face : newton_diagram(f).faces) {
      const auto& w = face.weight;
      EXPECT_TRUE((euler_apply(w, face.face_poly) - face.face_poly * w.degree).is_zero());
      auto phi = phi_gamma(face);
      EXPECT_TRUE((euler_apply(w, phi.phi) - phi.phi * phi.degree).is_zero());
      const double m = to_double(w.degree), m2 = to_double(phi.degree);
      for (int s = 0; s < 100; ++s) {
        const double l = lam(rng);
        std::vector<double> x(f.dim());
        for (auto& v : x) v = xs(rng);
        auto sx = scaling_apply(w, l, x);
        const double a = face.face_poly.evaluate(sx), b = std::pow(l, m) * face.face_poly.evaluate(x);
        EXPECT_LE(std::abs(a - b), 1e-12 * std::max(1.0, std::abs(b)));
        const double c = phi(sx), e = std::pow(l, m2) * phi(x);
        EXPECT_LE(std::abs(c - e), 1e-12 * std::max(1.0, std::abs(e)));
      }
    }
  }
}

TEST(Lattice, Examples) {
  auto l = exponent_lattice(std::vector<Rational>{Rational(3, 2), 1}, Rational(3));
  std::vector<Rational> expect{0, 1, Rational(3, 2), 2, Rational(5, 2), 3};
  EXPECT_EQ(l.sequence(), expect);
  EXPECT_EQ(exponent_lattice(std::vector<Rational>{1}, Rational(3)).sequence(), q({0, 1, 2, 3}));
  EXPECT_EQ(exponent_lattice(std::vector<Rational>{1, 1}, Rational(2)).sequence(), q({0, 1, 2}));
  EXPECT_THROW(exponent_lattice(std::vector<Rational>{1}, Rational(0)), DomainError);
  auto w = exponent_lattice(WeightVector{q({3, 2}), 6}, Rational(3));
  EXPECT_EQ(w.sequence(), expect);
  EXPECT_TRUE(w.contains(Rational(5, 2)));
  EXPECT_FALSE(w.contains(Rational(1, 2)));
}

TEST(Json, DiagramRoundTrip) {
  auto d = newton_diagram(parse_polynomial("x1^3 + x1 x2 + x2^3", 2));
  nlohmann::json j = d;
  EXPECT_EQ(j["faces"][0]["sigma"][1], "2");
  auto back = j.get<NewtonDiagram>();
  ASSERT_EQ(back.faces.size(), 2u);
  EXPECT_EQ(back.faces[1].weight, d.faces[1].weight);
  EXPECT_EQ(back.faces[1].face_poly, d.faces[1].face_poly);
}
