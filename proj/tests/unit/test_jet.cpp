#include <cmath>

#include "doctest.h"
#include "helpers.hpp"
#include "morsenorm/linalg.hpp"
#include "morsenorm/rational.hpp"
#include "morsenorm/surd.hpp"

using namespace morsenorm;
using testing::J;

TEST_CASE("multi-index order is graded lexicographic") {
  const auto idx = multi_indices(2, 0, 2);
  REQUIRE(idx.size() == 6);
  CHECK(idx[0] == MultiIndex{0, 0});
  CHECK(idx[1] == MultiIndex{1, 0});
  CHECK(idx[2] == MultiIndex{0, 1});
  CHECK(idx[3] == MultiIndex{2, 0});
  CHECK(idx[4] == MultiIndex{1, 1});
  CHECK(idx[5] == MultiIndex{0, 2});
  CHECK(MultiIndex({1, 2}).degree() == 3);
  CHECK(MultiIndex({1, 2, 3}).block_degree(1, 3) == 5);
}

TEST_CASE("rational helpers") {
  CHECK(rational_from_decimal("0.125") == Rational(1, 8));
  CHECK(rational_from_decimal("-2.5e-1") == Rational(-1, 4));
  CHECK(to_string(make_rational(6, -4)) == "-3/2");
  REQUIRE(exact_sqrt(Rational(9, 4)));
  CHECK(*exact_sqrt(Rational(9, 4)) == Rational(3, 2));
  CHECK_FALSE(exact_sqrt(Rational(2)));
  CHECK(rationalize(0.3333333333333333, 1000) == Rational(1, 3));
  CHECK(rationalize(-1.25, 10) == Rational(-5, 4));
}

TEST_CASE("surd field arithmetic") {
  auto ctx = std::make_shared<SurdContext>();
  const SurdNumber r2 = SurdNumber::sqrt_of(2, ctx);
  const SurdNumber r3 = SurdNumber::sqrt_of(3, ctx);
  const SurdNumber r8 = SurdNumber::sqrt_of(8, ctx);
  const SurdNumber r6 = SurdNumber::sqrt_of(6, ctx);
  CHECK(ctx->generator_count() == 2);
  CHECK(r2 * r2 == SurdNumber(2));
  CHECK(r8 == SurdNumber(2) * r2);
  CHECK(r2 * r3 == r6);
  CHECK(SurdNumber::sqrt_of(Rational(9, 4), ctx) == SurdNumber(Rational(3, 2)));
  const SurdNumber a = SurdNumber(1) + r2 + Rational(1, 3) * r6;
  CHECK((a * a.inverse()) == SurdNumber(1));
  CHECK(a.to_double() == doctest::Approx(1 + std::sqrt(2.0) + std::sqrt(6.0) / 3).epsilon(1e-14));
  CHECK((r2 - r2).is_zero());
  CHECK(r2.is_rational() == false);
}

TEST_CASE("jet multiplication examples") {
  CHECK(J("1+x1", 1, 2) * J("1-x1", 1, 2) == J("1-x1^2", 1, 2));
  CHECK((J("x1", 1, 1) * J("x1", 1, 1)).is_zero());
  CHECK(J("(1+x1+x2)", 2, 2) * J("1+x1+x2", 2, 2) == J("1+2*x1+2*x2+x1^2+2*x1*x2+x2^2", 2, 2));
  // Mixed orders truncate to the smaller one.
  const auto p = J("1+x1", 2, 5) * J("1+x2^2", 2, 2);
  CHECK(p.order() == 2);
  CHECK(p == J("1+x1+x2^2", 2, 2));
}

TEST_CASE("jet multiplication matches a brute-force convolution") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 40; ++trial) {
    const std::size_t n = 1 + trial % 3;
    const int L = 2 + trial % 4;
    const auto a = testing::random_jet(rng, n, L, 0, L);
    const auto b = testing::random_jet(rng, n, L, 0, L);
    CHECK(testing::brute(a * b) == testing::brute_mul(testing::brute(a), testing::brute(b), L));
  }
}

TEST_CASE("ring axioms hold exactly") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t n = 1 + trial % 3;
    const int L = 1 + trial % 5;
    const auto a = testing::random_jet(rng, n, L, 0, L);
    const auto b = testing::random_jet(rng, n, L, 0, L);
    const auto c = testing::random_jet(rng, n, L, 0, L);
    CHECK((a * b) * c == a * (b * c));
    CHECK(a * (b + c) == a * b + a * c);
    CHECK(a * b == b * a);
    CHECK((a - a).is_zero());
  }
}

TEST_CASE("float jets prune relative round-off") {
  Jet<double> a(1, 2);
  a.add_term(MultiIndex{0}, 1.0);
  a.add_term(MultiIndex{1}, 1e-17);
  a.canonicalize();
  CHECK(a.size() == 1);
}

TEST_CASE("composition examples") {
  const auto g = testing::change({"x1+x2^2", "x2"}, 4);
  CHECK(compose(J("x1^2", 2, 4), g) == J("x1^2+2*x1*x2^2+x2^4", 2, 4));
  const auto f = J("3*x1 - x1*x2 + 1/2*x2^3", 2, 4);
  CHECK(compose(f, CoordinateChange<Rational>::identity(2, 4)) == f);
  CHECK(compose(J("x1", 2, 3), testing::change({"2*x1", "x2"}, 3)) == J("2*x1", 2, 3));
}

TEST_CASE("composition matches direct substitution") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 15; ++trial) {
    const std::size_t n = 2;
    const int L = 4;
    const auto f = testing::random_jet(rng, n, L, 1, L);
    std::vector<Jet<Rational>> comps;
    for (std::size_t i = 0; i < n; ++i) {
      auto c = testing::random_jet(rng, n, L, 2, L);
      c += Jet<Rational>::variable(n, L, i);
      comps.push_back(c);
    }
    const CoordinateChange<Rational> g(comps);
    // Oracle: sum of c * prod g_i^{a_i} via repeated brute multiplication.
    testing::Brute expect;
    for (const auto& [a, c] : f.terms()) {
      testing::Brute m{{std::vector<int>(n, 0), Rational(1)}};
      for (std::size_t i = 0; i < n; ++i)
        for (int e = 0; e < a[i]; ++e) m = testing::brute_mul(m, testing::brute(comps[i]), L);
      expect = testing::brute_add(expect, m, c);
    }
    CHECK(testing::brute(compose(f, g)) == expect);
  }
}

TEST_CASE("inversion examples") {
  CHECK(invert_to_order(testing::change({"x1+x2^2", "x2"}, 3)) == testing::change({"x1-x2^2", "x2"}, 3));
  CHECK(invert_to_order(CoordinateChange<Rational>::identity(3, 4)).is_identity());
  CHECK(invert_to_order(testing::change({"2*x1", "3*x2"}, 2)) == testing::change({"1/2*x1", "1/3*x2"}, 2));
  CHECK_THROWS_AS(CoordinateChange<Rational>(testing::jets({"x1+x2", "2*x1+2*x2"}, 2, 2)), SingularLinearPart);
  CHECK_THROWS_AS(CoordinateChange<Rational>(testing::jets({"1+x1", "x2"}, 2, 2)), PreconditionViolation);
}

TEST_CASE("inverse composes to the identity both ways") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 1 + trial % 3;
    const int L = 2 + trial % 4;
    std::vector<Jet<Rational>> comps;
    for (std::size_t i = 0; i < n; ++i) {
      auto c = testing::random_jet(rng, n, L, 2, L);
      Jet<Rational> lin(n, L);
      lin.add_term(MultiIndex::unit(n, i), Rational(2 + static_cast<int>(i)));
      if (i + 1 < n) lin.add_term(MultiIndex::unit(n, i + 1), Rational(1, 2));
      comps.push_back(c + lin);
    }
    const CoordinateChange<Rational> g(comps);
    const auto h = invert_to_order(g);
    CHECK(compose(g, h).is_identity());
    CHECK(compose(h, g).is_identity());
  }
}

TEST_CASE("Lie derivative examples and the eigenrelation") {
  const auto V0 = testing::field({"2*x1", "-3*x2"}, 5);
  const std::vector<Rational> lambda{2, -3};
  CHECK(lie_derivative(V0, J("x1^2*x2", 2, 5)) == Rational(1) * J("x1^2*x2", 2, 5));
  CHECK(lie_derivative(testing::field({"x1", "x2"}, 4), J("1", 2, 4)).is_zero());
  CHECK(lie_derivative(testing::field({"x2", "0"}, 3), J("x1^2", 2, 3)) == J("2*x1*x2", 2, 3));

  // [V0, x^a d_i] = (<a, lambda> - lambda_i) x^a d_i
  for (const auto& a : multi_indices(2, 0, 5)) {
    for (std::size_t i = 0; i < 2; ++i) {
      const Jet<Rational> mono = Jet<Rational>::monomial(2, 5, a, Rational(1));
      std::vector<Jet<Rational>> ycomps(2, Jet<Rational>(2, 5));
      ycomps[i] = mono;
      const PolyVectorField<Rational> Y(ycomps);
      const Rational expect = a[0] * lambda[0] + a[1] * lambda[1] - lambda[i];
      for (std::size_t j = 0; j < 2; ++j) {
        const auto bracket = lie_derivative(V0, Y[j]) - lie_derivative(Y, V0[j]);
        const Jet<Rational> want = j == i ? expect * mono : Jet<Rational>(2, 5);
        CHECK(bracket == want.with_order(bracket.order()));
      }
    }
  }
}

TEST_CASE("pullback examples") {
  const auto V = testing::field({"2*x1", "x2"}, 4);
  CHECK(pullback_field(V, CoordinateChange<Rational>::identity(2, 4)) == V);
  const auto W = testing::field({"3*x1 + x2^2", "x2"}, 2);
  CHECK(pullback_field(W, testing::change({"x1+x2^2", "x2"}, 2)) == testing::field({"3*x1", "x2"}, 2));
}

TEST_CASE("pullback is contravariant in composition") {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 8; ++trial) {
    const std::size_t n = 2;
    const int L = 4;
    std::vector<Jet<Rational>> vc, gc, hc;
    for (std::size_t i = 0; i < n; ++i) {
      vc.push_back(testing::random_jet(rng, n, L, 1, L));
      gc.push_back(Jet<Rational>::variable(n, L, i) + testing::random_jet(rng, n, L, 2, L));
      hc.push_back(Jet<Rational>::variable(n, L, i) + testing::random_jet(rng, n, L, 2, L));
    }
    const PolyVectorField<Rational> V(vc);
    const CoordinateChange<Rational> g(gc), h(hc);
    CHECK(pullback_field(V, compose(g, h)) == pullback_field(pullback_field(V, h), g));
    CHECK(pullback_by_parametrization(pullback_field(V, g), g) == V);
  }
}

TEST_CASE("exact linear algebra") {
  DenseMatrix<Rational> m(2, 2);
  m(0, 0) = 2;
  m(0, 1) = 1;
  m(1, 0) = 4;
  m(1, 1) = 3;
  CHECK(determinant(m) == 2);
  CHECK(m * inverse(m) == DenseMatrix<Rational>::identity(2));
  DenseMatrix<Rational> s(2, 2);
  s(0, 0) = 1;
  s(0, 1) = 2;
  s(1, 0) = 2;
  s(1, 1) = 4;
  const auto ns = null_space(s);
  REQUIRE(ns.size() == 1);
  CHECK(ns[0][0] + 2 * ns[0][1] == 0);
}
