#include <set>

#include "doctest.h"
#include "helpers.hpp"
#include "morsenorm/normal_form.hpp"
#include "morsenorm/spectrum.hpp"

using namespace morsenorm;
using testing::J;

namespace {

using Ledger = std::set<std::pair<std::vector<int>, std::size_t>>;

template <class Records>
Ledger ledger(const Records& records) {
  Ledger out;
  for (const auto& r : records) out.insert({r.exponent.exponents(), r.component});
  return out;
}

Ledger witnesses(std::span<const Rational> lambda, int L) {
  Ledger out;
  for (const auto& w : check_N_linearity<Rational>(lambda, L).witnesses) out.insert({w.exponent.exponents(), w.component});
  return out;
}

/// Residual monomials (V - V0) as a ledger.
Ledger residual_ledger(const PolyVectorField<Rational>& V, std::span<const Rational> lambda) {
  Ledger out;
  const auto res = V.residual(lambda);
  for (std::size_t i = 0; i < res.dimension(); ++i)
    for (const auto& [a, c] : res[i].terms()) out.insert({a.exponents(), i});
  return out;
}

/// V0 plus random terms of degrees 2..L.
PolyVectorField<Rational> random_field(std::mt19937_64& rng, std::span<const Rational> lambda, int L, double density) {
  const std::size_t n = lambda.size();
  std::vector<Jet<Rational>> comps;
  for (std::size_t i = 0; i < n; ++i) {
    auto c = testing::random_jet(rng, n, L, 2, L, density);
    c.add_term(MultiIndex::unit(n, i), lambda[i]);
    comps.push_back(c);
  }
  return PolyVectorField<Rational>(comps);
}

/// Conjugacy check that avoids pullback_field: L_V(psi_i) = W_i o psi.
void check_conjugacy(const PolyVectorField<Rational>& V, const CoordinateChange<Rational>& psi,
                     const PolyVectorField<Rational>& W) {
  for (std::size_t i = 0; i < V.dimension(); ++i) {
    const auto lhs = lie_derivative(V, psi[i]);
    const auto rhs = compose(W[i], psi);
    const int K = std::min(lhs.order(), rhs.order());
    CHECK(lhs.with_order(K) == rhs.with_order(K));
  }
}

}  // namespace

TEST_CASE("Morse lemma examples") {
  const auto saddle = morse_lemma_jet(J("x1^2 - x2^2", 2, 5));
  CHECK(saddle.signs == std::vector<int>{-1, 1});
  CHECK(morse_lemma_defect(J("x1^2 - x2^2", 2, 5), saddle).is_zero());

  // v = x sqrt(1 + x) = x + x^2/2 - x^3/8 + x^4/16 - ...
  const auto f = J("x1^2 + x1^3", 1, 4);
  const auto chart = morse_lemma_jet(f);
  CHECK(chart.signs == std::vector<int>{1});
  const Rational series[] = {1, Rational(1, 2), Rational(-1, 8), Rational(1, 16)};
  for (int d = 1; d <= std::min(4, chart.change[0].order()); ++d)
    CHECK(chart.change[0].coefficient(MultiIndex{d}) == SurdNumber(series[d - 1]));
  CHECK(morse_lemma_defect(f, chart).is_zero());
  // Squaring the series independently reproduces f through order 4.
  Jet<Rational> v(1, 4);
  for (int d = 1; d <= 4; ++d) v.add_term(MultiIndex{d}, series[d - 1]);
  CHECK(v * v == f);

  const auto mixed = J("x1^2 + 4*x1*x2 + x2^2", 2, 4);
  const auto mc = morse_lemma_jet(mixed);
  CHECK(mc.signs == std::vector<int>{-1, 1});
  CHECK(morse_lemma_defect(mixed, mc).is_zero());
  // Requested pattern reorders the output coordinates.
  const auto pc = morse_lemma_jet(mixed, std::vector<int>{1, -1});
  CHECK(pc.signs == std::vector<int>{1, -1});
  CHECK(morse_lemma_defect(mixed, pc).is_zero());

  CHECK_THROWS(morse_lemma_jet(J("x1^2 + x1*x2^2", 2, 4)));
  CHECK_THROWS(morse_lemma_jet(J("x1 + x2^2", 2, 4)));
}

TEST_CASE("Morse lemma is exact on random functions") {
  std::mt19937_64 rng(41);
  for (int trial = 0; trial < 12; ++trial) {
    const std::size_t n = 1 + trial % 3;
    const int L = 3 + trial % 2;
    Jet<Rational> f = testing::random_jet(rng, n, L, 3, L, 0.5);
    // Quadratic part with a random symmetric nondegenerate Hessian.
    DenseMatrix<Rational> H(n, n);
    do {
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i; j < n; ++j) H(i, j) = H(j, i) = testing::random_rational(rng, 2, 2);
    } while (determinant(H) == 0);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i; j < n; ++j) {
        MultiIndex a(n);
        a.set(i, a[i] + 1);
        a.set(j, a[j] + 1);
        f.add_term(a, i == j ? H(i, i) / 2 : H(i, j));
      }
    CAPTURE(to_expression(f));
    const auto chart = morse_lemma_jet(f);
    CHECK(morse_lemma_defect(f, chart).is_zero());
    // Direct oracle on the rational chart: f o w^{-1} = sum signs * scales * w^2.
    const auto winv = invert_to_order(chart.rational_change);
    Jet<Rational> want(n, L);
    for (std::size_t i = 0; i < n; ++i) {
      MultiIndex a(n);
      a.set(i, 2);
      want.add_term(a, chart.signs[i] * chart.scales[i]);
    }
    CHECK(compose(f, winv).with_order(chart.rational_change.order()) ==
          want.with_order(chart.rational_change.order()));
    // Sylvester: the number of negative signs is the Morse index.
    int neg = 0;
    for (int s : chart.signs) neg += s < 0;
    Eigen::MatrixXd Hd(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        Hd(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = H(i, j).get_d();
    const Eigen::VectorXd ev = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(Hd).eigenvalues();
    CHECK(neg == (ev.array() < 0).count());
  }
}

TEST_CASE("homological step examples") {
  const std::vector<Rational> l31{3, 1};
  const auto V = testing::field({"3*x1 + x2^2", "x2"}, 4);
  const auto step = homological_solve<Rational>(V, l31, 2);
  CHECK(step.correction == testing::change({"x1 + x2^2", "x2"}, step.correction.order()));
  REQUIRE(step.removed_terms.size() == 1);
  CHECK(step.obstructions.empty());
  CHECK(pullback_field(V, step.correction).truncated(2) == testing::field({"3*x1", "x2"}, 2));
  // Lie-derivative oracle: L_V(x1 + x2^2) = 3 (x1 + x2^2).
  CHECK(lie_derivative(V, J("x1 + x2^2", 2, 4)).with_order(3) == J("3*x1 + 3*x2^2", 2, 3));

  const std::vector<Rational> l21{2, 1};
  const auto E = testing::field({"2*(x1 + x2^2)", "x2"}, 4);
  const auto es = homological_solve<Rational>(E, l21, 2);
  REQUIRE(es.obstructions.size() == 1);
  CHECK(es.obstructions[0].exponent == MultiIndex{0, 2});
  CHECK(es.obstructions[0].component == 0);
  CHECK(es.obstructions[0].coefficient == 2);
  CHECK(es.removed_terms.empty());
  CHECK(es.correction.is_identity());

  const auto V0 = PolyVectorField<Rational>::linear_diagonal(std::span<const Rational>(l21), 4);
  for (int m = 2; m <= 4; ++m) {
    const auto s = homological_solve<Rational>(V0, l21, m);
    CHECK(s.removed_terms.empty());
    CHECK(s.obstructions.empty());
    CHECK(s.correction.is_identity());
  }
  CHECK_THROWS_AS(homological_solve<Rational>(V, l31, 3), PreconditionViolation);
}

TEST_CASE("normalization of the resonant example field") {
  const std::vector<Rational> l21{2, 1};
  const auto E = testing::field({"2*(x1 + x2^2)", "x2"}, 6);
  const auto nf = normalize_to_order<Rational>(E, l21, 6);
  CHECK(ledger(nf.obstructions()) == Ledger{{{0, 2}, 0}});
  CHECK(nf.field == E);
  CHECK(nf.change.is_identity());
  // Whatever change is tried, the x2^2 d1 coefficient survives: it commutes with V0.
  std::mt19937_64 rng(43);
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<Jet<Rational>> gc;
    for (std::size_t i = 0; i < 2; ++i)
      gc.push_back(Jet<Rational>::variable(2, 3, i) + testing::random_jet(rng, 2, 3, 2, 2, 0.8));
    const auto W = pullback_field(E.truncated(3), CoordinateChange<Rational>(gc));
    CHECK(W[0].coefficient(MultiIndex{0, 2}) == 2);
  }
}

TEST_CASE("normalization trivial cases") {
  const std::vector<Rational> lambda{3, -1, Rational(1, 2)};
  const auto V0 = PolyVectorField<Rational>::linear_diagonal(std::span<const Rational>(lambda), 5);
  const auto nf = normalize_to_order<Rational>(V0, lambda, 5);
  CHECK(nf.change.is_identity());
  CHECK(nf.obstructions().empty());
  CHECK(nf.field == V0);

  // One nonresonant term: a single step, residual V0.
  const std::vector<Rational> l31{3, 1};
  const auto V = testing::field({"3*x1", "x2 + x1*x2"}, 5);
  const auto one = normalize_to_order<Rational>(V, l31, 5);
  CHECK(one.field == PolyVectorField<Rational>::linear_diagonal(std::span<const Rational>(l31), 5));
  CHECK(one.obstructions().empty());
  check_conjugacy(V, one.change, one.field);
}

TEST_CASE("normalization soundness on random nonresonant fields") {
  std::mt19937_64 rng(47);
  for (int trial = 0; trial < 12; ++trial) {
    const std::size_t n = 2 + trial % 2;
    const int L = 3 + trial % 4;
    std::vector<Rational> lambda;
    do {
      lambda.clear();
      for (std::size_t i = 0; i < n; ++i) {
        Rational q = 0;
        while (q == 0) q = testing::random_rational(rng, 3, 7);
        lambda.push_back(q);
      }
    } while (!check_N_linearity<Rational>(lambda, L).satisfied);
    const auto V = random_field(rng, lambda, L, 0.4);
    const auto nf = normalize_to_order<Rational>(V, lambda, L);
    CHECK(nf.obstructions().empty());
    CHECK(nf.field == PolyVectorField<Rational>::linear_diagonal(std::span<const Rational>(lambda), L));
    check_conjugacy(V, nf.change, nf.field);

    // Idempotence.
    const auto again = normalize_to_order<Rational>(nf.field, lambda, L);
    CHECK(again.change.is_identity());
    CHECK(again.obstructions().empty());

    // Uniqueness up to linear maps: Psi' o D and Psi both take V to V0, so they differ by D.
    DenseMatrix<Rational> D(n, n);
    for (std::size_t i = 0; i < n; ++i) D(i, i) = Rational(static_cast<long>(i) + 2, 3);
    const auto d = CoordinateChange<Rational>::linear(D, L);
    const auto other = normalize_to_order<Rational>(pullback_field(V, d), lambda, L);
    const auto link = compose(compose(other.change, d), invert_to_order(nf.change));
    CHECK(link == CoordinateChange<Rational>::linear(D, link.order()));
  }
}

TEST_CASE("obstructions are exactly the resonance witnesses") {
  std::mt19937_64 rng(53);
  const std::vector<std::vector<Rational>> spectra{{2, 1}, {1, -1}, {3, 1, -2}, {1, 2, 3}, {Rational(1, 2), 1}};
  for (const auto& lambda : spectra) {
    const int L = lambda.size() == 3 ? 4 : 6;
    const auto V = random_field(rng, lambda, L, 1.0);
    const auto nf = normalize_to_order<Rational>(V, lambda, L);
    const Ledger obs = ledger(nf.obstructions());
    const Ledger wit = witnesses(lambda, L);
    for (const auto& o : obs) CHECK(wit.count(o) == 1);
    // The residual holds only resonant monomials.
    for (const auto& r : residual_ledger(nf.field, lambda)) CHECK(wit.count(r) == 1);
    check_conjugacy(V, nf.change, nf.field);
  }
  // A full-density degree-2 field reports every degree-2 witness.
  const std::vector<Rational> l21{2, 1};
  const auto E = random_field(rng, l21, 2, 1.0);
  CHECK(ledger(normalize_to_order<Rational>(E, l21, 2).obstructions()) == witnesses(l21, 2));
}

TEST_CASE("cross-flattening examples") {
  const std::vector<Rational> l11{1, -1};
  const auto V = testing::field({"x1 + x1^2*x2", "-x2"}, 4);
  const auto cf = cross_flatten<Rational>(V, l11, 1, 2);
  CHECK(ledger(cf.obstructions) == Ledger{{{2, 1}, 0}});
  CHECK(cf.field == V);

  const std::vector<Rational> l21{2, -1};
  const auto W = testing::field({"2*x1", "-x2 + x1*x2"}, 4);
  const auto cw = cross_flatten<Rational>(W, l21, 1, 2);
  CHECK(cw.obstructions.empty());
  CHECK(cw.change[1].coefficient(MultiIndex{1, 1}) == Rational(-1, 2));
  CHECK(cross_flatness_violations<Rational>(cw.field, l21, 1, 2).empty());
  check_conjugacy(W, cw.change, cw.field);

  const auto W0 = PolyVectorField<Rational>::linear_diagonal(std::span<const Rational>(l21), 4);
  CHECK(cross_flatten<Rational>(W0, l21, 1, 2).change.is_identity());
  CHECK_THROWS_AS(cross_flatten<Rational>(testing::field({"2*x1 + x1^2", "-x2"}, 3), l21, 1, 2),
                  PreconditionViolation);
}

TEST_CASE("cross-flattening leaves only deep mixed terms or obstructions") {
  std::mt19937_64 rng(59);
  const std::vector<std::vector<Rational>> spectra{{Rational(3, 2), -1}, {2, 1, -Rational(5, 3)}, {1, -1}};
  for (const auto& lambda : spectra) {
    const std::size_t n = lambda.size();
    const std::size_t k = lambda[1] > 0 ? 2 : 1;
    const int L = n == 3 ? 5 : 7;
    std::vector<Jet<Rational>> comps;
    for (std::size_t i = 0; i < n; ++i) {
      Jet<Rational> c(n, L);
      for (const auto& a : multi_indices(n, 2, L))
        if (a.block_degree(0, k) > 0 && a.block_degree(k, n) > 0 && rng() % 2) c.add_term(a, testing::random_rational(rng, 2, 3));
      c.add_term(MultiIndex::unit(n, i), lambda[i]);
      comps.push_back(c);
    }
    const PolyVectorField<Rational> V(comps);
    for (int alpha = 1; alpha <= 3; ++alpha) {
      const auto cf = cross_flatten<Rational>(V, lambda, k, alpha);
      // Every remaining shallow monomial is a reported obstruction, and vice versa.
      CHECK(ledger(cross_flatness_violations<Rational>(cf.field, lambda, k, alpha)) == ledger(cf.obstructions));
      const auto res = cf.field.residual(lambda);
      for (std::size_t i = 0; i < n; ++i)
        for (const auto& [a, c] : res[i].terms())
          CHECK((a.block_degree(0, k) > 0 && a.block_degree(k, n) > 0));
      check_conjugacy(V, cf.change, cf.field);
    }
  }
}

TEST_CASE("invariant manifold jets") {
  const std::vector<Rational> l11{1, -1};
  const auto V = testing::field({"x1", "-x2 + x1^2"}, 5);
  const auto Y = invariant_manifold_jet<Rational>(V, l11, 1, ManifoldKind::Unstable);
  REQUIRE(Y.graph.size() == 1);
  CHECK(Y.graph[0] == J("1/3*x1^2", 1, Y.graph[0].order()));
  const auto Z = invariant_manifold_jet<Rational>(V, l11, 1, ManifoldKind::Stable);
  CHECK(Z.is_zero());

  const auto psi = straighten_manifolds(Y, Z);
  CHECK(psi == testing::change({"x1", "x2 + 1/3*x1^2"}, psi.order()));
  const auto straight = pullback_by_parametrization(V, psi);
  CHECK(invariant_manifold_jet<Rational>(straight, l11, 1, ManifoldKind::Unstable).is_zero());

  const auto V0 = PolyVectorField<Rational>::linear_diagonal(std::span<const Rational>(l11), 5);
  CHECK(invariant_manifold_jet<Rational>(V0, l11, 1, ManifoldKind::Unstable).is_zero());
  CHECK(invariant_manifold_jet<Rational>(V0, l11, 1, ManifoldKind::Stable).is_zero());
  CHECK(straighten_manifolds(invariant_manifold_jet<Rational>(V0, l11, 1, ManifoldKind::Unstable),
                             invariant_manifold_jet<Rational>(V0, l11, 1, ManifoldKind::Stable))
            .is_identity());
}

TEST_CASE("invariant graphs satisfy the invariance equation") {
  // x2 = Y(x1) invariant: Y'(x1) V1(x1, Y) = V2(x1, Y).
  std::mt19937_64 rng(61);
  const std::vector<Rational> lambda{Rational(3, 2), -1};
  for (int trial = 0; trial < 6; ++trial) {
    const int L = 6;
    const auto V = random_field(rng, lambda, L, 0.5);
    const auto Y = invariant_manifold_jet<Rational>(V, lambda, 1, ManifoldKind::Unstable);
    const auto Z = invariant_manifold_jet<Rational>(V, lambda, 1, ManifoldKind::Stable);
    const Jet<Rational> y = Y.graph[0];
    const int K = y.order();
    const Jet<Rational> x1 = Jet<Rational>::variable(1, K, 0);
    const std::vector<Jet<Rational>> on_graph{x1, y};
    const auto v1 = substitute(V[0], on_graph);
    const auto v2 = substitute(V[1], on_graph);
    const auto lhs = y.derivative(0) * v1;
    const int M = std::min(lhs.order(), v2.order());
    CHECK(M >= L - 1);
    CHECK(lhs.with_order(M) == v2.with_order(M));

    // Both graphs vanish once straightened.
    const auto straight = pullback_by_parametrization(V, straighten_manifolds(Y, Z));
    CHECK(invariant_manifold_jet<Rational>(straight, lambda, 1, ManifoldKind::Unstable).is_zero());
    CHECK(invariant_manifold_jet<Rational>(straight, lambda, 1, ManifoldKind::Stable).is_zero());
    CHECK_FALSE(Y.is_zero());

    // Flatness shadow: a normalized field has flat graphs.
    const auto nf = normalize_to_order<Rational>(V, lambda, L);
    if (nf.obstructions().empty()) {
      CHECK(invariant_manifold_jet<Rational>(nf.field, lambda, 1, ManifoldKind::Unstable).is_zero());
      CHECK(invariant_manifold_jet<Rational>(nf.field, lambda, 1, ManifoldKind::Stable).is_zero());
    }
  }
}
