#include <algorithm>
#include <cmath>
#include <set>

#include "doctest.h"
#include "helpers.hpp"
#include "morsenorm/spectrum.hpp"

using namespace morsenorm;

namespace {

ProblemSpec fn(const std::string& f, const std::string& extra = "") {
  return parse_problem(R"j({"dimension": 2, "function": ")j" + f + "\"" + extra + "}");
}

Eigen::VectorXd vec(std::initializer_list<double> v) {
  Eigen::VectorXd r(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) r(i++) = x;
  return r;
}

/// Independent resonance scan: every a with 2 <= |a| <= m by nested counting.
std::set<std::pair<std::vector<int>, std::size_t>> brute_witnesses(const std::vector<Rational>& lambda, int m) {
  std::set<std::pair<std::vector<int>, std::size_t>> out;
  const std::size_t n = lambda.size();
  std::vector<int> a(n, 0);
  while (true) {
    int deg = 0;
    for (int v : a) deg += v;
    if (deg >= 2 && deg <= m) {
      Rational dot = 0;
      for (std::size_t j = 0; j < n; ++j) dot += a[j] * lambda[j];
      for (std::size_t i = 0; i < n; ++i)
        if (dot == lambda[i]) out.insert({a, i});
    }
    std::size_t pos = 0;
    while (pos < n && ++a[pos] > m) a[pos++] = 0;
    if (pos == n) break;
  }
  return out;
}

std::set<std::pair<std::vector<int>, std::size_t>> as_set(const ResonanceReport& r) {
  std::set<std::pair<std::vector<int>, std::size_t>> out;
  for (const auto& w : r.witnesses) out.insert({w.exponent.exponents(), w.component});
  return out;
}

}  // namespace

TEST_CASE("critical point search") {
  const auto saddle = fn("x1^2 - x2^2");
  const std::vector<Eigen::VectorXd> one{vec({0.1, 0.1})};
  auto r = find_critical_points(saddle, one);
  REQUIRE(r.points.size() == 1);
  CHECK(r.points[0].norm() < 1e-12);

  const std::vector<Eigen::VectorXd> two{vec({0.3, -0.2})};
  r = find_critical_points(fn("x1^2 + 4*x1*x2 + x2^2"), two);
  REQUIRE(r.points.size() == 1);
  CHECK(r.points[0].norm() < 1e-12);

  const auto cubic = fn("x1^2 - x2^2 + x1^3");
  r = find_critical_points(cubic, default_seeds(cubic));
  REQUIRE(r.points.size() == 2);
  CHECK(r.points[0].norm() < 1e-12);
  CHECK(r.points[1](0) == doctest::Approx(-2.0 / 3).epsilon(1e-12));
  CHECK(std::abs(r.points[1](1)) < 1e-12);
}

TEST_CASE("Morse eigenvalues") {
  auto s = morse_eigenvalues(fn("x1^2 - x2^2"), vec({0, 0}));
  CHECK(s.eigenvalues == std::vector<double>{2, -2});
  CHECK(s.morse_index == 1);
  CHECK(s.unstable_dimension == 1);

  // [[2,4],[4,2]]: trace/2 +- sqrt((trace/2)^2 - det).
  const double half = 2, det = 4 - 16;
  s = morse_eigenvalues(fn("x1^2 + 4*x1*x2 + x2^2"), vec({0, 0}));
  CHECK(s.eigenvalues[0] == doctest::Approx(half + std::sqrt(half * half - det)));
  CHECK(s.eigenvalues[1] == doctest::Approx(half - std::sqrt(half * half - det)));
  CHECK(s.eigenvalues[0] == doctest::Approx(6));
  CHECK(s.eigenvalues[1] == doctest::Approx(-2));

  s = morse_eigenvalues(fn("x1^2 - x2^2", R"j(, "metric": [["1/2", "0"], ["0", "1"]])j"), vec({0, 0}));
  CHECK(s.eigenvalues[0] == doctest::Approx(4));
  CHECK(s.eigenvalues[1] == doctest::Approx(-2));

  CHECK_THROWS_AS(morse_eigenvalues(fn("x1^2 + x2^3"), vec({0, 0})), DegenerateCriticalPoint);
  const auto rot = parse_problem(R"j({"dimension": 2, "field": ["-x2", "x1"]})j");
  CHECK_THROWS_AS(morse_eigenvalues(rot, vec({0, 0})), ComplexSpectrum);
}

TEST_CASE("resonance scan examples") {
  const std::vector<Rational> l21{2, 1};
  auto r = check_N_linearity<Rational>(l21, 3);
  REQUIRE(r.witnesses.size() == 1);
  CHECK(r.witnesses[0].exponent == MultiIndex{0, 2});
  CHECK(r.witnesses[0].component == 0);
  CHECK_FALSE(r.satisfied);

  const std::vector<Rational> l11{1, 1};
  CHECK(check_N_linearity<Rational>(l11, 12).satisfied);

  const std::vector<Rational> l62{6, -2};
  r = check_N_linearity<Rational>(l62, 6);
  CHECK(as_set(r).count({{2, 3}, 0}) == 1);

  const std::vector<Rational> l22{2, -2};
  CHECK(as_set(check_N_linearity<Rational>(l22, 3)).count({{2, 1}, 0}) == 1);

  const std::vector<double> golden{1.0, -(1 + std::sqrt(5.0)) / 2};
  CHECK(check_N_linearity<double>(golden, 10).satisfied);
}

TEST_CASE("resonance scan agrees with a brute-force scan") {
  std::mt19937_64 rng(29);
  std::uniform_int_distribution<int> pick(-4, 4);
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t n = 2 + trial % 2;
    std::vector<Rational> lambda;
    for (std::size_t i = 0; i < n; ++i) {
      int v = 0;
      while (v == 0) v = pick(rng);
      lambda.emplace_back(v, 1 + trial % 3);
      lambda.back().canonicalize();
    }
    const int m = 5;
    const auto r = check_N_linearity<Rational>(lambda, m);
    CHECK(as_set(r) == brute_witnesses(lambda, m));
    // Graded-lex order, then component.
    for (std::size_t k = 1; k < r.witnesses.size(); ++k) {
      const auto& p = r.witnesses[k - 1];
      const auto& q = r.witnesses[k];
      CHECK((p.exponent < q.exponent || (p.exponent == q.exponent && p.component < q.component)));
    }
  }
}

TEST_CASE("resonance scan is symmetric under permutation") {
  const std::vector<Rational> a{3, 1, -2};
  const std::vector<Rational> b{1, -2, 3};  // a permuted by (1 2 0)
  const auto ra = as_set(check_N_linearity<Rational>(a, 5));
  std::set<std::pair<std::vector<int>, std::size_t>> mapped;
  for (const auto& [e, i] : as_set(check_N_linearity<Rational>(b, 5))) {
    // b[j] = a[p[j]] with p = (1, 2, 0)
    const std::size_t p[3] = {1, 2, 0};
    std::vector<int> ea(3);
    for (std::size_t j = 0; j < 3; ++j) ea[p[j]] = e[j];
    mapped.insert({ea, p[i]});
  }
  CHECK(ra == mapped);
}

TEST_CASE("one-sign spectra have no witnesses above M/m") {
  const std::vector<Rational> lambda{7, 2, 3};
  const auto r = check_N_linearity<Rational>(lambda, 10);
  CHECK_FALSE(r.witnesses.empty());
  for (const auto& w : r.witnesses) CHECK(w.exponent.degree() <= 7 / 2);
}

TEST_CASE("diagonalization at the critical point") {
  const auto spec = fn("x1^2 + 4*x1*x2 + x2^2");
  const auto A = diagonalize_at_critical(spec, vec({0, 0}));
  const double r = 1 / std::sqrt(2.0);
  // y = A^{-1} x with A columns (1,1)/sqrt2, (1,-1)/sqrt2.
  CHECK(A.linear_part()(0, 0) == doctest::Approx(r));
  CHECK(A.linear_part()(0, 1) == doctest::Approx(r));
  CHECK(A.linear_part()(1, 0) == doctest::Approx(r));
  CHECK(A.linear_part()(1, 1) == doctest::Approx(-r));
  const auto V = source_field(spec).components();
  std::vector<Jet<double>> vd;
  for (const auto& c : V) vd.push_back(convert<double>(c));
  const auto W = pullback_field(PolyVectorField<double>(vd), A);
  const auto M = W.linear_part();
  CHECK(M(0, 0) == doctest::Approx(6));
  CHECK(M(1, 1) == doctest::Approx(-2));
  CHECK(std::abs(M(0, 1)) < 1e-12);
  CHECK(std::abs(M(1, 0)) < 1e-12);

  const auto metric = fn("x1^2 - x2^2", R"j(, "metric": [["1/2", "0"], ["0", "1"]])j");
  // Columns of A are g-orthonormal, so A = diag(sqrt2, 1).
  CHECK(diagonalize_at_critical(metric, vec({0, 0})).linear_part()(0, 0) == doctest::Approx(r));
  CHECK(std::abs(diagonalize_at_critical(metric, vec({0, 0})).linear_part()(0, 1)) < 1e-14);
}

TEST_CASE("exact diagonalization of rational spectra") {
  const auto V = testing::field({"2*x1 + 4*x2 + x1^2", "4*x1 + 2*x2"}, 3);
  const auto d = diagonalize_exact(V);
  REQUIRE(d);
  CHECK(d->eigenvalues == std::vector<Rational>{6, -2});
  CHECK(d->field.eigen_linear_part() == std::optional<std::vector<Rational>>(std::vector<Rational>{6, -2}));
  CHECK_FALSE(diagonalize_exact(testing::field({"x1 + x2", "x1"}, 2)));
}

TEST_CASE("eigenvalues are invariant under linear changes of coordinates") {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> u(-1, 1);
  const auto base = parse_problem(
      R"j({"dimension": 3, "function": "x1^2 - 2*x2^2 + 1/2*x3^2 + x1*x2 - x2*x3 + x1^3",
          "metric": [["2", "1/2", "0"], ["1/2", "1", "0"], ["0", "0", "3/2"]]})j");
  const auto ref = morse_eigenvalues(base, Eigen::VectorXd::Zero(3)).eigenvalues;
  for (int trial = 0; trial < 100; ++trial) {
    DenseMatrix<Rational> T(3, 3);
    Eigen::MatrixXd Td(3, 3);
    do {
      for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < 3; ++j) {
          T(i, j) = rationalize(u(rng), 64);
          Td(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = T(i, j).get_d();
        }
    } while (std::abs(Td.determinant()) < 0.05);
    ProblemSpec s = base;
    s.function = compose(base.function, CoordinateChange<Rational>::linear(T, base.function.order()));
    // B(y) = T^t B T as a bilinear form.
    for (std::size_t i = 0; i < 3; ++i)
      for (std::size_t j = 0; j < 3; ++j) {
        Rational e = 0;
        for (std::size_t k = 0; k < 3; ++k)
          for (std::size_t l = 0; l < 3; ++l)
            e += T(k, i) * base.metric[k][l].coefficient(MultiIndex(3)) * T(l, j);
        s.metric[i][j] = Jet<Rational>::constant(3, base.order, e);
      }
    const auto got = morse_eigenvalues(s, Eigen::VectorXd::Zero(3)).eigenvalues;
    for (std::size_t i = 0; i < 3; ++i) CHECK(std::abs(got[i] - ref[i]) <= 1e-10 * std::abs(ref[i]));
  }
}
