#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "morsenorm/conjugacy.hpp"
#include "morsenorm/fixed_point.hpp"
#include "morsenorm/parallel.hpp"
#include "morsenorm/truncated_field.hpp"
#include "morsenorm/weighted.hpp"

using namespace morsenorm;

namespace {

using Vec = std::vector<double>;

/// V = x1 (1 + x2/2) d1 - phi x2 d2 with the default bump.
TruncatedField saddle_field() {
  const std::vector<double> lambda{1.0, -std::numbers::phi};
  Jet<double> v1(2, 3), v2(2, 3);
  v1.add_term(MultiIndex{1, 0}, 1.0);
  v1.add_term(MultiIndex{1, 1}, 0.5);
  v2.add_term(MultiIndex{0, 1}, -std::numbers::phi);
  return TruncatedField(PolyVectorField<double>({v1, v2}), lambda, BumpParams{});
}

/// 1D V = x + x^2.
TruncatedField riccati_field() {
  Jet<double> v(1, 2);
  v.add_term(MultiIndex{1}, 1.0);
  v.add_term(MultiIndex{2}, 1.0);
  return TruncatedField(PolyVectorField<double>({v}), {1.0}, BumpParams{});
}

double dist(std::span<const double> a, std::span<const double> b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s = std::max(s, std::abs(a[i] - b[i]));
  return s;
}

}  // namespace

TEST_CASE("bump cutoff and truncated field") {
  const BumpParams b{0.5, 1.0};
  CHECK(bump_cutoff(0.0, b) == 1.0);
  CHECK(bump_cutoff(0.5, b) == 1.0);
  CHECK(bump_cutoff(1.0, b) == 0.0);
  CHECK(bump_cutoff(3.0, b) == 0.0);
  double prev = 1.0;
  for (double r = 0.5; r <= 1.0; r += 0.01) {
    const double c = bump_cutoff(r, b);
    CHECK(c <= prev);
    CHECK(c >= 0.0);
    prev = c;
  }
  const auto f = saddle_field();
  const Vec inside{0.2, 0.3}, outside{0.9, 0.9};
  const Vec vin = f(inside);
  CHECK(vin[0] == doctest::Approx(0.2 * (1 + 0.15)).epsilon(1e-15));
  CHECK(vin[1] == doctest::Approx(-std::numbers::phi * 0.3).epsilon(1e-15));
  const Vec vout = f(outside);
  CHECK(vout[0] == 0.9);
  CHECK(vout[1] == -std::numbers::phi * 0.9);
}

TEST_CASE("linear flow") {
  const Vec lambda{2, -1};
  const Vec x{1, 2};
  const auto y = flow_F(lambda, x, std::log(2.0));
  CHECK(y[0] == doctest::Approx(4).epsilon(1e-15));
  CHECK(y[1] == doctest::Approx(1).epsilon(1e-15));
  CHECK(flow_F(lambda, x, 0.0) == x);
  CHECK(dist(flow_F(lambda, flow_F(lambda, x, 0.4), 0.3), flow_F(lambda, x, 0.7)) < 1e-14);
  CHECK_THROWS_AS(flow_F(lambda, x, 1e4), FlowOverflow);
}

TEST_CASE("integrated flow") {
  const auto lin = TruncatedField::linear({1.0, -2.0}, BumpParams{});
  const Vec x{0.3, -0.7};
  for (double t : {-1.0, 0.5, 2.0}) CHECK(dist(flow_G(lin, x, t, 1e-12), flow_F(lin.eigenvalues(), x, t)) < 1e-8);
  CHECK(flow_G(lin, x, 0.0, 1e-12) == x);

  // Riccati: x(t) = x e^t / (1 + x - x e^t) while |x(t)| <= r_in.
  const auto ric = riccati_field();
  for (double x0 : {0.2, -0.3}) {
    for (double t : {0.3, -1.0, -4.0}) {
      const double e = std::exp(t);
      const double want = x0 * e / (1 + x0 - x0 * e);
      REQUIRE(std::abs(want) < 0.5);
      CHECK(flow_G(ric, Vec{x0}, t, 1e-12)[0] == doctest::Approx(want).epsilon(1e-10));
    }
  }
  // Deterministic.
  CHECK(flow_G(saddle_field(), Vec{0.1, 0.4}, 1.5, 1e-10) == flow_G(saddle_field(), Vec{0.1, 0.4}, 1.5, 1e-10));
}

TEST_CASE("integrator reports failures") {
  // x' = x^2 blows up at t = 1 from x = 1.
  const OdeRhs blow = [](std::span<const double> y, std::span<double> dy) { dy[0] = y[0] * y[0]; };
  CHECK_THROWS(integrate(blow, Vec{1.0}, 2.0, OdeOptions{}));
  OdeStats stats;
  const auto y = integrate(blow, Vec{1.0}, 0.5, OdeOptions{}, &stats);
  CHECK(y[0] == doctest::Approx(2.0).epsilon(1e-10));
  CHECK(stats.accepted > 0);
}

TEST_CASE("exit time") {
  const Vec lambda{1, -1};
  CHECK(exit_time(lambda, Vec{0.0, 0.5}, 1.0) == doctest::Approx(std::log(2.0)).epsilon(1e-14));
  CHECK(std::isinf(exit_time(lambda, Vec{0.5, 0.0}, 1.0)));
  CHECK(exit_time(lambda, Vec{2.0, 0.0}, 1.0) == 0.0);
  // |F_{-T}(x)| = r_out at the exit time, below it before.
  std::mt19937_64 rng(67);
  std::uniform_real_distribution<double> u(-0.7, 0.7);
  const Vec l3{2.0, -0.5, -1.3};
  for (int i = 0; i < 50; ++i) {
    const Vec x{u(rng), u(rng), u(rng)};
    const double T = exit_time(l3, x, 1.0);
    if (T == 0.0) continue;
    const auto y = flow_F(l3, x, -T);
    CHECK(std::hypot(y[0], y[1], y[2]) == doctest::Approx(1.0).epsilon(1e-10));
    const auto z = flow_F(l3, x, -0.999 * T);
    CHECK(std::hypot(z[0], z[1], z[2]) < 1.0);
  }
}

TEST_CASE("exit-time conjugacy") {
  const auto lin = TruncatedField::linear({1.0, -1.0}, BumpParams{});
  CHECK(dist(conjugacy_phi(lin, Vec{0.2, 0.3}, 1e-12).value, Vec{0.2, 0.3}) < 1e-9);

  const auto f = saddle_field();
  // Unstable block: Phi(x) = x.
  CHECK(conjugacy_phi(f, Vec{0.3, 0.0}, 1e-12).value == Vec{0.3, 0.0});

  const double T = std::log(2.0);
  const auto lam = TruncatedField(PolyVectorField<double>({Jet<double>::monomial(2, 3, MultiIndex{1, 0}, 1.0) +
                                                               Jet<double>::monomial(2, 3, MultiIndex{1, 1}, 0.5),
                                                           Jet<double>::monomial(2, 3, MultiIndex{0, 1}, -1.0)}),
                                  {1.0, -1.0}, BumpParams{});
  const auto p = conjugacy_phi(lam, Vec{0.0, 0.5}, 1e-12);
  CHECK(p.exit_time == doctest::Approx(T).epsilon(1e-12));
  CHECK(dist(p.value, flow_G(lam, Vec{0.0, 1.0}, T, 1e-12)) < 1e-12);

  const double tol = 1e-8;
  for (const Vec& x : {Vec{0.1, 0.2}, Vec{-0.2, 0.1}, Vec{0.15, -0.25}}) {
    const auto phi = conjugacy_phi(f, x, 1e-12);
    // Stationarity beyond the exit time.
    for (double extra : {0.5, 1.0, 2.0}) CHECK(dist(conjugacy_phi(f, x, 1e-12, extra).value, phi.value) < tol);
    // G_s(Phi(x)) = Phi(F_s(x)).
    for (double s : {-0.5, -0.1, 0.1, 0.5}) {
      const auto lhs = flow_G(f, phi.value, s, 1e-12);
      const auto rhs = conjugacy_phi(f, flow_F(f.eigenvalues(), x, s), 1e-12).value;
      CHECK(dist(lhs, rhs) < tol);
    }
  }
}

TEST_CASE("exit-time conjugacy is tangent to the identity") {
  const auto f = saddle_field();
  const double h = 1e-3;
  for (std::size_t j = 0; j < 2; ++j) {
    Vec xp(2, 0.0), xm(2, 0.0);
    xp[j] = h;
    xm[j] = -h;
    const auto a = conjugacy_phi(f, xp, 1e-13).value;
    const auto b = conjugacy_phi(f, xm, 1e-13).value;
    for (std::size_t i = 0; i < 2; ++i) CHECK(std::abs((a[i] - b[i]) / (2 * h) - (i == j ? 1.0 : 0.0)) < 1e-6);
  }
}

TEST_CASE("manifold conjugacies") {
  const auto ric = riccati_field();
  for (double x : {0.1, 0.3, -0.2}) {
    const auto psi = conjugacy_psi_manifold(ric, Vec{x}, ManifoldKind::Unstable);
    CHECK(psi[0] == doctest::Approx(x / (1 + x)).epsilon(1e-8));
  }
  // Psi(G_s x) = F_s(Psi x).
  const double x = 0.2, s = 0.1;
  const auto gx = flow_G(ric, Vec{x}, s, 1e-12);
  const auto lhs = conjugacy_psi_manifold(ric, gx, ManifoldKind::Unstable);
  const auto rhs = flow_F(ric.eigenvalues(), conjugacy_psi_manifold(ric, Vec{x}, ManifoldKind::Unstable), s);
  CHECK(dist(lhs, rhs) < 1e-8);

  const auto lin = TruncatedField::linear({1.0, -1.0}, BumpParams{});
  CHECK(dist(conjugacy_psi_manifold(lin, Vec{0.2, 0.0}, ManifoldKind::Unstable), Vec{0.2, 0.0}) < 1e-10);
  CHECK(dist(conjugacy_psi_manifold(lin, Vec{0.0, 0.3}, ManifoldKind::Stable), Vec{0.0, 0.3}) < 1e-10);
  CHECK_THROWS_AS(conjugacy_psi_manifold(lin, Vec{0.2, 0.1}, ManifoldKind::Unstable), PreconditionViolation);
  CHECK_THROWS_AS(conjugacy_psi_manifold(lin, Vec{0.7, 0.0}, ManifoldKind::Unstable), PreconditionViolation);

  // Stable block of V = -x + x^2: Psi_s(x) = x / (1 - x).
  Jet<double> v(1, 2);
  v.add_term(MultiIndex{1}, -1.0);
  v.add_term(MultiIndex{2}, 1.0);
  const TruncatedField st(PolyVectorField<double>({v}), {-1.0}, BumpParams{});
  CHECK(conjugacy_psi_manifold(st, Vec{0.25}, ManifoldKind::Stable)[0] == doctest::Approx(0.25 / 0.75).epsilon(1e-8));
}

TEST_CASE("decay along the unstable manifold") {
  // log|G_{-t}(x)| has slope -lambda for large t.
  const auto ric = riccati_field();
  const double a = std::log(std::abs(flow_G(ric, Vec{0.3}, -2.0, 1e-13)[0]));
  const double b = std::log(std::abs(flow_G(ric, Vec{0.3}, -6.0, 1e-13)[0]));
  CHECK((a - b) / 4.0 == doctest::Approx(1.0).epsilon(0.05));
}

TEST_CASE("weighted norms") {
  const WeightedNormParams prm{2, 0, 1};
  TrajectoryGrid zero(uniform_nodes(5, 100), 2, prm);
  CHECK(weighted_norm(zero) == 0.0);

  // u = e^{2t} e1: integral of e^{-2t} e^{4t} over (-inf, 0] is 1/2.
  TrajectoryGrid u(graded_nodes(20, 400), 2, prm);
  for (std::size_t i = 0; i < u.size(); ++i) u.at(i)[0] = std::exp(2 * u.nodes()[i]);
  CHECK(weighted_norm(u) == doctest::Approx(std::sqrt(0.5)).epsilon(1e-4));
  CHECK(std::abs(weighted_norm(u) - std::sqrt(0.5)) < 1e-4);
  CHECK(u.nodes().back() == 0.0);
  CHECK(u.nodes().front() == -20.0);

  const double base = weighted_norm(u);
  TrajectoryGrid v = u;
  v *= -3.5;
  CHECK(weighted_norm(v) == doctest::Approx(3.5 * base).epsilon(1e-12));
  CHECK(log_weighted_norm(v) == doctest::Approx(std::log(3.5 * base)).epsilon(1e-12));

  // k = 1 adds the derivative term: 2 e^{2t} gives 2 sqrt(1/2).
  u.set_params({2, 1, 1});
  CHECK(weighted_norm(u) == doctest::Approx(3 * std::sqrt(0.5)).epsilon(1e-3));

  // Derivative stencils on a graded grid are exact for quadratics.
  TrajectoryGrid q(graded_nodes(3, 50), 1, prm);
  for (std::size_t i = 0; i < q.size(); ++i) q.at(i)[0] = q.nodes()[i] * q.nodes()[i];
  const auto d = grid_derivative(q, 0, 1);
  for (std::size_t i = 0; i < q.size(); ++i) CHECK(d[i] == doctest::Approx(2 * q.nodes()[i]).epsilon(1e-9));

  CHECK_THROWS(WeightedNormParams{1.0, 0, 1}.validate());
  CHECK_THROWS(WeightedNormParams{2.0, -1, 1}.validate());
  CHECK_THROWS(WeightedNormParams{2.0, 0, 0}.validate());
}

TEST_CASE("integration constant") {
  CHECK(lemma_integration_constant(2) == doctest::Approx(1 / (2 * (std::sqrt(2.0) - 1))).epsilon(1e-12));
  for (double p : {1.5, 2.0, 3.0, 5.0, 1.01}) {
    const double C0 = lemma_integration_constant(p);
    CHECK(std::isfinite(C0));
    CHECK(C0 > 0);
    const double c = 1 / C0;
    CHECK(c <= 1.0);
    CHECK(std::pow(p - 1, p - 1) / std::pow(p, p) * std::pow(c, p) + c == doctest::Approx(1.0).epsilon(1e-11));
  }
}

TEST_CASE("integration lemma on random compactly supported data") {
  std::mt19937_64 rng(71);
  std::uniform_real_distribution<double> u(-1, 1);
  const double H = 4.0;
  const auto nodes = uniform_nodes(H, 4000);
  for (int trial = 0; trial < 50; ++trial) {
    for (double delta : {4.0, 8.0, 16.0}) {
      TrajectoryGrid w(nodes, 2, {2, 0, delta});
      // Piecewise cubic with random breakpoints, zero outside [a, b].
      double a = -H * (0.2 + 0.8 * (u(rng) + 1) / 2), b = a * (u(rng) + 1) / 4;
      const double mid = (a + b) / 2;
      double c[2][2][4];
      for (auto& comp : c)
        for (auto& piece : comp)
          for (double& coef : piece) coef = u(rng);
      for (std::size_t i = 0; i < w.size(); ++i) {
        const double t = w.nodes()[i];
        if (t < a || t > b) continue;
        const int piece = t < mid ? 0 : 1;
        for (std::size_t k = 0; k < 2; ++k) {
          const double* q = c[k][piece];
          w.at(i)[k] = q[0] + t * (q[1] + t * (q[2] + t * q[3]));
        }
      }
      const auto W = cumulative_integral(w);
      const double C0 = lemma_integration_constant(2);
      CHECK(weighted_norm(W) <= C0 / delta * weighted_norm(w) * 1.05);
    }
  }
}

TEST_CASE("contraction operator") {
  const auto lin = TruncatedField::linear({1.0, -1.0}, BumpParams{});
  const Vec x{0.2, 0.3};
  TrajectoryGrid zero(uniform_nodes(3, 300), 2, {2, 0, 4});
  CHECK(weighted_norm(operator_F(lin, x, zero)) == 0.0);

  // u = c constant with the linear field: output is Lambda c (t + T).
  TrajectoryGrid c = zero;
  for (std::size_t i = 0; i < c.size(); ++i) {
    c.at(i)[0] = 0.5;
    c.at(i)[1] = -0.25;
  }
  const auto out = operator_F(lin, x, c);
  for (std::size_t i = 0; i < out.size(); i += 37) {
    const double s = out.nodes()[i] + 3;
    CHECK(out.at(i)[0] == doctest::Approx(0.5 * s).epsilon(1e-12));
    CHECK(out.at(i)[1] == doctest::Approx(0.25 * s).epsilon(1e-12));
  }

  // Drift from zero shrinks as the unstable component goes to zero.
  const auto f = saddle_field();
  const auto drift = [&](const Vec& y) {
    const double T = std::min(exit_time(f.eigenvalues(), y, 1.0) + 1.0, 20.0);
    TrajectoryGrid z(uniform_nodes(T, 2000), 2, {2, 0, 4});
    return weighted_norm(operator_F(f, y, z));
  };
  double prev = INFINITY;
  for (double e : {0.2, 0.1, 0.05, 0.02, 0.0}) {
    const double d = drift(Vec{e, 0.3});
    CHECK(d < prev);
    prev = d;
  }
  CHECK(prev == 0.0);
}

TEST_CASE("fixed-point iteration") {
  const auto lin = TruncatedField::linear({1.0, -1.0}, BumpParams{});
  FixedPointOptions lo;
  lo.params = {2, 0, 4};
  const auto r0 = fixed_point_iterate(lin, Vec{0.2, 0.3}, lo);
  CHECK(r0.diagnostics.phi == Vec{0.2, 0.3});
  for (double v : r0.trajectory.values()) CHECK(v == 0.0);
  CHECK(r0.diagnostics.rho < 1e-12);
  CHECK(delta_min(lin, 2) == doctest::Approx(4 * lemma_integration_constant(2)));

  const auto f = saddle_field();
  FixedPointOptions opts;
  opts.probe_deltas = {2 * delta_min(f, 2)};
  for (const Vec& x : {Vec{0.1, 0.2}, Vec{-0.2, -0.15}, Vec{0.05, 0.0}}) {
    const auto r = fixed_point_iterate(f, x, opts);
    CHECK(r.diagnostics.converged);
    CHECK(r.diagnostics.rho < 1.0);
    const auto phi = conjugacy_phi(f, x, 1e-13).value;
    CAPTURE(dist(r.diagnostics.phi, phi));
    CHECK(dist(r.diagnostics.phi, phi) < 5e-8);
    // Richardson improves on the plain fine-grid value.
    CHECK(dist(r.diagnostics.phi, phi) <= dist(r.diagnostics.phi_unextrapolated, phi) + 1e-14);
    REQUIRE(r.diagnostics.probe_rho.size() == 1);
    if (r.diagnostics.rho > 0) CHECK(r.diagnostics.probe_rho[0] < r.diagnostics.rho);
    CHECK(r.trajectory.nodes().back() == 0.0);
  }

  // Too small a weight stops with the measured ratios.
  FixedPointOptions weak;
  weak.params = {2, 0, 1e-3};
  weak.max_iterations = 6;
  CHECK_THROWS_AS(fixed_point_iterate(f, Vec{0.3, 0.3}, weak), ContractionFailure);
}

TEST_CASE("parallel loop") {
  std::vector<int> hits(1000, 0);
  parallel_for(hits.size(), [&](std::size_t i) { hits[i] += 1; }, 3);
  for (int h : hits) CHECK(h == 1);
  CHECK_THROWS_AS(parallel_for(10, [](std::size_t i) {
                    if (i == 7) throw Error("boom");
                  }, 2),
                  Error);
  CHECK(worker_count() >= 1);
}
