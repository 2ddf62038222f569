#include <benchmark/benchmark.h>

#include <numbers>
#include <random>

#include "morsenorm/conjugacy.hpp"
#include "morsenorm/fixed_point.hpp"
#include "morsenorm/normal_form.hpp"

using namespace morsenorm;

namespace {

Jet<Rational> dense_jet(std::mt19937_64& rng, std::size_t n, int L, int lo) {
  std::uniform_int_distribution<int> num(-9, 9), den(1, 7);
  Jet<Rational> j(n, L);
  for (const auto& a : multi_indices(n, lo, L)) {
    Rational q(num(rng), den(rng));
    q.canonicalize();
    j.add_term(a, q);
  }
  return j;
}

PolyVectorField<Rational> random_field(std::size_t n, int L, const std::vector<Rational>& lambda) {
  std::mt19937_64 rng(11);
  std::vector<Jet<Rational>> comps;
  for (std::size_t i = 0; i < n; ++i) {
    auto c = dense_jet(rng, n, L, 2);
    c.add_term(MultiIndex::unit(n, i), lambda[i]);
    comps.push_back(c);
  }
  return PolyVectorField<Rational>(comps);
}

TruncatedField benchmark_field() {
  const std::vector<double> lambda{1.0, -std::numbers::phi};
  Jet<double> v1(2, 3), v2(2, 3);
  v1.add_term(MultiIndex{1, 0}, 1.0);
  v1.add_term(MultiIndex{1, 1}, 0.5);
  v2.add_term(MultiIndex{0, 1}, -std::numbers::phi);
  return TruncatedField(PolyVectorField<double>({v1, v2}), lambda, BumpParams{0.5, 1.0});
}

void BM_JetMultiply(benchmark::State& state) {
  const int L = static_cast<int>(state.range(0));
  std::mt19937_64 rng(1);
  const auto a = dense_jet(rng, 3, L, 0), b = dense_jet(rng, 3, L, 0);
  for (auto _ : state) benchmark::DoNotOptimize(a * b);
}
BENCHMARK(BM_JetMultiply)->Arg(4)->Arg(6)->Arg(8);

void BM_JetCompose(benchmark::State& state) {
  const int L = static_cast<int>(state.range(0));
  std::mt19937_64 rng(2);
  const auto f = dense_jet(rng, 3, L, 0);
  std::vector<Jet<Rational>> comps;
  for (std::size_t i = 0; i < 3; ++i) {
    auto c = dense_jet(rng, 3, L, 2);
    c.add_term(MultiIndex::unit(3, i), 1);
    comps.push_back(c);
  }
  const CoordinateChange<Rational> g(comps);
  for (auto _ : state) benchmark::DoNotOptimize(compose(f, g));
}
BENCHMARK(BM_JetCompose)->Arg(4)->Arg(6);

void BM_NormalizeExact(benchmark::State& state) {
  const int L = static_cast<int>(state.range(0));
  const std::vector<Rational> lambda{Rational(3, 2), 1, Rational(-7, 5)};
  const auto V = random_field(3, L, lambda);
  for (auto _ : state) benchmark::DoNotOptimize(normalize_to_order<Rational>(V, lambda, L));
}
BENCHMARK(BM_NormalizeExact)->Arg(4)->Arg(6)->Unit(benchmark::kMillisecond);

void BM_FlowG(benchmark::State& state) {
  const auto f = benchmark_field();
  const std::vector<double> x{0.2, -0.15};
  for (auto _ : state) benchmark::DoNotOptimize(flow_G(f, x, -2.0, 1e-11));
}
BENCHMARK(BM_FlowG);

void BM_ConjugacyPhi(benchmark::State& state) {
  const auto f = benchmark_field();
  const std::vector<double> x{0.2, -0.15};
  for (auto _ : state) benchmark::DoNotOptimize(conjugacy_phi(f, x, 1e-11));
}
BENCHMARK(BM_ConjugacyPhi);

void BM_FixedPoint(benchmark::State& state) {
  const auto f = benchmark_field();
  FixedPointOptions opts;
  opts.params = {2.0, 0, delta_min(f, 2.0)};
  const std::vector<double> x{0.2, -0.15};
  for (auto _ : state) benchmark::DoNotOptimize(fixed_point_iterate(f, x, opts));
}
BENCHMARK(BM_FixedPoint)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
