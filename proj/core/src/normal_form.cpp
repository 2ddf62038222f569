#include "morsenorm/normal_form.hpp"

#include <cmath>

namespace morsenorm {
namespace {

template <Coefficient T>
T dot(const MultiIndex& a, std::span<const T> lambda) {
  T s(0);
  for (std::size_t j = 0; j < a.size(); ++j) {
    if (a[j] == 0) continue;
    T t = lambda[j];
    t *= T(a[j]);
    s += t;
  }
  return s;
}

/// <a, lambda> - lambda_i and the scale for the binary64 zero test.
template <Coefficient T>
std::pair<T, double> denominator(const MultiIndex& a, std::size_t i, std::span<const T> lambda) {
  T d = dot(a, lambda);
  const double scale = 1.0 + std::abs(ScalarTraits<T>::to_double(d));
  d -= lambda[i];
  return {d, scale};
}

template <Coefficient T>
void check_linear_part(const PolyVectorField<T>& V, std::span<const T> lambda, double float_zero) {
  if (lambda.size() != V.dimension()) throw DimensionMismatch("eigenvalue count differs from field dimension");
  const auto mu = V.eigen_linear_part();
  if (!mu) throw PreconditionViolation("field linear part is not diagonal");
  for (std::size_t i = 0; i < lambda.size(); ++i) {
    T diff = (*mu)[i];
    diff -= lambda[i];
    if (!is_negligible(diff, 1.0 + std::abs(ScalarTraits<T>::to_double(lambda[i])), float_zero))
      throw PreconditionViolation("field linear part differs from diag(lambda)");
  }
}

bool mixed(const MultiIndex& a, std::size_t k) {
  return a.block_degree(0, k) > 0 && a.block_degree(k, a.size()) > 0;
}

}  // namespace

TermFilter block_terms(std::size_t k) {
  return [k](const MultiIndex& a, std::size_t) { return !mixed(a, k); };
}

TermFilter cross_terms(std::size_t k, int alpha) {
  return [k, alpha](const MultiIndex& a, std::size_t) {
    return mixed(a, k) && std::min(a.block_degree(0, k), a.block_degree(k, a.size())) < alpha;
  };
}

template <Coefficient T>
HomologicalStep<T> homological_solve(const PolyVectorField<T>& V, std::span<const T> lambda, int m,
                                     const TermFilter& filter, double float_zero) {
  check_linear_part(V, lambda, float_zero);
  const std::size_t n = V.dimension();
  const int L = V.order();
  if (m < 2) throw PreconditionViolation("homological order must be at least 2");
  HomologicalStep<T> step;
  step.order = m;
  std::vector<Jet<T>> corr;
  for (std::size_t i = 0; i < n; ++i) corr.push_back(Jet<T>::variable(n, L, i));

  for (std::size_t i = 0; i < n; ++i) {
    for (const auto& [a, c] : V[i].terms()) {
      const int d = a.degree();
      if (d < 2) continue;
      if (d > m) break;
      const bool targeted = !filter || filter(a, i);
      if (!targeted) continue;
      const auto [den, scale] = denominator(a, i, lambda);
      const bool resonant = is_negligible(den, scale, float_zero);
      if (d < m) {
        if (!resonant) throw PreconditionViolation("nonresonant residual term below the homological order");
        continue;
      }
      if (resonant) {
        step.obstructions.push_back({a, i, c});
        continue;
      }
      step.removed_terms.push_back({a, i, c});
      T q = c;
      q /= den;
      q *= T(-1);
      corr[i].add_term(a, q);
    }
  }
  step.correction = CoordinateChange<T>(std::move(corr));
  return step;
}

template <Coefficient T>
Normalization<T> normalize_to_order(const PolyVectorField<T>& V, std::span<const T> lambda, int L,
                                    const TermFilter& filter, double float_zero) {
  const std::size_t n = V.dimension();
  check_linear_part(V, lambda, float_zero);
  Normalization<T> out;
  out.field = V.truncated(L);
  const int order = out.field.order();
  out.change = CoordinateChange<T>::identity(n, order);
  for (int m = 2; m <= order; ++m) {
    HomologicalStep<T> step = homological_solve(out.field, lambda, m, filter, float_zero);
    if (!step.removed_terms.empty()) {
      PolyVectorField<T> pulled = pullback_field(out.field, step.correction);
      // Removed terms cancel exactly in exact arithmetic; clear binary64 round-off.
      std::vector<Jet<T>> comps = pulled.components();
      for (const auto& t : step.removed_terms) {
        auto& terms = comps[t.component].mutable_terms();
        auto it = terms.find(t.exponent);
        if (it == terms.end()) continue;
        if constexpr (ScalarTraits<T>::exact) {
          throw Error("homological correction failed to cancel a term");
        } else {
          terms.erase(it);
        }
      }
      out.field = PolyVectorField<T>(std::move(comps));
      out.change = compose(step.correction, out.change);
    }
    out.steps.push_back(std::move(step));
  }
  return out;
}

template <Coefficient T>
CrossFlattening<T> cross_flatten(const PolyVectorField<T>& V, std::span<const T> lambda, std::size_t k, int alpha,
                                 double float_zero) {
  const std::size_t n = V.dimension();
  if (k > n) throw PreconditionViolation("block split exceeds dimension");
  const PolyVectorField<T> res = V.residual(lambda);
  for (std::size_t i = 0; i < n; ++i) {
    for (const auto& [a, c] : res[i].terms()) {
      if (!mixed(a, k)) throw PreconditionViolation("cross-flattening requires V - V0 to vanish on both blocks");
    }
  }
  Normalization<T> nf = normalize_to_order(V, lambda, V.order(), cross_terms(k, alpha), float_zero);
  return CrossFlattening<T>{std::move(nf.change), std::move(nf.field), nf.obstructions()};
}

template <Coefficient T>
std::vector<TermRecord<T>> cross_flatness_violations(const PolyVectorField<T>& V, std::span<const T> lambda,
                                                     std::size_t k, int alpha) {
  std::vector<TermRecord<T>> out;
  const PolyVectorField<T> res = V.residual(lambda);
  for (std::size_t i = 0; i < V.dimension(); ++i) {
    for (const auto& [a, c] : res[i].terms()) {
      if (std::min(a.block_degree(0, k), a.block_degree(k, a.size())) < alpha) out.push_back({a, i, c});
    }
  }
  return out;
}

#define MORSENORM_INSTANTIATE(T)                                                                               \
  template HomologicalStep<T> homological_solve(const PolyVectorField<T>&, std::span<const T>, int,            \
                                                const TermFilter&, double);                                    \
  template Normalization<T> normalize_to_order(const PolyVectorField<T>&, std::span<const T>, int,             \
                                               const TermFilter&, double);                                     \
  template CrossFlattening<T> cross_flatten(const PolyVectorField<T>&, std::span<const T>, std::size_t, int,   \
                                            double);                                                           \
  template std::vector<TermRecord<T>> cross_flatness_violations(const PolyVectorField<T>&, std::span<const T>, \
                                                                std::size_t, int);

MORSENORM_INSTANTIATE(double)
MORSENORM_INSTANTIATE(Rational)

#undef MORSENORM_INSTANTIATE

}  // namespace morsenorm
