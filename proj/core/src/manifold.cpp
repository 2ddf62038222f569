#include <cmath>

#include "morsenorm/normal_form.hpp"

namespace morsenorm {
namespace {

/// Re-indexes a jet in m variables as a jet in n variables x_{offset..offset+m-1}.
template <Coefficient T>
Jet<T> embed(const Jet<T>& j, std::size_t n, std::size_t offset, int order) {
  Jet<T> out(n, order);
  for (const auto& [a, c] : j.terms()) {
    MultiIndex b(n);
    for (std::size_t i = 0; i < a.size(); ++i) b.set(offset + i, a[i]);
    out.add_term(b, c);
  }
  return out;
}

}  // namespace

template <Coefficient T>
ManifoldJet<T> invariant_manifold_jet(const PolyVectorField<T>& V, std::span<const T> lambda, std::size_t k,
                                      ManifoldKind which, double float_zero) {
  const std::size_t n = V.dimension();
  const int L = V.order();
  if (lambda.size() != n) throw DimensionMismatch("eigenvalue count differs from field dimension");
  if (k > n) throw PreconditionViolation("block split exceeds dimension");
  const auto mu = V.eigen_linear_part();
  if (!mu) throw PreconditionViolation("field linear part is not diagonal");
  for (std::size_t i = 0; i < n; ++i) {
    const double l = ScalarTraits<T>::to_double(lambda[i]);
    if ((i < k && !(l > 0)) || (i >= k && !(l < 0)))
      throw PreconditionViolation("eigenvalues must be positive before the split and negative after it");
  }

  const bool unstable = which == ManifoldKind::Unstable;
  const std::size_t free_begin = unstable ? 0 : k;
  const std::size_t free_dim = unstable ? k : n - k;
  const std::size_t dep_begin = unstable ? k : 0;
  const std::size_t dep_dim = n - free_dim;

  ManifoldJet<T> out;
  out.which = which;
  out.dimension = n;
  out.split = k;
  out.graph.assign(dep_dim, Jet<T>(free_dim, L));
  if (free_dim == 0 || dep_dim == 0) return out;

  auto is_free = [&](std::size_t v) { return v >= free_begin && v < free_begin + free_dim; };

  for (int m = 2; m <= L; ++m) {
    std::vector<Jet<T>> images;
    for (std::size_t v = 0; v < n; ++v) {
      images.push_back(is_free(v) ? Jet<T>::variable(free_dim, L, v - free_begin) : out.graph[v - dep_begin]);
    }
    Substitution<T> s(images);
    std::vector<Jet<T>> vf;
    for (std::size_t l = 0; l < free_dim; ++l) vf.push_back(s(V[free_begin + l]));
    for (std::size_t j = 0; j < dep_dim; ++j) {
      // Invariance defect: V_j(x, G) - DG_j . V_free(x, G).
      Jet<T> r = s(V[dep_begin + j]);
      for (std::size_t l = 0; l < free_dim; ++l) {
        const Jet<T> d = out.graph[j].derivative(l);
        if (d.is_zero()) continue;
        r -= multiply(d.with_order(L), vf[l]);
      }
      const T lam_j = lambda[dep_begin + j];
      for (const auto& [a, c] : r.terms()) {
        if (a.degree() < m) continue;
        if (a.degree() > m) break;
        T den(0);
        for (std::size_t l = 0; l < free_dim; ++l) {
          T t = lambda[free_begin + l];
          t *= T(a[l]);
          den += t;
        }
        const double scale = 1.0 + std::abs(ScalarTraits<T>::to_double(den));
        den -= lam_j;
        if (is_negligible(den, scale, float_zero)) throw PreconditionViolation("zero divisor in the invariance equation");
        T coef = c;
        coef /= den;
        out.graph[j].add_term(a, coef);
      }
    }
  }
  return out;
}

template <Coefficient T>
CoordinateChange<T> straighten_manifolds(const ManifoldJet<T>& Y, const ManifoldJet<T>& Z) {
  if (Y.which != ManifoldKind::Unstable || Z.which != ManifoldKind::Stable)
    throw PreconditionViolation("expected an unstable and a stable manifold jet");
  if (Y.dimension != Z.dimension || Y.split != Z.split) throw DimensionMismatch("manifold jets disagree on the split");
  const std::size_t n = Y.dimension;
  const std::size_t k = Y.split;
  for (const auto* g : {&Y.graph, &Z.graph}) {
    for (const auto& c : *g) {
      if (c.min_degree() < 2) throw PreconditionViolation("manifold graph must be tangent to its block");
    }
  }
  int L = 64;
  for (const auto& c : Y.graph) L = std::min(L, c.order());
  for (const auto& c : Z.graph) L = std::min(L, c.order());
  if (Y.graph.empty() && Z.graph.empty()) L = 1;
  std::vector<Jet<T>> comps;
  for (std::size_t i = 0; i < n; ++i) {
    Jet<T> c = Jet<T>::variable(n, L, i);
    if (i < k) {
      c += embed(Z.graph[i], n, k, L);
    } else {
      c += embed(Y.graph[i - k], n, 0, L);
    }
    comps.push_back(std::move(c));
  }
  return CoordinateChange<T>(std::move(comps));
}

#define MORSENORM_INSTANTIATE(T)                                                                               \
  template ManifoldJet<T> invariant_manifold_jet(const PolyVectorField<T>&, std::span<const T>, std::size_t,   \
                                                 ManifoldKind, double);                                        \
  template CoordinateChange<T> straighten_manifolds(const ManifoldJet<T>&, const ManifoldJet<T>&);

MORSENORM_INSTANTIATE(double)
MORSENORM_INSTANTIATE(Rational)

#undef MORSENORM_INSTANTIATE

}  // namespace morsenorm
