#include <algorithm>
#include <limits>

#include "morsenorm/vector_field.hpp"

namespace morsenorm {

// PolyVectorField ------------------------------------------------------------

template <Coefficient T>
PolyVectorField<T>::PolyVectorField(std::vector<Jet<T>> components) : components_(std::move(components)) {
  for (const auto& c : components_) {
    if (c.dimension() != components_.size()) throw DimensionMismatch("field component dimension differs from field dimension");
  }
}

template <Coefficient T>
PolyVectorField<T> PolyVectorField<T>::linear_diagonal(std::span<const T> lambda, int order) {
  const std::size_t n = lambda.size();
  std::vector<Jet<T>> comps;
  for (std::size_t i = 0; i < n; ++i) comps.push_back(Jet<T>::monomial(n, order, MultiIndex::unit(n, i), lambda[i]));
  return PolyVectorField(std::move(comps));
}

template <Coefficient T>
int PolyVectorField<T>::order() const noexcept {
  int L = std::numeric_limits<int>::max();
  for (const auto& c : components_) L = std::min(L, c.order());
  return components_.empty() ? 0 : L;
}

template <Coefficient T>
DenseMatrix<T> PolyVectorField<T>::linear_part() const {
  const std::size_t n = dimension();
  DenseMatrix<T> m(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) m(i, j) = components_[i].coefficient(MultiIndex::unit(n, j));
  return m;
}

template <Coefficient T>
std::optional<std::vector<T>> PolyVectorField<T>::eigen_linear_part() const {
  const std::size_t n = dimension();
  std::vector<T> lambda(n, T(0));
  for (std::size_t i = 0; i < n; ++i) {
    for (const auto& [a, c] : components_[i].terms()) {
      if (a.degree() == 0) return std::nullopt;
      if (a.degree() > 1) break;
      if (a[i] != 1) return std::nullopt;
      lambda[i] = c;
    }
  }
  return lambda;
}

template <Coefficient T>
PolyVectorField<T> PolyVectorField<T>::residual(std::span<const T> lambda) const {
  if (lambda.size() != dimension()) throw DimensionMismatch("eigenvalue count differs from field dimension");
  std::vector<Jet<T>> comps = components_;
  const std::size_t n = dimension();
  for (std::size_t i = 0; i < n; ++i) {
    T neg = lambda[i];
    neg *= T(-1);
    comps[i].add_term(MultiIndex::unit(n, i), neg);
    comps[i].canonicalize();
  }
  return PolyVectorField(std::move(comps));
}

template <Coefficient T>
PolyVectorField<T> PolyVectorField<T>::truncated(int L) const {
  std::vector<Jet<T>> comps;
  for (const auto& c : components_) comps.push_back(c.truncated(L));
  return PolyVectorField(std::move(comps));
}

// CoordinateChange -----------------------------------------------------------

template <Coefficient T>
CoordinateChange<T>::CoordinateChange(std::vector<Jet<T>> components, double tol)
    : components_(std::move(components)) {
  const std::size_t n = components_.size();
  linear_ = DenseMatrix<T>(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& c = components_[i];
    if (c.dimension() != n) throw DimensionMismatch("coordinate change component dimension");
    if (!ScalarTraits<T>::is_zero(c.coefficient(MultiIndex(n))))
      throw PreconditionViolation("coordinate change must fix the origin");
    for (std::size_t j = 0; j < n; ++j) linear_(i, j) = c.coefficient(MultiIndex::unit(n, j));
  }
  const T det = determinant(linear_);
  if (ScalarTraits<T>::is_zero(det) || std::abs(ScalarTraits<T>::to_double(det)) <= (ScalarTraits<T>::exact ? 0.0 : tol))
    throw SingularLinearPart("coordinate change has a singular linear part");
}

template <Coefficient T>
CoordinateChange<T> CoordinateChange<T>::identity(std::size_t n, int order) {
  std::vector<Jet<T>> comps;
  for (std::size_t i = 0; i < n; ++i) comps.push_back(Jet<T>::variable(n, order, i));
  return CoordinateChange(std::move(comps));
}

template <Coefficient T>
CoordinateChange<T> CoordinateChange<T>::linear(const DenseMatrix<T>& a, int order) {
  const std::size_t n = a.rows();
  std::vector<Jet<T>> comps;
  for (std::size_t i = 0; i < n; ++i) {
    Jet<T> c(n, order);
    for (std::size_t j = 0; j < n; ++j) c.add_term(MultiIndex::unit(n, j), a(i, j));
    comps.push_back(std::move(c));
  }
  return CoordinateChange(std::move(comps));
}

template <Coefficient T>
int CoordinateChange<T>::order() const noexcept {
  int L = std::numeric_limits<int>::max();
  for (const auto& c : components_) L = std::min(L, c.order());
  return components_.empty() ? 0 : L;
}

template <Coefficient T>
bool CoordinateChange<T>::is_identity() const {
  const std::size_t n = dimension();
  for (std::size_t i = 0; i < n; ++i) {
    const auto& t = components_[i].terms();
    if (t.size() != 1 || !(t.begin()->first == MultiIndex::unit(n, i)) || !(t.begin()->second == T(1))) return false;
  }
  return true;
}

// Substitution ---------------------------------------------------------------

template <Coefficient T>
Substitution<T>::Substitution(std::vector<Jet<T>> images) : images_(std::move(images)) {
  if (images_.empty()) return;
  n_ = images_.front().dimension();
  order_ = std::numeric_limits<int>::max();
  for (const auto& g : images_) {
    if (g.dimension() != n_) throw DimensionMismatch("substitution images differ in dimension");
    if (!ScalarTraits<T>::is_zero(g.coefficient(MultiIndex(n_))))
      throw PreconditionViolation("substituted jets must vanish at the origin");
    order_ = std::min(order_, g.order());
  }
}

template <Coefficient T>
const Jet<T>& Substitution<T>::monomial_image(const MultiIndex& a) const {
  auto it = cache_.find(a);
  if (it != cache_.end()) return it->second;
  Jet<T> img;
  if (a.degree() == 0) {
    img = Jet<T>::constant(n_, order_, T(1));
  } else {
    std::size_t j = a.size();
    while (a[j - 1] == 0) --j;
    MultiIndex b(a);
    b.set(j - 1, a[j - 1] - 1);
    img = multiply(monomial_image(b), images_[j - 1]);
  }
  return cache_.emplace(a, std::move(img)).first->second;
}

template <Coefficient T>
Jet<T> Substitution<T>::operator()(const Jet<T>& f) const {
  if (f.dimension() != images_.size()) throw DimensionMismatch("jet dimension differs from substitution arity");
  const int L = images_.empty() ? f.order() : std::min(f.order(), order_);
  Jet<T> r(n_, L);
  auto& out = r.mutable_terms();
  for (const auto& [a, c] : f.terms()) {
    if (a.degree() > L) break;
    const Jet<T>& m = monomial_image(a);
    for (const auto& [e, v] : m.terms()) {
      if (e.degree() > L) break;
      T prod = c;
      prod *= v;
      auto [it, inserted] = out.emplace(e, prod);
      if (!inserted) it->second += prod;
    }
  }
  r.canonicalize();
  return r;
}

// Composition, inversion, Lie calculus ---------------------------------------

template <Coefficient T>
Jet<T> compose(const Jet<T>& f, const CoordinateChange<T>& g) {
  return Substitution<T>(g.components())(f);
}

template <Coefficient T>
CoordinateChange<T> compose(const CoordinateChange<T>& g, const CoordinateChange<T>& h) {
  if (g.dimension() != h.dimension()) throw DimensionMismatch("composed maps differ in dimension");
  Substitution<T> s(h.components());
  std::vector<Jet<T>> comps;
  for (const auto& gi : g.components()) comps.push_back(s(gi));
  return CoordinateChange<T>(std::move(comps));
}

template <Coefficient T>
CoordinateChange<T> invert_to_order(const CoordinateChange<T>& g) {
  const std::size_t n = g.dimension();
  const int L = g.order();
  const DenseMatrix<T> ainv = inverse(g.linear_part());
  std::vector<Jet<T>> nonlinear;
  for (const auto& c : g.components()) nonlinear.push_back(c.degree_range(2, L));

  auto apply_ainv = [&](const std::vector<Jet<T>>& r) {
    std::vector<Jet<T>> out;
    for (std::size_t i = 0; i < n; ++i) {
      Jet<T> acc(n, L);
      for (std::size_t j = 0; j < n; ++j) {
        if (ScalarTraits<T>::is_zero(ainv(i, j))) continue;
        Jet<T> t = r[j];
        t *= ainv(i, j);
        acc += t;
      }
      out.push_back(std::move(acc));
    }
    return out;
  };

  std::vector<Jet<T>> y;
  for (std::size_t i = 0; i < n; ++i) y.push_back(Jet<T>::variable(n, L, i));
  std::vector<Jet<T>> h = apply_ainv(y);
  // Each pass fixes at least one more degree.
  for (int iter = 1; iter < L; ++iter) {
    Substitution<T> s(h);
    std::vector<Jet<T>> r;
    for (std::size_t i = 0; i < n; ++i) r.push_back(y[i] - s(nonlinear[i]));
    std::vector<Jet<T>> next = apply_ainv(r);
    const bool settled = (next == h);
    h = std::move(next);
    if (settled) break;
  }
  return CoordinateChange<T>(std::move(h));
}

template <Coefficient T>
Jet<T> lie_derivative(const PolyVectorField<T>& V, const Jet<T>& f) {
  const std::size_t n = f.dimension();
  if (V.dimension() != n) throw DimensionMismatch("field and jet differ in dimension");
  // Order through which every product V_i * df/dx_i is determined.
  int K = std::numeric_limits<int>::max();
  std::vector<Jet<T>> grads;
  for (std::size_t i = 0; i < n; ++i) {
    grads.push_back(f.derivative(i));
    const int d_grad = grads.back().min_degree();
    const int d_field = V[i].min_degree();
    K = std::min(K, std::min(V[i].order() + d_grad, grads.back().order() + d_field));
  }
  K = std::min(K, f.order());
  Jet<T> r(n, K);
  for (std::size_t i = 0; i < n; ++i) {
    if (grads[i].is_zero() || V[i].is_zero()) continue;
    r += multiply(V[i].with_order(K), grads[i].with_order(K));
  }
  return r;
}

template <Coefficient T>
PolyVectorField<T> pullback_field(const PolyVectorField<T>& V, const CoordinateChange<T>& g) {
  if (V.dimension() != g.dimension()) throw DimensionMismatch("field and coordinate change differ in dimension");
  const CoordinateChange<T> ginv = invert_to_order(g);
  Substitution<T> s(ginv.components());
  std::vector<Jet<T>> comps;
  for (const auto& gl : g.components()) comps.push_back(s(lie_derivative(V, gl)));
  return PolyVectorField<T>(std::move(comps));
}

template <Coefficient T>
PolyVectorField<T> pullback_by_parametrization(const PolyVectorField<T>& V, const CoordinateChange<T>& h) {
  return pullback_field(V, invert_to_order(h));
}

template <Coefficient T>
Jet<T> substitute(const Jet<T>& f, const std::vector<Jet<T>>& images) {
  return Substitution<T>(images)(f);
}

#define MORSENORM_INSTANTIATE(T)                                                                          \
  template class PolyVectorField<T>;                                                                      \
  template class CoordinateChange<T>;                                                                     \
  template class Substitution<T>;                                                                         \
  template Jet<T> compose(const Jet<T>&, const CoordinateChange<T>&);                                     \
  template CoordinateChange<T> compose(const CoordinateChange<T>&, const CoordinateChange<T>&);           \
  template CoordinateChange<T> invert_to_order(const CoordinateChange<T>&);                               \
  template Jet<T> lie_derivative(const PolyVectorField<T>&, const Jet<T>&);                               \
  template PolyVectorField<T> pullback_field(const PolyVectorField<T>&, const CoordinateChange<T>&);      \
  template PolyVectorField<T> pullback_by_parametrization(const PolyVectorField<T>&,                      \
                                                          const CoordinateChange<T>&);                    \
  template Jet<T> substitute(const Jet<T>&, const std::vector<Jet<T>>&);

MORSENORM_INSTANTIATE(double)
MORSENORM_INSTANTIATE(Rational)
MORSENORM_INSTANTIATE(SurdNumber)

#undef MORSENORM_INSTANTIATE

}  // namespace morsenorm
