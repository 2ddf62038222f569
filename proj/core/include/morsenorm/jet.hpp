#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <span>
#include <vector>

#include "morsenorm/errors.hpp"
#include "morsenorm/multi_index.hpp"
#include "morsenorm/scalar.hpp"

namespace morsenorm {

/// Relative pruning threshold for binary64 coefficients.
inline constexpr double kFloatPruneRelative = 1e-14;

/// Truncated power series sum_{|a| <= L} c_a x^a in n variables.
///
/// Terms are kept sparse and canonical: no zero coefficient is stored and
/// every exponent has degree <= order().
template <Coefficient T>
class Jet {
 public:
  using Scalar = T;
  using Terms = std::map<MultiIndex, T>;

  Jet() = default;
  Jet(std::size_t n, int order) : n_(n), order_(order) {}

  static Jet constant(std::size_t n, int order, const T& c) {
    return monomial(n, order, MultiIndex(n), c);
  }
  static Jet variable(std::size_t n, int order, std::size_t i) {
    return monomial(n, order, MultiIndex::unit(n, i), T(1));
  }
  static Jet monomial(std::size_t n, int order, const MultiIndex& a, const T& c) {
    Jet j(n, order);
    j.add_term(a, c);
    return j;
  }

  std::size_t dimension() const noexcept { return n_; }
  int order() const noexcept { return order_; }
  const Terms& terms() const noexcept { return terms_; }
  std::size_t size() const noexcept { return terms_.size(); }
  bool is_zero() const noexcept { return terms_.empty(); }

  T coefficient(const MultiIndex& a) const {
    auto it = terms_.find(a);
    return it == terms_.end() ? T(0) : it->second;
  }

  /// Lowest degree present, or order()+1 for the zero jet.
  int min_degree() const { return terms_.empty() ? order_ + 1 : terms_.begin()->first.degree(); }
  /// Highest degree present, or -1 for the zero jet.
  int max_degree() const { return terms_.empty() ? -1 : terms_.rbegin()->first.degree(); }

  Jet homogeneous_part(int m) const {
    Jet r(n_, order_);
    for (const auto& [a, c] : terms_) {
      if (a.degree() == m) r.terms_.emplace_hint(r.terms_.end(), a, c);
    }
    return r;
  }

  /// Terms of degree in [lo, hi].
  Jet degree_range(int lo, int hi) const {
    Jet r(n_, order_);
    for (const auto& [a, c] : terms_) {
      if (a.degree() >= lo && a.degree() <= hi) r.terms_.emplace_hint(r.terms_.end(), a, c);
    }
    return r;
  }

  /// Same series with order min(L, order()).
  Jet truncated(int L) const { return with_order(std::min(L, order_)); }

  /// Same terms reinterpreted at order L; terms above L are dropped.
  Jet with_order(int L) const {
    Jet r(n_, L);
    for (const auto& [a, c] : terms_) {
      if (a.degree() > L) break;
      r.terms_.emplace_hint(r.terms_.end(), a, c);
    }
    return r;
  }

  /// Adds c*x^a; ignored when |a| > order().
  void add_term(const MultiIndex& a, const T& c) {
    if (a.size() != n_) throw DimensionMismatch("monomial dimension differs from jet dimension");
    if (a.degree() > order_ || ScalarTraits<T>::is_zero(c)) return;
    auto [it, inserted] = terms_.emplace(a, c);
    if (!inserted) {
      it->second += c;
      if (ScalarTraits<T>::is_zero(it->second)) terms_.erase(it);
    }
  }

  Jet& operator+=(const Jet& o) { return accumulate(o, false); }
  Jet& operator-=(const Jet& o) { return accumulate(o, true); }

  Jet& operator*=(const T& s) {
    if (ScalarTraits<T>::is_zero(s)) {
      terms_.clear();
      return *this;
    }
    for (auto& [a, c] : terms_) c *= s;
    canonicalize();
    return *this;
  }

  /// d/dx_i; the result has order order()-1.
  Jet derivative(std::size_t i) const {
    if (i >= n_) throw DimensionMismatch("derivative index out of range");
    Jet r(n_, std::max(order_ - 1, 0));
    for (const auto& [a, c] : terms_) {
      if (a[i] == 0) continue;
      MultiIndex b(a);
      b.set(i, a[i] - 1);
      T v = c;
      v *= T(a[i]);
      r.add_term(b, v);
    }
    return r;
  }

  template <class U, class F>
  Jet<U> map_coefficients(F&& f) const {
    Jet<U> r(n_, order_);
    for (const auto& [a, c] : terms_) r.add_term(a, f(c));
    r.canonicalize();
    return r;
  }

  double evaluate(std::span<const double> x) const {
    if (x.size() != n_) throw DimensionMismatch("evaluation point dimension");
    double s = 0.0;
    for (const auto& [a, c] : terms_) {
      double m = ScalarTraits<T>::to_double(c);
      for (std::size_t i = 0; i < n_; ++i) {
        for (int k = 0; k < a[i]; ++k) m *= x[i];
      }
      s += m;
    }
    return s;
  }

  /// Removes zeros (exact) or coefficients below the relative threshold (binary64).
  void canonicalize() {
    if constexpr (ScalarTraits<T>::exact) {
      std::erase_if(terms_, [](const auto& kv) { return ScalarTraits<T>::is_zero(kv.second); });
    } else {
      double mx = 0.0;
      for (const auto& [a, c] : terms_) mx = std::max(mx, std::abs(c));
      const double cut = kFloatPruneRelative * mx;
      std::erase_if(terms_, [cut](const auto& kv) { return kv.second == 0.0 || std::abs(kv.second) < cut; });
    }
  }

  /// Direct access for bulk builders; callers must restore canonical form.
  Terms& mutable_terms() noexcept { return terms_; }

  friend bool operator==(const Jet& a, const Jet& b) {
    return a.n_ == b.n_ && a.order_ == b.order_ && a.terms_ == b.terms_;
  }

 private:
  Jet& accumulate(const Jet& o, bool subtract) {
    if (o.n_ != n_) throw DimensionMismatch("jet dimensions differ");
    if (o.order_ < order_) *this = with_order(o.order_);
    for (const auto& [a, c] : o.terms_) {
      if (a.degree() > order_) break;
      auto [it, inserted] = terms_.emplace(a, c);
      if (inserted) {
        if (subtract) it->second = -it->second;
      } else if (subtract) {
        it->second -= c;
      } else {
        it->second += c;
      }
    }
    canonicalize();
    return *this;
  }

  std::size_t n_ = 0;
  int order_ = 0;
  Terms terms_;
};

template <Coefficient T>
Jet<T> operator+(Jet<T> a, const Jet<T>& b) {
  return a += b;
}
template <Coefficient T>
Jet<T> operator-(Jet<T> a, const Jet<T>& b) {
  return a -= b;
}
template <Coefficient T>
Jet<T> operator-(Jet<T> a) {
  return a *= T(-1);
}
template <Coefficient T>
Jet<T> operator*(const T& s, Jet<T> a) {
  return a *= s;
}

/// Truncated product; order is min of the operand orders. When dropped is
/// non-null it is set if any nonzero product term exceeded the order.
template <Coefficient T>
Jet<T> multiply(const Jet<T>& a, const Jet<T>& b, bool* dropped = nullptr) {
  if (a.dimension() != b.dimension()) throw DimensionMismatch("jet dimensions differ");
  const int L = std::min(a.order(), b.order());
  Jet<T> r(a.dimension(), L);
  auto& out = r.mutable_terms();
  for (const auto& [ea, ca] : a.terms()) {
    const int da = ea.degree();
    if (da > L) {
      if (dropped && !b.is_zero()) *dropped = true;
      break;
    }
    for (const auto& [eb, cb] : b.terms()) {
      if (da + eb.degree() > L) {
        if (dropped) *dropped = true;
        break;
      }
      T prod = ca;
      prod *= cb;
      auto [it, inserted] = out.emplace(ea + eb, prod);
      if (!inserted) it->second += prod;
    }
  }
  r.canonicalize();
  return r;
}

template <Coefficient T>
Jet<T> operator*(const Jet<T>& a, const Jet<T>& b) {
  return multiply(a, b);
}

/// a^e by repeated squaring, truncated at a.order().
template <Coefficient T>
Jet<T> power(const Jet<T>& a, int e, bool* dropped = nullptr) {
  Jet<T> result = Jet<T>::constant(a.dimension(), a.order(), T(1));
  Jet<T> base = a;
  while (e > 0) {
    if (e & 1) result = multiply(result, base, dropped);
    e >>= 1;
    if (e > 0) base = multiply(base, base, dropped);
  }
  return result;
}

/// sum_k c_k z^k for a jet z without constant term (Horner, truncated).
template <Coefficient T>
Jet<T> power_series(const std::vector<T>& coeffs, const Jet<T>& z) {
  Jet<T> acc(z.dimension(), z.order());
  for (auto it = coeffs.rbegin(); it != coeffs.rend(); ++it) {
    acc = multiply(acc, z);
    acc += Jet<T>::constant(z.dimension(), z.order(), *it);
  }
  return acc;
}

/// Converts exact rational coefficients to another field.
template <Coefficient U>
Jet<U> convert(const Jet<Rational>& j) {
  return j.template map_coefficients<U>([](const Rational& q) { return ScalarTraits<U>::from_rational(q); });
}

}  // namespace morsenorm
