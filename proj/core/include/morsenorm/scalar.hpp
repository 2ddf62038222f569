#pragma once

#include <cmath>
#include <concepts>

#include "morsenorm/rational.hpp"
#include "morsenorm/surd.hpp"

namespace morsenorm {

/// Uniform interface over the coefficient fields used by jets.
template <class T>
struct ScalarTraits;

template <>
struct ScalarTraits<double> {
  static constexpr bool exact = false;
  static double from_rational(const Rational& q) { return q.get_d(); }
  static bool is_zero(double x) { return x == 0.0; }
  static double to_double(double x) { return x; }
};

template <>
struct ScalarTraits<Rational> {
  static constexpr bool exact = true;
  static Rational from_rational(const Rational& q) { return q; }
  static bool is_zero(const Rational& x) { return sgn(x) == 0; }
  static double to_double(const Rational& x) { return x.get_d(); }
};

template <>
struct ScalarTraits<SurdNumber> {
  static constexpr bool exact = true;
  static SurdNumber from_rational(const Rational& q) { return SurdNumber(q); }
  static bool is_zero(const SurdNumber& x) { return x.is_zero(); }
  static double to_double(const SurdNumber& x) { return x.to_double(); }
};

template <class T>
concept Coefficient = requires(const T& x) {
  { ScalarTraits<T>::exact } -> std::convertible_to<bool>;
  { ScalarTraits<T>::is_zero(x) } -> std::convertible_to<bool>;
};

template <Coefficient T>
bool is_zero(const T& x) {
  return ScalarTraits<T>::is_zero(x);
}

template <Coefficient T>
double to_double(const T& x) {
  return ScalarTraits<T>::to_double(x);
}

/// Zero test for divisors and resonance denominators: exact for exact fields,
/// |x| <= tol * scale for binary64.
template <Coefficient T>
bool is_negligible(const T& x, double scale, double tol) {
  if constexpr (ScalarTraits<T>::exact) {
    (void)scale;
    (void)tol;
    return ScalarTraits<T>::is_zero(x);
  } else {
    return std::abs(x) <= tol * scale;
  }
}

}  // namespace morsenorm
