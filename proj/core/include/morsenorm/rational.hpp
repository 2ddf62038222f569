#pragma once

#include <gmpxx.h>

#include <optional>
#include <string>

namespace morsenorm {

using Rational = mpq_class;

/// num/den in lowest terms; den must be nonzero.
Rational make_rational(long num, long den = 1);

/// Exact value of a decimal literal such as "12", "0.125" or "3.".
Rational rational_from_decimal(const std::string& text);

/// "p/q" or "p".
std::string to_string(const Rational& q);

/// sqrt(q) when q is the square of a rational, otherwise nullopt.
std::optional<Rational> exact_sqrt(const Rational& q);

/// Best rational approximation with denominator <= max_den (continued fractions).
Rational rationalize(double value, long max_den);

}  // namespace morsenorm
