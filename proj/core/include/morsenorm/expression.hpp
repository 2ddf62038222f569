#pragma once

#include <cstddef>
#include <string>
#include <string_view>

#include "morsenorm/jet.hpp"

namespace morsenorm {

struct ParsedExpression {
  Jet<Rational> jet;
  /// Set when the expanded polynomial had terms above the truncation order.
  bool truncated = false;
};

/// Largest exponent accepted by the parser.
inline constexpr int kMaxExponent = 512;

/// Parses a polynomial over variables x1..xn and expands it to order L.
///
///   expr    := term (('+' | '-') term)*
///   term    := factor (('*' | '/') factor)*      divisor must be a nonzero constant
///   factor  := ('+' | '-') factor | power
///   power   := primary ('^' integer)?
///   primary := number | 'x' digits | '(' expr ')'
///
/// Numbers are decimal literals, converted exactly. Throws ParseError.
ParsedExpression parse_expression(std::string_view text, std::size_t n, int L);

/// Text form of a jet; parse_expression reads it back to the same jet.
std::string to_expression(const Jet<Rational>& jet);

/// Display form with 17 significant digits (may use exponent notation, so it
/// is not guaranteed to re-parse).
std::string to_expression(const Jet<double>& jet);

}  // namespace morsenorm
