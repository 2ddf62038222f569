#include "morsenorm/rational.hpp"

#include <cmath>
#include <stdexcept>

namespace morsenorm {

Rational make_rational(long num, long den) {
  if (den == 0) throw std::invalid_argument("zero denominator");
  Rational q(num, den);
  q.canonicalize();
  return q;
}

Rational rational_from_decimal(const std::string& text) {
  std::string mant = text;
  long exp10 = 0;
  if (const auto e = text.find_first_of("eE"); e != std::string::npos) {
    mant = text.substr(0, e);
    exp10 = std::stol(text.substr(e + 1));
  }
  bool negative = false;
  if (!mant.empty() && (mant[0] == '-' || mant[0] == '+')) {
    negative = mant[0] == '-';
    mant.erase(0, 1);
  }
  std::string digits = mant;
  if (const auto dot = mant.find('.'); dot != std::string::npos) {
    exp10 -= static_cast<long>(mant.size() - dot - 1);
    digits = mant.substr(0, dot) + mant.substr(dot + 1);
  }
  if (digits.empty()) throw std::invalid_argument("empty numeric literal");
  mpz_class num(digits, 10);
  if (negative) num = -num;
  mpz_class scale;
  mpz_ui_pow_ui(scale.get_mpz_t(), 10, static_cast<unsigned long>(exp10 < 0 ? -exp10 : exp10));
  Rational q = exp10 < 0 ? Rational(num, scale) : Rational(num * scale);
  q.canonicalize();
  return q;
}

std::string to_string(const Rational& q) { return q.get_str(); }

std::optional<Rational> exact_sqrt(const Rational& q) {
  if (sgn(q) < 0) return std::nullopt;
  const mpz_class& num = q.get_num();
  const mpz_class& den = q.get_den();
  if (!mpz_perfect_square_p(num.get_mpz_t()) || !mpz_perfect_square_p(den.get_mpz_t())) {
    return std::nullopt;
  }
  Rational r(sqrt(num), sqrt(den));
  r.canonicalize();
  return r;
}

Rational rationalize(double value, long max_den) {
  if (!std::isfinite(value)) throw std::invalid_argument("cannot rationalize a non-finite value");
  // Continued-fraction convergents h/k.
  long h0 = 0, h1 = 1, k0 = 1, k1 = 0;
  double x = value;
  for (int iter = 0; iter < 64; ++iter) {
    const double fl = std::floor(x);
    if (std::abs(fl) > 1e15) break;
    const long a = static_cast<long>(fl);
    const long h2 = a * h1 + h0;
    const long k2 = a * k1 + k0;
    if (k2 > max_den) break;
    h0 = h1;
    h1 = h2;
    k0 = k1;
    k1 = k2;
    const double frac = x - fl;
    if (frac < 1e-15) break;
    x = 1.0 / frac;
  }
  if (k1 == 0) return make_rational(static_cast<long>(std::llround(value)));
  return make_rational(h1, k1);
}

}  // namespace morsenorm
