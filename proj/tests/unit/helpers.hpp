#pragma once

#include <initializer_list>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "morsenorm/expression.hpp"
#include "morsenorm/vector_field.hpp"

namespace testing {

using morsenorm::CoordinateChange;
using morsenorm::Jet;
using morsenorm::MultiIndex;
using morsenorm::PolyVectorField;
using morsenorm::Rational;

inline Jet<Rational> J(const std::string& text, std::size_t n, int L) {
  return morsenorm::parse_expression(text, n, L).jet;
}

inline std::vector<Jet<Rational>> jets(std::initializer_list<const char*> texts, std::size_t n, int L) {
  std::vector<Jet<Rational>> out;
  for (const char* t : texts) out.push_back(J(t, n, L));
  return out;
}

inline PolyVectorField<Rational> field(std::initializer_list<const char*> texts, int L) {
  return PolyVectorField<Rational>(jets(texts, texts.size(), L));
}

inline CoordinateChange<Rational> change(std::initializer_list<const char*> texts, int L) {
  return CoordinateChange<Rational>(jets(texts, texts.size(), L));
}

/// Random small rational in [-range, range] with denominator up to den.
inline Rational random_rational(std::mt19937_64& rng, int range, int den) {
  std::uniform_int_distribution<int> num(-range * den, range * den);
  std::uniform_int_distribution<int> d(1, den);
  Rational q(num(rng), d(rng));
  q.canonicalize();
  return q;
}

/// Random jet with about `density` of the monomials in degrees [lo, hi] present.
inline Jet<Rational> random_jet(std::mt19937_64& rng, std::size_t n, int L, int lo, int hi, double density = 0.5) {
  Jet<Rational> j(n, L);
  std::bernoulli_distribution keep(density);
  for (const auto& a : morsenorm::multi_indices(n, lo, hi)) {
    if (keep(rng)) j.add_term(a, random_rational(rng, 3, 4));
  }
  return j;
}

/// Dense reference polynomial: exponent vector to coefficient.
using Brute = std::map<std::vector<int>, Rational>;

inline Brute brute(const Jet<Rational>& j) {
  Brute b;
  for (const auto& [a, c] : j.terms()) b[a.exponents()] = c;
  return b;
}

inline Brute brute_mul(const Brute& a, const Brute& b, int L) {
  Brute r;
  for (const auto& [ea, ca] : a) {
    for (const auto& [eb, cb] : b) {
      std::vector<int> e(ea.size());
      int deg = 0;
      for (std::size_t i = 0; i < e.size(); ++i) deg += (e[i] = ea[i] + eb[i]);
      if (deg > L) continue;
      r[e] += ca * cb;
    }
  }
  std::erase_if(r, [](const auto& kv) { return kv.second == 0; });
  return r;
}

inline Brute brute_add(Brute a, const Brute& b, const Rational& s = 1) {
  for (const auto& [e, c] : b) a[e] += s * c;
  std::erase_if(a, [](const auto& kv) { return kv.second == 0; });
  return a;
}

}  // namespace testing
