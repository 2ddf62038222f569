#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "morsenorm/rational.hpp"

namespace morsenorm {

/// Generators t_i = sqrt(d_i) of a multiquadratic field Q(t_1, ..., t_k).
///
/// Radicands are kept multiplicatively independent modulo rational squares,
/// so the basis {t_S = prod_{i in S} t_i} is linearly independent over Q and
/// every nonzero element is invertible. Contexts only grow; existing elements
/// stay valid when a generator is added.
class SurdContext {
 public:
  static constexpr std::size_t kMaxGenerators = 16;

  /// Returns (q, S) with sqrt(d) = q * t_S, adding a generator when sqrt(d)
  /// is not already in the field. d must be positive.
  std::pair<Rational, std::uint32_t> adjoin_sqrt(const Rational& d);

  std::size_t generator_count() const noexcept { return radicands_.size(); }
  const Rational& radicand(std::size_t i) const { return radicands_[i]; }
  double generator_value(std::size_t i) const { return values_[i]; }

 private:
  std::vector<Rational> radicands_;
  std::vector<double> values_;
};

/// Element of Q(sqrt d_1, ..., sqrt d_k), stored as a sparse combination of
/// the products t_S.
class SurdNumber {
 public:
  using Terms = std::map<std::uint32_t, Rational>;

  SurdNumber() = default;
  SurdNumber(const Rational& q);  // NOLINT(google-explicit-constructor)
  SurdNumber(long v);             // NOLINT(google-explicit-constructor)
  SurdNumber(int v) : SurdNumber(static_cast<long>(v)) {}  // NOLINT

  /// sqrt(d) for rational d > 0 inside ctx.
  static SurdNumber sqrt_of(const Rational& d, const std::shared_ptr<SurdContext>& ctx);

  bool is_zero() const noexcept { return terms_.empty(); }
  bool is_rational() const noexcept;
  /// Coefficient of the basis element 1.
  Rational rational_part() const;
  double to_double() const;
  SurdNumber inverse() const;
  std::string to_string() const;

  const Terms& terms() const noexcept { return terms_; }
  const std::shared_ptr<SurdContext>& context() const noexcept { return ctx_; }

  SurdNumber& operator+=(const SurdNumber& o);
  SurdNumber& operator-=(const SurdNumber& o);
  SurdNumber& operator*=(const SurdNumber& o);
  SurdNumber& operator/=(const SurdNumber& o) { return *this *= o.inverse(); }

  friend SurdNumber operator+(SurdNumber a, const SurdNumber& b) { return a += b; }
  friend SurdNumber operator-(SurdNumber a, const SurdNumber& b) { return a -= b; }
  friend SurdNumber operator*(SurdNumber a, const SurdNumber& b) { return a *= b; }
  friend SurdNumber operator/(SurdNumber a, const SurdNumber& b) { return a /= b; }
  friend SurdNumber operator-(SurdNumber a) {
    for (auto& [m, c] : a.terms_) c = -c;
    return a;
  }
  friend bool operator==(const SurdNumber& a, const SurdNumber& b) { return a.terms_ == b.terms_; }

 private:
  void adopt_context(const SurdNumber& o);
  /// Applies t_i -> -t_i.
  SurdNumber conjugate(std::size_t i) const;

  std::shared_ptr<SurdContext> ctx_;
  Terms terms_;
};

}  // namespace morsenorm
