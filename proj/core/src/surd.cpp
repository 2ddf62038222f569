#include "morsenorm/surd.hpp"

#include <bit>
#include <cmath>
#include <sstream>

#include "morsenorm/errors.hpp"

namespace morsenorm {

std::pair<Rational, std::uint32_t> SurdContext::adjoin_sqrt(const Rational& d) {
  if (sgn(d) <= 0) throw PreconditionViolation("square root of a non-positive radicand");
  const std::uint32_t count = 1u << radicands_.size();
  for (std::uint32_t mask = 0; mask < count; ++mask) {
    Rational prod = 1;
    for (std::size_t i = 0; i < radicands_.size(); ++i) {
      if (mask & (1u << i)) prod *= radicands_[i];
    }
    if (auto q = exact_sqrt(Rational(d / prod))) return {*q, mask};
  }
  if (radicands_.size() >= kMaxGenerators) throw Error("too many independent square roots");
  radicands_.push_back(d);
  values_.push_back(std::sqrt(d.get_d()));
  return {Rational(1), 1u << (radicands_.size() - 1)};
}

SurdNumber::SurdNumber(const Rational& q) {
  if (sgn(q) != 0) terms_.emplace(0u, q);
}

SurdNumber::SurdNumber(long v) : SurdNumber(Rational(v)) {}

SurdNumber SurdNumber::sqrt_of(const Rational& d, const std::shared_ptr<SurdContext>& ctx) {
  auto [q, mask] = ctx->adjoin_sqrt(d);
  SurdNumber r;
  r.ctx_ = ctx;
  r.terms_.emplace(mask, q);
  return r;
}

bool SurdNumber::is_rational() const noexcept {
  return terms_.empty() || (terms_.size() == 1 && terms_.begin()->first == 0u);
}

Rational SurdNumber::rational_part() const {
  auto it = terms_.find(0u);
  return it == terms_.end() ? Rational(0) : it->second;
}

double SurdNumber::to_double() const {
  double s = 0.0;
  for (const auto& [mask, c] : terms_) {
    double v = c.get_d();
    for (std::size_t i = 0; mask >> i; ++i) {
      if (mask & (1u << i)) v *= ctx_->generator_value(i);
    }
    s += v;
  }
  return s;
}

void SurdNumber::adopt_context(const SurdNumber& o) {
  if (!o.ctx_) return;
  if (!ctx_) {
    ctx_ = o.ctx_;
  } else if (ctx_ != o.ctx_) {
    throw PreconditionViolation("surd numbers from different contexts");
  }
}

SurdNumber& SurdNumber::operator+=(const SurdNumber& o) {
  adopt_context(o);
  for (const auto& [mask, c] : o.terms_) {
    auto [it, inserted] = terms_.emplace(mask, c);
    if (!inserted) {
      it->second += c;
      if (sgn(it->second) == 0) terms_.erase(it);
    }
  }
  return *this;
}

SurdNumber& SurdNumber::operator-=(const SurdNumber& o) { return *this += -o; }

SurdNumber& SurdNumber::operator*=(const SurdNumber& o) {
  adopt_context(o);
  Terms out;
  for (const auto& [ma, ca] : terms_) {
    for (const auto& [mb, cb] : o.terms_) {
      Rational c = ca * cb;
      const std::uint32_t common = ma & mb;
      for (std::size_t i = 0; common >> i; ++i) {
        if (common & (1u << i)) c *= ctx_->radicand(i);
      }
      auto [it, inserted] = out.emplace(ma ^ mb, c);
      if (!inserted) it->second += c;
    }
  }
  std::erase_if(out, [](const auto& kv) { return sgn(kv.second) == 0; });
  terms_ = std::move(out);
  return *this;
}

SurdNumber SurdNumber::conjugate(std::size_t i) const {
  SurdNumber r(*this);
  for (auto& [mask, c] : r.terms_) {
    if (mask & (1u << i)) c = -c;
  }
  return r;
}

SurdNumber SurdNumber::inverse() const {
  if (is_zero()) throw std::domain_error("division by zero surd number");
  SurdNumber num(1L);
  num.ctx_ = ctx_;
  SurdNumber cur(*this);
  const std::size_t k = ctx_ ? ctx_->generator_count() : 0;
  for (std::size_t i = 0; i < k; ++i) {
    bool uses = false;
    for (const auto& [mask, c] : cur.terms_) uses = uses || (mask & (1u << i));
    if (!uses) continue;
    const SurdNumber conj = cur.conjugate(i);
    num *= conj;
    cur *= conj;
  }
  // cur is now a nonzero rational.
  const Rational r = cur.rational_part();
  return num * SurdNumber(Rational(1 / r));
}

std::string SurdNumber::to_string() const {
  if (terms_.empty()) return "0";
  std::ostringstream os;
  bool first = true;
  for (const auto& [mask, c] : terms_) {
    if (!first) os << " + ";
    first = false;
    os << c.get_str();
    for (std::size_t i = 0; mask >> i; ++i) {
      if (mask & (1u << i)) os << "*sqrt(" << ctx_->radicand(i).get_str() << ")";
    }
  }
  return os.str();
}

}  // namespace morsenorm
