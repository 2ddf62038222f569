#pragma once

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <ostream>
#include <vector>

namespace morsenorm {

/// Exponent vector a = (a_1, ..., a_n) of the monomial x^a.
///
/// Ordering is graded lexicographic: lower total degree first, then a larger
/// exponent of x1 first (x1^2 < x1*x2 < x2^2).
class MultiIndex {
 public:
  MultiIndex() = default;
  explicit MultiIndex(std::size_t n) : e_(n, 0) {}
  MultiIndex(std::initializer_list<int> e) : e_(e) { recount(); }
  explicit MultiIndex(std::vector<int> e) : e_(std::move(e)) { recount(); }

  static MultiIndex unit(std::size_t n, std::size_t i) {
    MultiIndex a(n);
    a.set(i, 1);
    return a;
  }

  std::size_t size() const noexcept { return e_.size(); }
  int degree() const noexcept { return degree_; }
  int operator[](std::size_t i) const { return e_[i]; }
  const std::vector<int>& exponents() const noexcept { return e_; }

  void set(std::size_t i, int value) {
    degree_ += value - e_[i];
    e_[i] = value;
  }

  MultiIndex operator+(const MultiIndex& other) const {
    MultiIndex r(*this);
    for (std::size_t i = 0; i < e_.size(); ++i) r.e_[i] += other.e_[i];
    r.degree_ += other.degree_;
    return r;
  }

  /// Degree restricted to the coordinates [begin, end).
  int block_degree(std::size_t begin, std::size_t end) const {
    int d = 0;
    for (std::size_t i = begin; i < end && i < e_.size(); ++i) d += e_[i];
    return d;
  }

  friend bool operator==(const MultiIndex& a, const MultiIndex& b) { return a.e_ == b.e_; }

  friend bool operator<(const MultiIndex& a, const MultiIndex& b) {
    if (a.degree_ != b.degree_) return a.degree_ < b.degree_;
    for (std::size_t i = 0; i < a.e_.size() && i < b.e_.size(); ++i) {
      if (a.e_[i] != b.e_[i]) return a.e_[i] > b.e_[i];
    }
    return a.e_.size() < b.e_.size();
  }

  friend std::ostream& operator<<(std::ostream& os, const MultiIndex& a) {
    os << '(';
    for (std::size_t i = 0; i < a.e_.size(); ++i) os << (i ? "," : "") << a.e_[i];
    return os << ')';
  }

 private:
  void recount() {
    degree_ = 0;
    for (int v : e_) degree_ += v;
  }

  std::vector<int> e_;
  int degree_ = 0;
};

/// Calls fn(a) for every multi-index of total degree m in n variables, in
/// graded-lex order.
inline void for_each_multi_index(std::size_t n, int m,
                                 const std::function<void(const MultiIndex&)>& fn) {
  if (n == 0) {
    if (m == 0) fn(MultiIndex());
    return;
  }
  std::vector<int> e(n, 0);
  std::function<void(std::size_t, int)> rec = [&](std::size_t i, int left) {
    if (i + 1 == n) {
      e[i] = left;
      fn(MultiIndex(e));
      return;
    }
    for (int v = left; v >= 0; --v) {
      e[i] = v;
      rec(i + 1, left - v);
    }
  };
  rec(0, m);
}

/// All multi-indices with lo <= |a| <= hi, graded-lex.
inline std::vector<MultiIndex> multi_indices(std::size_t n, int lo, int hi) {
  std::vector<MultiIndex> out;
  for (int m = lo; m <= hi; ++m) for_each_multi_index(n, m, [&](const MultiIndex& a) { out.push_back(a); });
  return out;
}

}  // namespace morsenorm
