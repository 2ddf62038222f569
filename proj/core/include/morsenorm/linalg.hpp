#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <vector>

#include "morsenorm/errors.hpp"
#include "morsenorm/scalar.hpp"

namespace morsenorm {

/// Small dense row-major matrix over an exact or binary64 field.
template <Coefficient T>
class DenseMatrix {
 public:
  DenseMatrix() = default;
  DenseMatrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols, T(0)) {}

  static DenseMatrix identity(std::size_t n) {
    DenseMatrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = T(1);
    return m;
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  T& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  const T& operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  friend DenseMatrix operator*(const DenseMatrix& a, const DenseMatrix& b) {
    if (a.cols_ != b.rows_) throw DimensionMismatch("matrix product shapes");
    DenseMatrix r(a.rows_, b.cols_);
    for (std::size_t i = 0; i < a.rows_; ++i) {
      for (std::size_t k = 0; k < a.cols_; ++k) {
        if (ScalarTraits<T>::is_zero(a(i, k))) continue;
        for (std::size_t j = 0; j < b.cols_; ++j) {
          T v = a(i, k);
          v *= b(k, j);
          r(i, j) += v;
        }
      }
    }
    return r;
  }

  friend bool operator==(const DenseMatrix& a, const DenseMatrix& b) {
    return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.data_ == b.data_;
  }

  DenseMatrix transpose() const {
    DenseMatrix r(cols_, rows_);
    for (std::size_t i = 0; i < rows_; ++i)
      for (std::size_t j = 0; j < cols_; ++j) r(j, i) = (*this)(i, j);
    return r;
  }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<T> data_;
};

namespace detail {

/// Row index of the pivot in column c among rows >= r; largest magnitude
/// among entries that are nonzero (exact) or above tol (binary64).
template <Coefficient T>
std::optional<std::size_t> choose_pivot(const DenseMatrix<T>& m, std::size_t r, std::size_t c, double tol) {
  std::optional<std::size_t> best;
  double best_mag = 0.0;
  for (std::size_t i = r; i < m.rows(); ++i) {
    if (ScalarTraits<T>::is_zero(m(i, c))) continue;
    const double mag = std::abs(ScalarTraits<T>::to_double(m(i, c)));
    if constexpr (!ScalarTraits<T>::exact) {
      if (mag <= tol) continue;
    }
    if (!best || mag > best_mag) {
      best = i;
      best_mag = mag;
    }
  }
  return best;
}

}  // namespace detail

/// Gauss-Jordan inverse; throws SingularLinearPart when singular (exactly,
/// or with a pivot below tol in binary64).
template <Coefficient T>
DenseMatrix<T> inverse(const DenseMatrix<T>& m, double tol = 1e-12) {
  if (m.rows() != m.cols()) throw DimensionMismatch("inverse of a non-square matrix");
  const std::size_t n = m.rows();
  DenseMatrix<T> a = m;
  DenseMatrix<T> inv = DenseMatrix<T>::identity(n);
  for (std::size_t c = 0; c < n; ++c) {
    auto p = detail::choose_pivot(a, c, c, tol);
    if (!p) throw SingularLinearPart("matrix is singular");
    if (*p != c) {
      for (std::size_t j = 0; j < n; ++j) {
        std::swap(a(c, j), a(*p, j));
        std::swap(inv(c, j), inv(*p, j));
      }
    }
    const T piv = a(c, c);
    for (std::size_t j = 0; j < n; ++j) {
      a(c, j) /= piv;
      inv(c, j) /= piv;
    }
    for (std::size_t i = 0; i < n; ++i) {
      if (i == c || ScalarTraits<T>::is_zero(a(i, c))) continue;
      const T f = a(i, c);
      for (std::size_t j = 0; j < n; ++j) {
        T v = f;
        v *= a(c, j);
        a(i, j) -= v;
        T w = f;
        w *= inv(c, j);
        inv(i, j) -= w;
      }
    }
  }
  return inv;
}

template <Coefficient T>
T determinant(const DenseMatrix<T>& m) {
  if (m.rows() != m.cols()) throw DimensionMismatch("determinant of a non-square matrix");
  const std::size_t n = m.rows();
  DenseMatrix<T> a = m;
  T det(1);
  for (std::size_t c = 0; c < n; ++c) {
    auto p = detail::choose_pivot(a, c, c, 0.0);
    if (!p) return T(0);
    if (*p != c) {
      for (std::size_t j = 0; j < n; ++j) std::swap(a(c, j), a(*p, j));
      det = -det;
    }
    det *= a(c, c);
    for (std::size_t i = c + 1; i < n; ++i) {
      if (ScalarTraits<T>::is_zero(a(i, c))) continue;
      const T f = a(i, c) / a(c, c);
      for (std::size_t j = c; j < n; ++j) {
        T v = f;
        v *= a(c, j);
        a(i, j) -= v;
      }
    }
  }
  return det;
}

/// Basis of the null space of m (exact arithmetic), as columns.
template <Coefficient T>
std::vector<std::vector<T>> null_space(const DenseMatrix<T>& m) {
  const std::size_t rows = m.rows();
  const std::size_t cols = m.cols();
  DenseMatrix<T> a = m;
  std::vector<std::size_t> pivot_cols;
  std::size_t r = 0;
  for (std::size_t c = 0; c < cols && r < rows; ++c) {
    auto p = detail::choose_pivot(a, r, c, 0.0);
    if (!p) continue;
    if (*p != r)
      for (std::size_t j = 0; j < cols; ++j) std::swap(a(r, j), a(*p, j));
    const T piv = a(r, c);
    for (std::size_t j = 0; j < cols; ++j) a(r, j) /= piv;
    for (std::size_t i = 0; i < rows; ++i) {
      if (i == r || ScalarTraits<T>::is_zero(a(i, c))) continue;
      const T f = a(i, c);
      for (std::size_t j = 0; j < cols; ++j) {
        T v = f;
        v *= a(r, j);
        a(i, j) -= v;
      }
    }
    pivot_cols.push_back(c);
    ++r;
  }
  std::vector<std::vector<T>> basis;
  std::vector<bool> is_pivot(cols, false);
  for (auto c : pivot_cols) is_pivot[c] = true;
  for (std::size_t f = 0; f < cols; ++f) {
    if (is_pivot[f]) continue;
    std::vector<T> v(cols, T(0));
    v[f] = T(1);
    for (std::size_t k = 0; k < pivot_cols.size(); ++k) v[pivot_cols[k]] = -a(k, f);
    basis.push_back(std::move(v));
  }
  return basis;
}

}  // namespace morsenorm
