#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "morsenorm/jet.hpp"
#include "morsenorm/linalg.hpp"

namespace morsenorm {

/// V = sum_i V_i(x) d/dx_i with jet components.
template <Coefficient T>
class PolyVectorField {
 public:
  PolyVectorField() = default;
  explicit PolyVectorField(std::vector<Jet<T>> components);

  /// V0 = sum_i lambda_i x_i d/dx_i.
  static PolyVectorField linear_diagonal(std::span<const T> lambda, int order);

  std::size_t dimension() const noexcept { return components_.size(); }
  int order() const noexcept;
  const std::vector<Jet<T>>& components() const noexcept { return components_; }
  const Jet<T>& operator[](std::size_t i) const { return components_[i]; }

  /// Matrix of degree-1 coefficients: entry (i, j) is the x_j coefficient of V_i.
  DenseMatrix<T> linear_part() const;

  /// lambda when the linear part is exactly diagonal, otherwise nullopt.
  std::optional<std::vector<T>> eigen_linear_part() const;

  /// V - V0 for V0 = diag(lambda).
  PolyVectorField residual(std::span<const T> lambda) const;

  PolyVectorField truncated(int L) const;

  friend bool operator==(const PolyVectorField& a, const PolyVectorField& b) {
    return a.components_ == b.components_;
  }

 private:
  std::vector<Jet<T>> components_;
};

/// Origin-fixing map y = g(x) given by n jets with invertible linear part.
template <Coefficient T>
class CoordinateChange {
 public:
  CoordinateChange() = default;
  /// Validates zero constant terms and invertible linear part (|det| > tol in binary64).
  explicit CoordinateChange(std::vector<Jet<T>> components, double tol = 1e-12);

  static CoordinateChange identity(std::size_t n, int order);
  static CoordinateChange linear(const DenseMatrix<T>& a, int order);

  std::size_t dimension() const noexcept { return components_.size(); }
  int order() const noexcept;
  const std::vector<Jet<T>>& components() const noexcept { return components_; }
  const Jet<T>& operator[](std::size_t i) const { return components_[i]; }
  const DenseMatrix<T>& linear_part() const noexcept { return linear_; }

  bool is_identity() const;

  friend bool operator==(const CoordinateChange& a, const CoordinateChange& b) {
    return a.components_ == b.components_;
  }

 private:
  std::vector<Jet<T>> components_;
  DenseMatrix<T> linear_;
};

/// Substitutes x_j -> g_j(y) into jets in m = images.size() variables.
///
/// Images of monomials g^a are memoized, so substituting many jets into the
/// same map is cheap. Not safe for concurrent use of one instance.
template <Coefficient T>
class Substitution {
 public:
  explicit Substitution(std::vector<Jet<T>> images);

  Jet<T> operator()(const Jet<T>& f) const;

  std::size_t source_dimension() const noexcept { return images_.size(); }
  std::size_t target_dimension() const noexcept { return n_; }

 private:
  const Jet<T>& monomial_image(const MultiIndex& a) const;

  std::vector<Jet<T>> images_;
  std::size_t n_ = 0;
  int order_ = 0;
  mutable std::map<MultiIndex, Jet<T>> cache_;
};

/// f o g through order min(L_f, L_g).
template <Coefficient T>
Jet<T> compose(const Jet<T>& f, const CoordinateChange<T>& g);

/// g o h.
template <Coefficient T>
CoordinateChange<T> compose(const CoordinateChange<T>& g, const CoordinateChange<T>& h);

/// h with g o h = h o g = id through order L.
template <Coefficient T>
CoordinateChange<T> invert_to_order(const CoordinateChange<T>& g);

/// L_V f = sum_i V_i df/dx_i.
template <Coefficient T>
Jet<T> lie_derivative(const PolyVectorField<T>& V, const Jet<T>& f);

/// Expresses V in the coordinates y = g(x): W(y) = (Dg V)(g^{-1}(y)).
/// Componentwise W_l = (L_V g_l) o g^{-1}.
template <Coefficient T>
PolyVectorField<T> pullback_field(const PolyVectorField<T>& V, const CoordinateChange<T>& g);

/// Same, for a map given as x = h(y) (new coordinates to old).
template <Coefficient T>
PolyVectorField<T> pullback_by_parametrization(const PolyVectorField<T>& V, const CoordinateChange<T>& h);

/// Restriction of f to a coordinate block: substitutes the given jets for
/// every variable. Used for maps between spaces of different dimension.
template <Coefficient T>
Jet<T> substitute(const Jet<T>& f, const std::vector<Jet<T>>& images);

}  // namespace morsenorm
