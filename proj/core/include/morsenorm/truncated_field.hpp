#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "morsenorm/problem.hpp"
#include "morsenorm/vector_field.hpp"

namespace morsenorm {

/// Radial cutoff chi(r): 1 for r <= inner, 0 for r >= outer, smooth between,
/// built from the profile exp(-1/t).
double bump_cutoff(double r, const BumpParams& bump);

/// x -> V0(x) + chi(|x|) (V - V0)(x) for a field whose linear part is
/// diag(lambda). Equals V0 exactly outside the outer radius and V exactly
/// inside the inner one.
class TruncatedField {
 public:
  TruncatedField(const PolyVectorField<double>& V, std::vector<double> lambda, BumpParams bump);

  /// Linear field V0 with the bump disabled.
  static TruncatedField linear(std::vector<double> lambda, BumpParams bump);

  std::size_t dimension() const noexcept { return lambda_.size(); }
  const std::vector<double>& eigenvalues() const noexcept { return lambda_; }
  const BumpParams& bump() const noexcept { return bump_; }
  /// True when V - V0 has no terms.
  bool is_linear() const noexcept;

  void evaluate(std::span<const double> x, std::span<double> out) const;
  std::vector<double> operator()(std::span<const double> x) const;

  /// V0(x).
  void linear_part(std::span<const double> x, std::span<double> out) const;
  /// chi(|x|) (V - V0)(x).
  void perturbation(std::span<const double> x, std::span<double> out) const;

 private:
  struct Term {
    double coefficient;
    std::vector<std::pair<std::size_t, int>> factors;
  };

  std::vector<double> lambda_;
  BumpParams bump_;
  std::vector<std::vector<Term>> residual_;
  int max_exponent_ = 0;
};

}  // namespace morsenorm
