#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "morsenorm/vector_field.hpp"

namespace morsenorm {

/// Monomial c * x^a in component i of a field.
template <Coefficient T>
struct TermRecord {
  MultiIndex exponent;
  std::size_t component = 0;
  T coefficient;
};

template <Coefficient T>
struct HomologicalStep {
  int order = 0;
  std::vector<TermRecord<T>> removed_terms;
  /// y = x + (degree-order terms).
  CoordinateChange<T> correction;
  std::vector<TermRecord<T>> obstructions;
};

template <Coefficient T>
struct Normalization {
  /// Composite change Psi (old coordinates to new).
  CoordinateChange<T> change;
  /// V expressed in the new coordinates.
  PolyVectorField<T> field;
  std::vector<HomologicalStep<T>> steps;

  /// Resonant terms over all steps, in step order.
  std::vector<TermRecord<T>> obstructions() const {
    std::vector<TermRecord<T>> out;
    for (const auto& s : steps) out.insert(out.end(), s.obstructions.begin(), s.obstructions.end());
    return out;
  }
};

/// Selects which residual monomials x^a d/dx_i a pass may remove. An empty
/// filter targets every monomial.
using TermFilter = std::function<bool(const MultiIndex& a, std::size_t component)>;

/// Targets monomials confined to one coordinate block (x_u or x_s alone),
/// leaving mixed monomials in place. Blocks split at index k.
TermFilter block_terms(std::size_t k);

/// Targets mixed monomials whose smaller block degree is below alpha.
TermFilter cross_terms(std::size_t k, int alpha);

/// Solves the degree-m homological equation: each targeted nonresonant
/// degree-m term c x^a d/dx_i of V - V0 yields -c / (<a, lambda> - lambda_i) x^a
/// in component i of the correction. Resonant targeted terms are reported as
/// obstructions. Lower degrees must hold only resonant or untargeted terms.
template <Coefficient T>
HomologicalStep<T> homological_solve(const PolyVectorField<T>& V, std::span<const T> lambda, int m,
                                     const TermFilter& filter = {}, double float_zero = 1e-12);

/// Applies homological steps for m = 2..L, composing the corrections.
template <Coefficient T>
Normalization<T> normalize_to_order(const PolyVectorField<T>& V, std::span<const T> lambda, int L,
                                    const TermFilter& filter = {}, double float_zero = 1e-12);

template <Coefficient T>
struct CrossFlattening {
  CoordinateChange<T> change;
  PolyVectorField<T> field;
  std::vector<TermRecord<T>> obstructions;
};

/// Removes mixed monomials x_u^a x_s^b d/dx_i with min(|a|, |b|) < alpha.
/// Every monomial of V - V0 must be mixed.
template <Coefficient T>
CrossFlattening<T> cross_flatten(const PolyVectorField<T>& V, std::span<const T> lambda, std::size_t k, int alpha,
                                 double float_zero = 1e-12);

/// Residual monomials of V - V0 with a block degree below alpha.
template <Coefficient T>
std::vector<TermRecord<T>> cross_flatness_violations(const PolyVectorField<T>& V, std::span<const T> lambda,
                                                     std::size_t k, int alpha);

enum class ManifoldKind { Unstable, Stable };

/// Graph of an invariant manifold over its coordinate block. Unstable:
/// x_s = Y(x_u) with Y in k variables; stable: x_u = Z(x_s) in n - k variables.
template <Coefficient T>
struct ManifoldJet {
  ManifoldKind which = ManifoldKind::Unstable;
  std::size_t dimension = 0;
  std::size_t split = 0;
  std::vector<Jet<T>> graph;

  bool is_zero() const {
    for (const auto& g : graph)
      if (!g.is_zero()) return false;
    return true;
  }
};

template <Coefficient T>
ManifoldJet<T> invariant_manifold_jet(const PolyVectorField<T>& V, std::span<const T> lambda, std::size_t k,
                                      ManifoldKind which, double float_zero = 1e-12);

/// Parametrization x = psi(y) = (y_u + Z(y_s), y_s + Y(y_u)) mapping the
/// coordinate blocks onto the manifold graphs. Use with
/// pullback_by_parametrization.
template <Coefficient T>
CoordinateChange<T> straighten_manifolds(const ManifoldJet<T>& Y, const ManifoldJet<T>& Z);

/// Morse chart y = Phi(x) with f o Phi^{-1} = sum_i signs[i] y_i^2 through
/// the order of f.
struct MorseChart {
  CoordinateChange<SurdNumber> change;
  CoordinateChange<SurdNumber> inverse;
  /// -1 entries first unless a pattern was requested.
  std::vector<int> signs;
  /// Rational chart w with f o w^{-1} = sum_i signs[i] * scales[i] * w_i^2;
  /// change = diag(sqrt(scales)) o rational_change.
  CoordinateChange<Rational> rational_change;
  std::vector<Rational> scales;
};

/// Completing-the-square recursion with pivoting. f must vanish to first
/// order at the origin with nondegenerate Hessian. With a sign pattern the
/// output coordinates are ordered to match it.
MorseChart morse_lemma_jet(const Jet<Rational>& f, const std::optional<std::vector<int>>& signs = std::nullopt);

/// f o Phi^{-1} minus the signed sum of squares (zero when the chart is exact).
Jet<SurdNumber> morse_lemma_defect(const Jet<Rational>& f, const MorseChart& chart);

}  // namespace morsenorm
