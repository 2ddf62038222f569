#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "morsenorm/multi_index.hpp"
#include "morsenorm/problem.hpp"
#include "morsenorm/vector_field.hpp"

namespace morsenorm {

/// Morse eigenvalues at a critical point, unstable (positive) block first.
struct Spectrum {
  /// Descending.
  std::vector<double> eigenvalues;
  /// Number of negative eigenvalues.
  std::size_t morse_index = 0;
  /// Number of positive eigenvalues.
  std::size_t unstable_dimension = 0;
  /// Columns are eigenvectors: A^{-1} (g^{-1} Hess f) A = diag(eigenvalues).
  Eigen::MatrixXd diagonalizer;
  /// Half-open index ranges of equal eigenvalues.
  std::vector<std::pair<std::size_t, std::size_t>> multiplicity_groups;
};

struct ResonanceWitness {
  MultiIndex exponent;
  std::size_t component = 0;
  friend bool operator==(const ResonanceWitness&, const ResonanceWitness&) = default;
};

struct ResonanceReport {
  int scanned_order = 0;
  /// Graded-lex in the exponent, then by component.
  std::vector<ResonanceWitness> witnesses;
  bool satisfied = true;
};

struct CriticalPointSearch {
  std::vector<Eigen::VectorXd> points;
  std::vector<Eigen::VectorXd> unconverged_seeds;
  std::vector<Eigen::VectorXd> degenerate_points;
};

/// Result of bringing the linear part of a field to diag(lambda).
template <Coefficient T>
struct LinearNormalization {
  /// y = change(x) are the eigen-coordinates.
  CoordinateChange<T> change;
  std::vector<T> eigenvalues;
  PolyVectorField<T> field;
};

Eigen::VectorXd gradient_at(const ProblemSpec& spec, const Eigen::VectorXd& p);
Eigen::MatrixXd hessian_at(const ProblemSpec& spec, const Eigen::VectorXd& p);
Eigen::MatrixXd metric_at(const ProblemSpec& spec, const Eigen::VectorXd& p);

/// Newton iteration on grad f from every seed; results deduplicated and sorted.
CriticalPointSearch find_critical_points(const ProblemSpec& spec, std::span<const Eigen::VectorXd> seeds);

/// Uniform grid of seeds over the ball of radius spec.radius.
std::vector<Eigen::VectorXd> default_seeds(const ProblemSpec& spec, int per_axis = 7);

/// Eigenvalues of g(p)^{-1} Hess f(p) (function mode) or of the linear part
/// of the raw field at p = 0. Throws DegenerateCriticalPoint, ComplexSpectrum.
Spectrum morse_eigenvalues(const ProblemSpec& spec, const Eigen::VectorXd& p);

/// Scans 2 <= |a| <= max_order for <a, lambda> - lambda_i = 0: exactly for
/// rationals, within float_zero * (1 + |<a, lambda>|) for binary64.
template <Coefficient T>
ResonanceReport check_N_linearity(std::span<const T> lambda, int max_order, double float_zero = 1e-12);

/// Linear change y = A^{-1} x with A the diagonalizer of the spectrum at p.
CoordinateChange<double> diagonalize_at_critical(const ProblemSpec& spec, const Eigen::VectorXd& p);

/// Exact diagonalization when every eigenvalue of the linear part is
/// rational and the part is diagonalizable over Q; nullopt otherwise.
std::optional<LinearNormalization<Rational>> diagonalize_exact(const PolyVectorField<Rational>& V);

/// Binary64 diagonalization. With metric0 set, uses the symmetric-definite
/// pencil (g0 * M, g0); otherwise a general real eigensolver.
LinearNormalization<double> diagonalize_float(const PolyVectorField<double>& V, const Eigen::MatrixXd* metric0,
                                              double float_zero);

/// f(x + p) with binary64 coefficients; the order is unchanged.
Jet<double> shift_origin(const Jet<Rational>& f, const Eigen::VectorXd& p);

/// Field of the problem expanded around p (binary64): V(x + p).
PolyVectorField<double> source_field_at(const ProblemSpec& spec, const Eigen::VectorXd& p);

}  // namespace morsenorm
