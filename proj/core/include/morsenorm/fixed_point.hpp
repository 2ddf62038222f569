#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <vector>

#include "morsenorm/weighted.hpp"

namespace morsenorm {

struct FixedPointOptions {
  /// delta <= 0 selects delta_min(field, p).
  WeightedNormParams params{2.0, 0, 0.0};
  /// Longest grid horizon; 0 selects 12 / min |lambda_i|.
  double tmax = 0.0;
  /// Horizon beyond the exit time (the integrand vanishes before it).
  double margin = 1.0;
  /// Uniform step of the coarse grid.
  double step = 2e-3;
  /// Relative stopping tolerance on successive differences.
  double tol = 1e-12;
  int max_iterations = 200;
  /// Combine the step and half-step solutions to cancel the O(h^2) error.
  bool richardson = true;
  /// Extra weight rates at which the contraction ratio is also measured.
  std::vector<double> probe_deltas;
};

struct FixedPointDiagnostics {
  double delta = 0;
  double horizon = 0;
  double exit_time = 0;
  int iterations = 0;
  bool converged = false;
  /// ||u_{m+1} - u_m|| for each iteration (fine grid).
  std::vector<double> differences;
  /// Successive-difference ratios above the round-off floor.
  std::vector<double> ratios;
  /// Largest measured ratio (0 when the iteration is exact from the start).
  double rho = 0;
  /// rho at each probe delta.
  std::vector<double> probe_rho;
  /// Phi(x) = p(0, x) + x.
  std::vector<double> phi;
  /// Same without extrapolation.
  std::vector<double> phi_unextrapolated;
};

struct FixedPointResult {
  TrajectoryGrid trajectory;
  FixedPointDiagnostics diagnostics;
};

/// Iterates u_{m+1} = F_x(u_m) from u_0 = 0. Throws ContractionFailure, with
/// the measured ratios, when the ratios stay at or above 1 or the iteration
/// cap is reached.
FixedPointResult fixed_point_iterate(const TruncatedField& field, std::span<const double> x,
                                     const FixedPointOptions& opts = {});

/// 4 C0(p) (max |lambda_i| + sup |D(chi (V - V0))|), the supremum estimated by
/// central differences on a sample grid of the outer ball.
double delta_min(const TruncatedField& field, double p);

/// Sup over a sample grid of the outer ball of the Frobenius norm of D(chi (V - V0)).
double perturbation_lipschitz(const TruncatedField& field);

/// One row per node: t, u_1..u_n.
void write_trajectory_csv(std::ostream& os, const TrajectoryGrid& u);

}  // namespace morsenorm
