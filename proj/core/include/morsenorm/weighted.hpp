#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "morsenorm/truncated_field.hpp"

namespace morsenorm {

/// Exponent p > 1, derivative count k >= 0 and weight rate delta > 0 of
/// ||u||_{p,k,delta} = sum_{j=0..k} ( integral e^{-delta p t} |u^{(j)}(t)|^p dt )^{1/p}.
struct WeightedNormParams {
  double p = 2.0;
  int k = 0;
  double delta = 1.0;

  void validate() const;
};

/// n-vector samples u(t_i) on a strictly increasing grid ending at t = 0.
class TrajectoryGrid {
 public:
  TrajectoryGrid() = default;
  /// Zero-valued trajectory on the given nodes.
  TrajectoryGrid(std::vector<double> nodes, std::size_t dimension, WeightedNormParams params = {});

  std::size_t size() const noexcept { return t_.size(); }
  std::size_t dimension() const noexcept { return n_; }
  const std::vector<double>& nodes() const noexcept { return t_; }
  const WeightedNormParams& params() const noexcept { return params_; }
  void set_params(const WeightedNormParams& p) { params_ = p; }

  std::span<double> at(std::size_t i) { return {values_.data() + i * n_, n_}; }
  std::span<const double> at(std::size_t i) const { return {values_.data() + i * n_, n_}; }
  std::vector<double>& values() noexcept { return values_; }
  const std::vector<double>& values() const noexcept { return values_; }

  /// Throws PreconditionViolation for a malformed grid or one too coarse for k.
  void validate() const;

  TrajectoryGrid& operator-=(const TrajectoryGrid& o);
  TrajectoryGrid& operator*=(double s);

 private:
  std::vector<double> t_;
  std::size_t n_ = 0;
  std::vector<double> values_;
  WeightedNormParams params_;
};

/// intervals + 1 equally spaced nodes on [-horizon, 0].
std::vector<double> uniform_nodes(double horizon, std::size_t intervals);

/// intervals + 1 nodes on [-horizon, 0], fine near 0 and geometrically
/// coarser toward -horizon. grading = 0 gives the uniform grid.
std::vector<double> graded_nodes(double horizon, std::size_t intervals, double grading = 3.0);

/// j-th derivative of one component by three-point stencils (one-sided at the
/// ends), applied j times.
std::vector<double> grid_derivative(const TrajectoryGrid& u, std::size_t component, int j);

/// ||u||_{p,k,delta} by composite trapezoid quadrature, evaluated in log
/// space so large weights do not overflow before the p-th root.
double weighted_norm(const TrajectoryGrid& u);

/// Natural logarithm of the weighted norm; -infinity for u = 0.
double log_weighted_norm(const TrajectoryGrid& u);

/// C0(p) = 1/c where c in (0, 1] solves 1 = ((p-1)^{p-1} / p^p) c^p + c.
double lemma_integration_constant(double p);

/// W(t) = integral_{t_0}^{t} w by cumulative trapezoid.
TrajectoryGrid cumulative_integral(const TrajectoryGrid& w);

/// (F_x u)(t) = integral_{-T}^{t} [G(u(s) + F_s(x)) - V0(F_s(x))] ds on u's grid,
/// with G the truncated field.
TrajectoryGrid operator_F(const TruncatedField& field, std::span<const double> x, const TrajectoryGrid& u);

}  // namespace morsenorm
