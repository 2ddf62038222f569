#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "morsenorm/integrator.hpp"
#include "morsenorm/normal_form.hpp"
#include "morsenorm/truncated_field.hpp"

namespace morsenorm {

/// F_t(x)_i = x_i exp(lambda_i t). Throws FlowOverflow on non-finite output.
std::vector<double> flow_F(std::span<const double> lambda, std::span<const double> x, double t);

/// G_t(x) for the truncated field, local error per step bounded by tol.
std::vector<double> flow_G(const TruncatedField& field, std::span<const double> x, double t, double tol,
                           OdeStats* stats = nullptr);

/// First t >= 0 with |F_{-t}(x)| >= r_out; +infinity when every stable
/// component of x is zero and |x| < r_out.
double exit_time(std::span<const double> lambda, std::span<const double> x, double r_out);

struct ConjugacyPoint {
  std::vector<double> value;
  double exit_time = 0;
  OdeStats stats;
};

/// Phi(x) = G_T(F_{-T}(x)) with T the exit time plus extra_horizon; Phi(x) = x
/// when the exit time is infinite.
ConjugacyPoint conjugacy_phi(const TruncatedField& field, std::span<const double> x, double tol,
                             double extra_horizon = 0.0);

struct ManifoldConjugacyOptions {
  /// Accepted change between successive horizon doublings.
  double tol = 1e-9;
  double ode_rtol = 1e-12;
  double initial_horizon = 1.0;
  double horizon_cap = 200.0;
};

/// Psi_u(x) = lim F_T G_{-T}(x) (unstable) or Psi_s(x) = lim F_{-T} G_T(x)
/// (stable) for x on the corresponding coordinate block. Throws
/// ConvergenceFailure when the horizon cap is reached first.
std::vector<double> conjugacy_psi_manifold(const TruncatedField& field, std::span<const double> x, ManifoldKind which,
                                           const ManifoldConjugacyOptions& opts = {});

}  // namespace morsenorm
