#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace morsenorm {

/// Autonomous right-hand side f(y) written into out.
using OdeRhs = std::function<void(std::span<const double> y, std::span<double> out)>;

struct OdeOptions {
  double rtol = 1e-11;
  double atol = 1e-13;
  /// 0 picks a starting step from the derivative scale.
  double initial_step = 0.0;
  std::size_t max_steps = 2'000'000;
};

struct OdeStats {
  std::size_t accepted = 0;
  std::size_t rejected = 0;
  std::size_t evaluations = 0;
};

/// Called after every accepted step with the current time and state.
using OdeObserver = std::function<void(double t, std::span<const double> y)>;

/// Integrates y' = f(y) from y0 over a signed duration with the
/// Dormand-Prince 5(4) pair and PI step control. Throws IntegrationError on
/// step-size underflow or step budget exhaustion, FlowOverflow on
/// non-finite states.
std::vector<double> integrate(const OdeRhs& f, std::vector<double> y0, double duration, const OdeOptions& opts = {},
                              OdeStats* stats = nullptr, const OdeObserver& observer = {});

}  // namespace morsenorm
