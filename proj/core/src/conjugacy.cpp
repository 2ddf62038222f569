#include "morsenorm/conjugacy.hpp"

#include <cmath>
#include <limits>

namespace morsenorm {
namespace {

double norm2(std::span<const double> x) {
  double s = 0;
  for (double v : x) s += v * v;
  return std::sqrt(s);
}

double distance(std::span<const double> a, std::span<const double> b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

OdeRhs rhs_of(const TruncatedField& field) {
  return [&field](std::span<const double> y, std::span<double> out) { field.evaluate(y, out); };
}

}  // namespace

std::vector<double> flow_F(std::span<const double> lambda, std::span<const double> x, double t) {
  if (lambda.size() != x.size()) throw DimensionMismatch("point dimension differs from eigenvalue count");
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    out[i] = x[i] == 0.0 ? 0.0 : x[i] * std::exp(lambda[i] * t);
    if (!std::isfinite(out[i])) throw FlowOverflow("linear flow overflows at t = " + std::to_string(t));
  }
  return out;
}

std::vector<double> flow_G(const TruncatedField& field, std::span<const double> x, double t, double tol,
                           OdeStats* stats) {
  if (x.size() != field.dimension()) throw DimensionMismatch("point dimension differs from field dimension");
  OdeOptions opts;
  opts.rtol = tol;
  opts.atol = tol;
  return integrate(rhs_of(field), std::vector<double>(x.begin(), x.end()), t, opts, stats);
}

double exit_time(std::span<const double> lambda, std::span<const double> x, double r_out) {
  if (norm2(x) >= r_out) return 0.0;
  double hi = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (lambda[i] < 0 && x[i] != 0.0) hi = std::min(hi, std::log(r_out / std::abs(x[i])) / -lambda[i]);
  }
  if (!std::isfinite(hi)) return hi;
  // |F_{-t}(x)|^2 is convex in t, so the first crossing is unique.
  auto outside = [&](double t) {
    double s = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double v = x[i] * std::exp(-lambda[i] * t);
      s += v * v;
    }
    return s >= r_out * r_out;
  };
  double lo = 0;
  for (int it = 0; it < 200 && hi - lo > 4 * std::numeric_limits<double>::epsilon() * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    (outside(mid) ? hi : lo) = mid;
  }
  return hi;
}

ConjugacyPoint conjugacy_phi(const TruncatedField& field, std::span<const double> x, double tol, double extra_horizon) {
  if (x.size() != field.dimension()) throw DimensionMismatch("point dimension differs from field dimension");
  ConjugacyPoint out;
  out.exit_time = exit_time(field.eigenvalues(), x, field.bump().outer);
  if (!std::isfinite(out.exit_time)) {
    out.value.assign(x.begin(), x.end());
    return out;
  }
  const double T = out.exit_time + extra_horizon;
  const std::vector<double> start = flow_F(field.eigenvalues(), x, -T);
  out.value = flow_G(field, start, T, tol, &out.stats);
  return out;
}

std::vector<double> conjugacy_psi_manifold(const TruncatedField& field, std::span<const double> x, ManifoldKind which,
                                           const ManifoldConjugacyOptions& opts) {
  const auto& lambda = field.eigenvalues();
  if (x.size() != lambda.size()) throw DimensionMismatch("point dimension differs from field dimension");
  const bool unstable = which == ManifoldKind::Unstable;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const bool on_block = unstable ? lambda[i] > 0 : lambda[i] < 0;
    if (!on_block && x[i] != 0.0) throw PreconditionViolation("point is not on the requested coordinate block");
  }
  if (norm2(x) >= field.bump().inner) throw PreconditionViolation("point must lie inside the inner bump radius");
  const double dir = unstable ? -1.0 : 1.0;

  OdeOptions ode;
  ode.rtol = opts.ode_rtol;
  ode.atol = std::numeric_limits<double>::min();
  const OdeRhs f = rhs_of(field);

  double T = opts.initial_horizon;
  std::vector<double> y = integrate(f, std::vector<double>(x.begin(), x.end()), dir * T, ode);
  std::vector<double> prev = flow_F(lambda, y, -dir * T);
  while (2 * T <= opts.horizon_cap) {
    y = integrate(f, y, dir * T, ode);
    T *= 2;
    std::vector<double> next = flow_F(lambda, y, -dir * T);
    const double change = distance(next, prev);
    prev = std::move(next);
    if (change <= opts.tol * (1.0 + norm2(prev))) return prev;
  }
  throw ConvergenceFailure("manifold conjugacy did not settle before the horizon cap");
}

}  // namespace morsenorm
