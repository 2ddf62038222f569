#include "morsenorm/fixed_point.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>

#include "morsenorm/conjugacy.hpp"

namespace morsenorm {
namespace {

struct GridRun {
  TrajectoryGrid u;
  std::vector<double> differences;
  /// ratios[d] for params delta then each probe delta.
  std::vector<std::vector<double>> ratios;
  int iterations = 0;
  bool converged = false;
};

constexpr double kFloor = 1e3 * std::numeric_limits<double>::epsilon();

GridRun run_on_grid(const TruncatedField& field, std::span<const double> x, std::vector<double> nodes,
                    const WeightedNormParams& params, const FixedPointOptions& opts) {
  const std::size_t n = field.dimension();
  const std::size_t N = nodes.size();
  const auto& lambda = field.eigenvalues();

  std::vector<double> base(N * n);
  for (std::size_t i = 0; i < N; ++i) {
    const auto b = flow_F(lambda, x, nodes[i]);
    std::copy(b.begin(), b.end(), base.begin() + static_cast<std::ptrdiff_t>(i * n));
  }

  std::vector<WeightedNormParams> probes{params};
  for (double d : opts.probe_deltas) probes.push_back({params.p, params.k, d});

  GridRun run;
  run.u = TrajectoryGrid(nodes, n, params);
  run.ratios.resize(probes.size());
  std::vector<double> prev_log(probes.size(), -std::numeric_limits<double>::infinity());

  TrajectoryGrid integrand(nodes, n, params);
  std::vector<double> y(n), out(n);
  int above_one = 0;

  for (int m = 0; m < opts.max_iterations; ++m) {
    for (std::size_t i = 0; i < N; ++i) {
      auto ui = run.u.at(i);
      for (std::size_t c = 0; c < n; ++c) y[c] = ui[c] + base[i * n + c];
      field.perturbation(y, out);
      auto gi = integrand.at(i);
      for (std::size_t c = 0; c < n; ++c) gi[c] = out[c] + lambda[c] * ui[c];
    }
    TrajectoryGrid next = cumulative_integral(integrand);
    TrajectoryGrid diff = next;
    diff -= run.u;
    run.u = std::move(next);
    run.iterations = m + 1;

    bool stop = false;
    for (std::size_t d = 0; d < probes.size(); ++d) {
      diff.set_params(probes[d]);
      run.u.set_params(probes[d]);
      const double log_diff = log_weighted_norm(diff);
      const double log_u = log_weighted_norm(run.u);
      const double floor = std::log(kFloor) + log_u;
      if (prev_log[d] > floor && log_diff > floor) run.ratios[d].push_back(std::exp(log_diff - prev_log[d]));
      prev_log[d] = log_diff;
      if (d == 0) {
        run.differences.push_back(std::exp(log_diff));
        if (!std::isfinite(log_diff) || log_diff <= std::log(opts.tol) + log_u) stop = true;
        if (!run.ratios[0].empty() && log_diff > floor) {
          above_one = run.ratios[0].back() >= 1.0 ? above_one + 1 : 0;
        }
      }
    }
    run.u.set_params(params);
    if (above_one >= 5) throw ContractionFailure("successive differences are not contracting", run.ratios[0]);
    if (stop) {
      run.converged = true;
      break;
    }
  }
  if (!run.converged) throw ContractionFailure("fixed-point iteration reached its iteration cap", run.ratios[0]);
  return run;
}

double max_or_zero(const std::vector<double>& v) { return v.empty() ? 0.0 : *std::max_element(v.begin(), v.end()); }

}  // namespace

double perturbation_lipschitz(const TruncatedField& field) {
  const std::size_t n = field.dimension();
  if (field.is_linear()) return 0.0;
  const double R = field.bump().outer;
  const int per_axis =
      std::clamp(static_cast<int>(std::floor(std::pow(20000.0, 1.0 / static_cast<double>(n)))), 3, 41);
  const double h = 1e-6 * R;
  std::vector<int> idx(n, 0);
  std::vector<double> x(n), xp(n), xm(n), fp(n), fm(n);
  double best = 0;
  while (true) {
    double r2 = 0;
    for (std::size_t i = 0; i < n; ++i) {
      x[i] = -R + 2 * R * idx[i] / (per_axis - 1);
      r2 += x[i] * x[i];
    }
    if (r2 <= R * R) {
      double fro = 0;
      for (std::size_t j = 0; j < n; ++j) {
        xp = x;
        xm = x;
        xp[j] += h;
        xm[j] -= h;
        field.perturbation(xp, fp);
        field.perturbation(xm, fm);
        for (std::size_t i = 0; i < n; ++i) {
          const double d = (fp[i] - fm[i]) / (2 * h);
          fro += d * d;
        }
      }
      best = std::max(best, std::sqrt(fro));
    }
    std::size_t pos = 0;
    while (pos < n && ++idx[pos] == per_axis) idx[pos++] = 0;
    if (pos == n) break;
  }
  return best;
}

double delta_min(const TruncatedField& field, double p) {
  double lam = 0;
  for (double l : field.eigenvalues()) lam = std::max(lam, std::abs(l));
  return 4.0 * lemma_integration_constant(p) * (lam + perturbation_lipschitz(field));
}

FixedPointResult fixed_point_iterate(const TruncatedField& field, std::span<const double> x,
                                     const FixedPointOptions& opts) {
  const std::size_t n = field.dimension();
  if (x.size() != n) throw DimensionMismatch("point dimension differs from field dimension");
  WeightedNormParams params = opts.params;
  if (params.delta <= 0) params.delta = delta_min(field, params.p);
  params.validate();
  if (!(opts.step > 0)) throw PreconditionViolation("fixed-point grid step must be positive");

  FixedPointDiagnostics diag;
  diag.delta = params.delta;
  double min_rate = std::numeric_limits<double>::infinity();
  for (double l : field.eigenvalues()) min_rate = std::min(min_rate, std::abs(l));
  const double tmax = opts.tmax > 0 ? opts.tmax : 12.0 / min_rate;
  diag.exit_time = exit_time(field.eigenvalues(), x, field.bump().outer);
  diag.horizon = std::min(tmax, diag.exit_time + opts.margin);
  const auto intervals = static_cast<std::size_t>(std::ceil(diag.horizon / opts.step));

  GridRun fine = run_on_grid(field, x, uniform_nodes(diag.horizon, opts.richardson ? 2 * intervals : intervals),
                             params, opts);
  const auto u0_fine = fine.u.at(fine.u.size() - 1);
  diag.phi.assign(x.begin(), x.end());
  diag.phi_unextrapolated.assign(x.begin(), x.end());
  for (std::size_t c = 0; c < n; ++c) diag.phi_unextrapolated[c] += u0_fine[c];
  if (opts.richardson) {
    FixedPointOptions coarse_opts = opts;
    coarse_opts.probe_deltas.clear();
    GridRun coarse = run_on_grid(field, x, uniform_nodes(diag.horizon, intervals), params, coarse_opts);
    const auto u0_coarse = coarse.u.at(coarse.u.size() - 1);
    for (std::size_t c = 0; c < n; ++c) diag.phi[c] += (4 * u0_fine[c] - u0_coarse[c]) / 3;
  } else {
    diag.phi = diag.phi_unextrapolated;
  }

  diag.iterations = fine.iterations;
  diag.converged = fine.converged;
  diag.differences = std::move(fine.differences);
  diag.ratios = fine.ratios[0];
  diag.rho = max_or_zero(diag.ratios);
  for (std::size_t d = 1; d < fine.ratios.size(); ++d) diag.probe_rho.push_back(max_or_zero(fine.ratios[d]));
  return FixedPointResult{std::move(fine.u), std::move(diag)};
}

void write_trajectory_csv(std::ostream& os, const TrajectoryGrid& u) {
  os << "t";
  for (std::size_t c = 0; c < u.dimension(); ++c) os << ",u" << (c + 1);
  os << '\n';
  char buf[32];
  for (std::size_t i = 0; i < u.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g", u.nodes()[i]);
    os << buf;
    for (double v : u.at(i)) {
      std::snprintf(buf, sizeof buf, "%.17g", v);
      os << ',' << buf;
    }
    os << '\n';
  }
}

}  // namespace morsenorm
