#include "morsenorm/weighted.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "morsenorm/conjugacy.hpp"

namespace morsenorm {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double log_sum_exp(const std::vector<double>& l) {
  double m = kNegInf;
  for (double v : l) m = std::max(m, v);
  if (m == kNegInf) return kNegInf;
  double s = 0;
  for (double v : l) s += std::exp(v - m);
  return m + std::log(s);
}

std::size_t minimum_nodes(int k) { return k == 0 ? 2 : static_cast<std::size_t>(std::max(k + 2, 3)); }

std::vector<double> first_derivative(const std::vector<double>& t, const std::vector<double>& f) {
  const std::size_t N = t.size();
  std::vector<double> d(N);
  if (N == 2) {
    d[0] = d[1] = (f[1] - f[0]) / (t[1] - t[0]);
    return d;
  }
  {
    const double h1 = t[1] - t[0], h2 = t[2] - t[1];
    d[0] = -(2 * h1 + h2) / (h1 * (h1 + h2)) * f[0] + (h1 + h2) / (h1 * h2) * f[1] - h1 / (h2 * (h1 + h2)) * f[2];
  }
  for (std::size_t i = 1; i + 1 < N; ++i) {
    const double h1 = t[i] - t[i - 1], h2 = t[i + 1] - t[i];
    d[i] = -h2 / (h1 * (h1 + h2)) * f[i - 1] + (h2 - h1) / (h1 * h2) * f[i] + h1 / (h2 * (h1 + h2)) * f[i + 1];
  }
  {
    const double h1 = t[N - 2] - t[N - 3], h2 = t[N - 1] - t[N - 2];
    d[N - 1] = h2 / (h1 * (h1 + h2)) * f[N - 3] - (h1 + h2) / (h1 * h2) * f[N - 2] +
               (2 * h2 + h1) / (h2 * (h1 + h2)) * f[N - 1];
  }
  return d;
}

/// log of integral e^{-delta p t} |v(t)|^p dt for node-major samples v.
double log_weighted_integral(const std::vector<double>& t, const std::vector<std::vector<double>>& comps,
                             const WeightedNormParams& prm) {
  const std::size_t N = t.size();
  std::vector<double> l(N, kNegInf);
  for (std::size_t i = 0; i < N; ++i) {
    double s = 0;
    for (const auto& c : comps) s += c[i] * c[i];
    if (s == 0) continue;
    const double w = 0.5 * ((i > 0 ? t[i] - t[i - 1] : 0.0) + (i + 1 < N ? t[i + 1] - t[i] : 0.0));
    l[i] = std::log(w) - prm.delta * prm.p * t[i] + 0.5 * prm.p * std::log(s);
  }
  return log_sum_exp(l);
}

}  // namespace

void WeightedNormParams::validate() const {
  if (!(p > 1)) throw PreconditionViolation("weighted norm exponent p must exceed 1");
  if (k < 0) throw PreconditionViolation("derivative count k must be nonnegative");
  if (!(delta > 0)) throw PreconditionViolation("weight rate delta must be positive");
}

TrajectoryGrid::TrajectoryGrid(std::vector<double> nodes, std::size_t dimension, WeightedNormParams params)
    : t_(std::move(nodes)), n_(dimension), values_(t_.size() * dimension, 0.0), params_(params) {}

void TrajectoryGrid::validate() const {
  params_.validate();
  if (t_.empty() || t_.back() != 0.0) throw PreconditionViolation("trajectory grid must end at t = 0");
  for (std::size_t i = 1; i < t_.size(); ++i)
    if (!(t_[i] > t_[i - 1])) throw PreconditionViolation("trajectory grid must be strictly increasing");
  if (t_.size() < minimum_nodes(params_.k)) throw PreconditionViolation("grid too coarse for the derivative count");
  if (values_.size() != t_.size() * n_) throw DimensionMismatch("trajectory values do not match the grid");
}

TrajectoryGrid& TrajectoryGrid::operator-=(const TrajectoryGrid& o) {
  if (o.t_ != t_ || o.n_ != n_) throw DimensionMismatch("trajectories live on different grids");
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] -= o.values_[i];
  return *this;
}

TrajectoryGrid& TrajectoryGrid::operator*=(double s) {
  for (double& v : values_) v *= s;
  return *this;
}

std::vector<double> uniform_nodes(double horizon, std::size_t intervals) {
  if (!(horizon > 0) || intervals == 0) throw PreconditionViolation("grid needs a positive horizon and intervals");
  std::vector<double> t(intervals + 1);
  for (std::size_t i = 0; i <= intervals; ++i)
    t[i] = -horizon * static_cast<double>(intervals - i) / static_cast<double>(intervals);
  t.back() = 0.0;
  return t;
}

std::vector<double> graded_nodes(double horizon, std::size_t intervals, double grading) {
  if (grading == 0.0) return uniform_nodes(horizon, intervals);
  if (!(horizon > 0) || intervals == 0) throw PreconditionViolation("grid needs a positive horizon and intervals");
  std::vector<double> t(intervals + 1);
  const double denom = std::expm1(grading);
  for (std::size_t i = 0; i <= intervals; ++i) {
    const double s = 1.0 - static_cast<double>(i) / static_cast<double>(intervals);
    t[i] = -horizon * std::expm1(grading * s) / denom;
  }
  t.front() = -horizon;
  t.back() = 0.0;
  return t;
}

std::vector<double> grid_derivative(const TrajectoryGrid& u, std::size_t component, int j) {
  std::vector<double> f(u.size());
  for (std::size_t i = 0; i < u.size(); ++i) f[i] = u.at(i)[component];
  if (j > 0 && u.size() < minimum_nodes(j)) throw PreconditionViolation("grid too coarse for the derivative count");
  for (int r = 0; r < j; ++r) f = first_derivative(u.nodes(), f);
  return f;
}

double log_weighted_norm(const TrajectoryGrid& u) {
  u.validate();
  const auto& prm = u.params();
  std::vector<double> terms;
  for (int j = 0; j <= prm.k; ++j) {
    std::vector<std::vector<double>> comps;
    for (std::size_t c = 0; c < u.dimension(); ++c) comps.push_back(grid_derivative(u, c, j));
    terms.push_back(log_weighted_integral(u.nodes(), comps, prm) / prm.p);
  }
  return log_sum_exp(terms);
}

double weighted_norm(const TrajectoryGrid& u) { return std::exp(log_weighted_norm(u)); }

double lemma_integration_constant(double p) {
  if (!(p > 1)) throw PreconditionViolation("integration constant needs p > 1");
  const double a = std::pow(p - 1, p - 1) / std::pow(p, p);
  double lo = 0, hi = 1;
  while (hi - lo > 1e-15) {
    const double c = 0.5 * (lo + hi);
    (a * std::pow(c, p) + c < 1 ? lo : hi) = c;
  }
  return 1.0 / (0.5 * (lo + hi));
}

TrajectoryGrid cumulative_integral(const TrajectoryGrid& w) {
  TrajectoryGrid out(w.nodes(), w.dimension(), w.params());
  const auto& t = w.nodes();
  for (std::size_t i = 1; i < w.size(); ++i) {
    const double h = 0.5 * (t[i] - t[i - 1]);
    auto prev = out.at(i - 1);
    auto cur = out.at(i);
    auto a = w.at(i - 1);
    auto b = w.at(i);
    for (std::size_t c = 0; c < w.dimension(); ++c) cur[c] = prev[c] + h * (a[c] + b[c]);
  }
  return out;
}

TrajectoryGrid operator_F(const TruncatedField& field, std::span<const double> x, const TrajectoryGrid& u) {
  const std::size_t n = field.dimension();
  if (u.dimension() != n || x.size() != n) throw DimensionMismatch("trajectory dimension differs from field dimension");
  TrajectoryGrid integrand(u.nodes(), n, u.params());
  std::vector<double> y(n), out(n);
  for (std::size_t i = 0; i < u.size(); ++i) {
    const std::vector<double> base = flow_F(field.eigenvalues(), x, u.nodes()[i]);
    auto ui = u.at(i);
    for (std::size_t c = 0; c < n; ++c) y[c] = ui[c] + base[c];
    // G(y) - V0(base) = V0(u) + chi (V - V0)(y)
    field.perturbation(y, out);
    auto gi = integrand.at(i);
    for (std::size_t c = 0; c < n; ++c) gi[c] = out[c] + field.eigenvalues()[c] * ui[c];
  }
  return cumulative_integral(integrand);
}

}  // namespace morsenorm
