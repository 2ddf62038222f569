#include "morsenorm/truncated_field.hpp"

#include <cmath>

namespace morsenorm {
namespace {

double profile(double t) { return t > 0 ? std::exp(-1.0 / t) : 0.0; }

double norm2(std::span<const double> x) {
  double s = 0;
  for (double v : x) s += v * v;
  return std::sqrt(s);
}

}  // namespace

double bump_cutoff(double r, const BumpParams& bump) {
  if (r <= bump.inner) return 1.0;
  if (r >= bump.outer) return 0.0;
  const double s = (r - bump.inner) / (bump.outer - bump.inner);
  const double a = profile(1.0 - s);
  const double b = profile(s);
  return a / (a + b);
}

TruncatedField::TruncatedField(const PolyVectorField<double>& V, std::vector<double> lambda, BumpParams bump)
    : lambda_(std::move(lambda)), bump_(bump) {
  const std::size_t n = lambda_.size();
  if (V.dimension() != n) throw DimensionMismatch("eigenvalue count differs from field dimension");
  if (!(bump_.inner > 0 && bump_.inner < bump_.outer)) throw PreconditionViolation("bump radii must satisfy 0 < inner < outer");
  residual_.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (const auto& [a, c] : V[i].terms()) {
      double coef = c;
      if (a.degree() == 1 && a[i] == 1) coef -= lambda_[i];
      if (a.degree() == 0) throw PreconditionViolation("field must vanish at the origin");
      if (coef == 0.0) continue;
      Term t{coef, {}};
      for (std::size_t j = 0; j < n; ++j) {
        if (a[j] == 0) continue;
        t.factors.emplace_back(j, a[j]);
        max_exponent_ = std::max(max_exponent_, a[j]);
      }
      residual_[i].push_back(std::move(t));
    }
  }
}

TruncatedField TruncatedField::linear(std::vector<double> lambda, BumpParams bump) {
  const auto V0 = PolyVectorField<double>::linear_diagonal(lambda, 1);
  return TruncatedField(V0, std::move(lambda), bump);
}

bool TruncatedField::is_linear() const noexcept {
  for (const auto& c : residual_)
    if (!c.empty()) return false;
  return true;
}

void TruncatedField::linear_part(std::span<const double> x, std::span<double> out) const {
  for (std::size_t i = 0; i < lambda_.size(); ++i) out[i] = lambda_[i] * x[i];
}

void TruncatedField::perturbation(std::span<const double> x, std::span<double> out) const {
  const std::size_t n = lambda_.size();
  const double chi = bump_cutoff(norm2(x), bump_);
  if (chi == 0.0 || is_linear()) {
    for (std::size_t i = 0; i < n; ++i) out[i] = 0.0;
    return;
  }
  // Power table pw[j * (e_max + 1) + e] = x_j^e.
  const std::size_t stride = static_cast<std::size_t>(max_exponent_) + 1;
  thread_local std::vector<double> pw;
  pw.assign(n * stride, 1.0);
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t e = 1; e < stride; ++e) pw[j * stride + e] = pw[j * stride + e - 1] * x[j];
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0;
    for (const auto& t : residual_[i]) {
      double m = t.coefficient;
      for (const auto& [j, e] : t.factors) m *= pw[j * stride + static_cast<std::size_t>(e)];
      s += m;
    }
    out[i] = chi * s;
  }
}

void TruncatedField::evaluate(std::span<const double> x, std::span<double> out) const {
  perturbation(x, out);
  for (std::size_t i = 0; i < lambda_.size(); ++i) out[i] += lambda_[i] * x[i];
}

std::vector<double> TruncatedField::operator()(std::span<const double> x) const {
  std::vector<double> out(lambda_.size());
  evaluate(x, out);
  return out;
}

}  // namespace morsenorm
