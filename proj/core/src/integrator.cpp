#include "morsenorm/integrator.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include "morsenorm/errors.hpp"

namespace morsenorm {
namespace {

// Dormand-Prince 5(4) tableau.
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784, b6 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                 e6 = 22.0 / 525, e7 = -1.0 / 40;

constexpr double kAlpha = 0.7 / 5;
constexpr double kBeta = 0.4 / 5;
constexpr double kSafety = 0.9;
constexpr double kFacMin = 0.2;
constexpr double kFacMax = 5.0;

bool finite(std::span<const double> y) {
  return std::all_of(y.begin(), y.end(), [](double v) { return std::isfinite(v); });
}

}  // namespace

std::vector<double> integrate(const OdeRhs& f, std::vector<double> y, double duration, const OdeOptions& opts,
                              OdeStats* stats, const OdeObserver& observer) {
  const std::size_t n = y.size();
  OdeStats local;
  OdeStats& st = stats ? *stats : local;
  if (!finite(y)) throw FlowOverflow("non-finite initial state");
  if (duration == 0.0 || n == 0) return y;

  const double dir = duration > 0 ? 1.0 : -1.0;
  const double t_end = std::abs(duration);
  std::array<std::vector<double>, 7> k;
  for (auto& v : k) v.assign(n, 0.0);
  std::vector<double> tmp(n), ynew(n), err(n);

  auto rhs = [&](std::span<const double> x, std::vector<double>& out) {
    f(x, out);
    ++st.evaluations;
  };
  auto scale = [&](double a, double b) { return opts.atol + opts.rtol * std::max(std::abs(a), std::abs(b)); };

  rhs(y, k[0]);
  double h = opts.initial_step;
  if (h <= 0) {
    double d0 = 0, d1 = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const double sc = scale(y[i], y[i]);
      d0 = std::max(d0, std::abs(y[i]) / sc);
      d1 = std::max(d1, std::abs(k[0][i]) / sc);
    }
    h = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
  }
  h = std::min(h, t_end);

  double t = 0;
  double err_prev = 1e-4;
  bool rejected_last = false;
  constexpr double eps = std::numeric_limits<double>::epsilon();

  while (t < t_end) {
    if (st.accepted + st.rejected >= opts.max_steps)
      throw IntegrationError("step budget exhausted", dir * t, y);
    if (h < 16 * eps * std::max(1.0, t)) throw IntegrationError("step size underflow", dir * t, y);
    const bool last = t + h >= t_end * (1 - 4 * eps);
    if (last) h = t_end - t;
    const double sh = dir * h;

    for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + sh * a21 * k[0][i];
    rhs(tmp, k[1]);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + sh * (a31 * k[0][i] + a32 * k[1][i]);
    rhs(tmp, k[2]);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + sh * (a41 * k[0][i] + a42 * k[1][i] + a43 * k[2][i]);
    rhs(tmp, k[3]);
    for (std::size_t i = 0; i < n; ++i)
      tmp[i] = y[i] + sh * (a51 * k[0][i] + a52 * k[1][i] + a53 * k[2][i] + a54 * k[3][i]);
    rhs(tmp, k[4]);
    for (std::size_t i = 0; i < n; ++i)
      tmp[i] = y[i] + sh * (a61 * k[0][i] + a62 * k[1][i] + a63 * k[2][i] + a64 * k[3][i] + a65 * k[4][i]);
    rhs(tmp, k[5]);
    for (std::size_t i = 0; i < n; ++i)
      ynew[i] = y[i] + sh * (b1 * k[0][i] + b3 * k[2][i] + b4 * k[3][i] + b5 * k[4][i] + b6 * k[5][i]);
    rhs(ynew, k[6]);

    double e = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const double ei =
          sh * (e1 * k[0][i] + e3 * k[2][i] + e4 * k[3][i] + e5 * k[4][i] + e6 * k[5][i] + e7 * k[6][i]);
      e = std::max(e, std::abs(ei) / scale(y[i], ynew[i]));
    }
    if (!std::isfinite(e)) {
      if (!finite(y)) throw FlowOverflow("state overflow during integration");
      h *= kFacMin;
      rejected_last = true;
      ++st.rejected;
      continue;
    }

    if (e <= 1.0) {
      ++st.accepted;
      t = last ? t_end : t + h;
      y.swap(ynew);
      std::swap(k[0], k[6]);
      if (!finite(y)) throw FlowOverflow("state overflow during integration");
      if (observer) observer(dir * t, y);
      double fac = e == 0.0 ? kFacMax : kSafety * std::pow(e, -kAlpha) * std::pow(err_prev, kBeta);
      fac = std::clamp(fac, kFacMin, kFacMax);
      if (rejected_last) fac = std::min(fac, 1.0);
      h *= fac;
      err_prev = std::max(e, 1e-4);
      rejected_last = false;
    } else {
      ++st.rejected;
      h *= std::max(kFacMin, kSafety * std::pow(e, -kAlpha));
      rejected_last = true;
    }
  }
  return y;
}

}  // namespace morsenorm
