#include <algorithm>
#include <memory>
#include <numeric>

#include "morsenorm/normal_form.hpp"

namespace morsenorm {
namespace {

using RJet = Jet<Rational>;
using RChange = CoordinateChange<Rational>;

RChange with_order(const RChange& g, int order) {
  std::vector<RJet> comps;
  for (const auto& c : g.components()) comps.push_back(c.with_order(order));
  return RChange(std::move(comps));
}

RChange linear_change(const DenseMatrix<Rational>& a, int order) { return RChange::linear(a, order); }

Rational square_coefficient(const RJet& f, std::size_t i) {
  MultiIndex a(f.dimension());
  a.set(i, 2);
  return f.coefficient(a);
}

Rational cross_coefficient(const RJet& f, std::size_t i, std::size_t j) {
  MultiIndex a(f.dimension());
  a.set(i, 1);
  a.set(j, 1);
  return f.coefficient(a);
}

/// Binomial series coefficients of (1 + z)^{1/2}.
std::vector<Rational> sqrt_series(int terms) {
  std::vector<Rational> c{Rational(1)};
  for (int k = 1; k < terms; ++k) c.push_back(c.back() * Rational(3 - 2 * k, 2 * k));
  for (auto& q : c) q.canonicalize();
  return c;
}

std::vector<Rational> reciprocal_series(int terms) {
  std::vector<Rational> c;
  for (int k = 0; k < terms; ++k) c.push_back(Rational(k % 2 == 0 ? 1 : -1));
  return c;
}

/// F o g^{-1} for a change g that is accurate through one degree below F.
RJet transform(const RJet& F, const RChange& g) {
  return compose(F, with_order(invert_to_order(g), F.order()));
}

}  // namespace

MorseChart morse_lemma_jet(const Jet<Rational>& f, const std::optional<std::vector<int>>& requested) {
  const std::size_t n = f.dimension();
  const int N = f.order();
  if (N < 2) throw PreconditionViolation("Morse chart needs a jet of order at least 2");
  if (f.min_degree() < 2) throw PreconditionViolation("function must vanish to first order at the origin");
  if (requested && requested->size() != n) throw DimensionMismatch("sign pattern length differs from dimension");
  const int M = std::max(1, N - 1);

  RJet F = f;
  RChange phi = RChange::identity(n, M);
  std::vector<Rational> h0(n);

  for (std::size_t r = 0; r < n; ++r) {
    if (square_coefficient(F, r) == 0) {
      std::size_t swap_with = n;
      for (std::size_t s = r + 1; s < n && swap_with == n; ++s)
        if (square_coefficient(F, s) != 0) swap_with = s;
      DenseMatrix<Rational> p = DenseMatrix<Rational>::identity(n);
      if (swap_with != n) {
        p(r, r) = 0;
        p(swap_with, swap_with) = 0;
        p(r, swap_with) = 1;
        p(swap_with, r) = 1;
      } else {
        std::size_t partner = n;
        for (std::size_t s = r + 1; s < n && partner == n; ++s)
          if (cross_coefficient(F, r, s) != 0) partner = s;
        if (partner == n) throw DegenerateCriticalPoint("Hessian is singular at the critical point");
        // w_s = u_s - u_r
        p(partner, r) = -1;
      }
      const RChange lin = linear_change(p, M);
      F = transform(F, lin);
      phi = compose(lin, phi);
    }
    h0[r] = square_coefficient(F, r);

    // F = sum_{i<r} h0_i u_i^2 + A u_r^2 + B u_r + C with C, B free of u_r.
    RJet A(n, M), B(n, M);
    for (const auto& [a, c] : F.terms()) {
      if (a[r] >= 2) {
        MultiIndex b = a;
        b.set(r, a[r] - 2);
        A.add_term(b, c);
      } else if (a[r] == 1) {
        MultiIndex b = a;
        b.set(r, 0);
        B.add_term(b, c);
      }
    }
    RJet z = A;
    z *= Rational(1) / h0[r];
    z -= RJet::constant(n, M, Rational(1));
    const RJet root = power_series(sqrt_series(M + 1), z);
    RJet inv_a = power_series(reciprocal_series(M + 1), z);
    inv_a *= Rational(1) / (Rational(2) * h0[r]);
    RJet shifted = RJet::variable(n, M, r) + multiply(B, inv_a);
    RJet wr = multiply(root, shifted);

    std::vector<RJet> comps;
    for (std::size_t i = 0; i < n; ++i) comps.push_back(i == r ? wr : RJet::variable(n, M, i));
    const RChange sigma(std::move(comps));
    F = transform(F, sigma);
    phi = compose(sigma, phi);
  }

  // F should now be the diagonal quadratic form.
  RJet expected(n, N);
  for (std::size_t i = 0; i < n; ++i) {
    MultiIndex a(n);
    a.set(i, 2);
    expected.add_term(a, h0[i]);
  }
  if (!(F == expected)) throw Error("Morse recursion left a nonquadratic remainder");

  std::vector<int> sign(n);
  for (std::size_t i = 0; i < n; ++i) sign[i] = h0[i] < 0 ? -1 : 1;
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  std::stable_sort(perm.begin(), perm.end(), [&](std::size_t a, std::size_t b) { return sign[a] < sign[b]; });
  if (requested) {
    const auto& want = *requested;
    for (int s : want)
      if (s != 1 && s != -1) throw PreconditionViolation("sign pattern entries must be +1 or -1");
    const auto neg = std::count(want.begin(), want.end(), -1);
    if (neg != std::count(sign.begin(), sign.end(), -1))
      throw PreconditionViolation("requested sign pattern has the wrong Morse index");
    std::vector<std::size_t> negatives(perm.begin(), perm.begin() + neg);
    std::vector<std::size_t> positives(perm.begin() + neg, perm.end());
    std::size_t ni = 0, pi = 0;
    for (std::size_t j = 0; j < n; ++j) perm[j] = want[j] < 0 ? negatives[ni++] : positives[pi++];
  }

  MorseChart chart;
  std::vector<RJet> rcomps;
  for (std::size_t j = 0; j < n; ++j) {
    rcomps.push_back(phi[perm[j]]);
    chart.signs.push_back(sign[perm[j]]);
    chart.scales.push_back(abs(h0[perm[j]]));
  }
  chart.rational_change = RChange(std::move(rcomps));
  const RChange rinv = invert_to_order(chart.rational_change);

  auto ctx = std::make_shared<SurdContext>();
  std::vector<SurdNumber> root, inv_root;
  for (const auto& d : chart.scales) {
    root.push_back(SurdNumber::sqrt_of(d, ctx));
    inv_root.push_back(root.back().inverse());
  }
  std::vector<Jet<SurdNumber>> fwd, bwd;
  for (std::size_t j = 0; j < n; ++j) {
    Jet<SurdNumber> c = convert<SurdNumber>(chart.rational_change[j]);
    c *= root[j];
    fwd.push_back(std::move(c));
    // Phi^{-1}(y) = w^{-1}(y_j / sqrt(d_j)).
    Jet<SurdNumber> b(n, M);
    for (const auto& [a, q] : rinv[j].terms()) {
      SurdNumber coef(q);
      for (std::size_t i = 0; i < n; ++i)
        for (int e = 0; e < a[i]; ++e) coef *= inv_root[i];
      b.add_term(a, coef);
    }
    bwd.push_back(std::move(b));
  }
  chart.change = CoordinateChange<SurdNumber>(std::move(fwd));
  chart.inverse = CoordinateChange<SurdNumber>(std::move(bwd));
  return chart;
}

Jet<SurdNumber> morse_lemma_defect(const Jet<Rational>& f, const MorseChart& chart) {
  const std::size_t n = f.dimension();
  std::vector<Jet<SurdNumber>> inv;
  for (const auto& c : chart.inverse.components()) inv.push_back(c.with_order(f.order()));
  Jet<SurdNumber> out = compose(convert<SurdNumber>(f), CoordinateChange<SurdNumber>(std::move(inv)));
  for (std::size_t i = 0; i < n; ++i) {
    MultiIndex a(n);
    a.set(i, 2);
    out.add_term(a, SurdNumber(-chart.signs[i]));
  }
  return out;
}

}  // namespace morsenorm
