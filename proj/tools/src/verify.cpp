// Property battery run against one problem file. Every randomized check draws from --seed.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <set>

#include "commands.hpp"
#include "morsenorm/conjugacy.hpp"
#include "morsenorm/fixed_point.hpp"
#include "morsenorm/parallel.hpp"
#include "morsenorm/weighted.hpp"

namespace morsenorm::cli {
namespace {

enum class Status { Pass, Fail, Skipped };

struct Check {
  Status status = Status::Pass;
  std::string detail;
};

template <class... Args>
std::string fmt(const char* f, Args... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

Check pass(std::string d) { return {Status::Pass, std::move(d)}; }
Check fail(std::string d) { return {Status::Fail, std::move(d)}; }
Check skip(std::string d) { return {Status::Skipped, std::move(d)}; }

using Ledger = std::set<std::pair<std::vector<int>, std::size_t>>;

template <class Records>
Ledger ledger(const Records& records) {
  Ledger out;
  for (const auto& r : records) out.insert({r.exponent.exponents(), r.component});
  return out;
}

double max_dist(std::span<const double> a, std::span<const double> b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s = std::max(s, std::abs(a[i] - b[i]));
  return s;
}

double max_abs(const Jet<double>& j) {
  double m = 0;
  for (const auto& [a, c] : j.terms()) m = std::max(m, std::abs(c));
  return m;
}

bool jets_agree(const Jet<Rational>& a, const Jet<Rational>& b, double) {
  const int K = std::min(a.order(), b.order());
  return a.with_order(K) == b.with_order(K);
}

bool jets_agree(const Jet<double>& a, const Jet<double>& b, double tol) {
  const int K = std::min(a.order(), b.order());
  return max_abs(a.with_order(K) - b.with_order(K)) <= tol;
}

/// Exact when the spectrum is rational, otherwise double.
struct Context {
  const ProblemSpec& spec;
  const Chart& chart;
  std::mt19937_64& rng;
  bool resonant = false;
};

Check origin_critical(const ProblemSpec& spec) {
  const std::size_t n = spec.dimension;
  if (spec.mode == SourceMode::Function) {
    const double g = gradient_at(spec, Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n))).norm();
    if (g > spec.tolerances.float_zero) return fail(fmt("|grad f(0)| = %.3g", g));
    return pass("grad f(0) = 0");
  }
  const auto V = source_field(spec);
  for (std::size_t i = 0; i < n; ++i)
    if (sgn(V[i].coefficient(MultiIndex(n))) != 0) return fail(fmt("V_%zu(0) != 0", i + 1));
  return pass("V(0) = 0");
}

Check eigenvalue_invariance(Context& c) {
  const ProblemSpec& spec = c.spec;
  const std::size_t n = spec.dimension;
  const auto zero = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
  const auto ref = morse_eigenvalues(spec, zero).eigenvalues;
  std::uniform_real_distribution<double> u(-1, 1);
  double worst = 0;
  const int trials = 20;
  for (int trial = 0; trial < trials; ++trial) {
    DenseMatrix<Rational> T(n, n);
    Eigen::MatrixXd Td(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    do {
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
          T(i, j) = rationalize(u(c.rng), 64);
          Td(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = T(i, j).get_d();
        }
    } while (std::abs(Td.determinant()) < 0.05);
    ProblemSpec s = spec;
    if (spec.mode == SourceMode::Function) {
      const auto lin = CoordinateChange<Rational>::linear(T, spec.function.order());
      s.function = compose(spec.function, lin);
      // g' = T^t (g o T) T, entrywise on jets.
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
          Jet<Rational> e(n, spec.order);
          for (std::size_t k = 0; k < n; ++k)
            for (std::size_t l = 0; l < n; ++l) {
              Jet<Rational> term = compose(spec.metric[k][l], lin);
              term *= T(k, i) * T(l, j);
              e += term;
            }
          s.metric[i][j] = e;
        }
    } else {
      // W = (DT V) o T^{-1}: the field seen in coordinates y = T x.
      const auto W = pullback_field(source_field(spec), CoordinateChange<Rational>::linear(T, spec.order));
      s.field = W.components();
    }
    const auto got = morse_eigenvalues(s, zero).eigenvalues;
    for (std::size_t i = 0; i < n; ++i) worst = std::max(worst, std::abs(got[i] - ref[i]) / std::abs(ref[i]));
  }
  if (worst > 1e-10) return fail(fmt("relative deviation %.3g > 1e-10", worst));
  return pass(fmt("%d random linear changes, max relative deviation %.2g", trials, worst));
}

Check resonance_brute(Context& c) {
  const std::size_t n = c.spec.dimension;
  int order = c.spec.resonance_order;
  while (order > 2 && multi_indices(n, 2, order).size() > 200000) --order;
  const double fz = c.spec.tolerances.float_zero;
  Ledger brute;
  for (const auto& a : multi_indices(n, 2, order)) {
    for (std::size_t i = 0; i < n; ++i) {
      if (c.chart.exact) {
        Rational s = -c.chart.lambda_exact[i];
        for (std::size_t j = 0; j < n; ++j) s += a[j] * c.chart.lambda_exact[j];
        if (s == 0) brute.insert({a.exponents(), i});
      } else {
        double s = -c.chart.lambda[i], scale = std::abs(c.chart.lambda[i]);
        for (std::size_t j = 0; j < n; ++j) {
          s += a[j] * c.chart.lambda[j];
          scale += a[j] * std::abs(c.chart.lambda[j]);
        }
        if (std::abs(s) <= fz * std::max(1.0, scale)) brute.insert({a.exponents(), i});
      }
    }
  }
  const auto report = c.chart.exact ? check_N_linearity<Rational>(c.chart.lambda_exact, order)
                                    : check_N_linearity<double>(c.chart.lambda, order, fz);
  if (ledger(report.witnesses) != brute)
    return fail(fmt("scan found %zu witnesses, brute force %zu", report.witnesses.size(), brute.size()));
  if (report.satisfied != brute.empty()) return fail("satisfied flag disagrees with the witness set");
  return pass(fmt("%zu witnesses through order %d match the brute-force scan", brute.size(), order));
}

template <class T>
Check soundness_impl(const PolyVectorField<T>& V, std::span<const T> lambda, int L, double fz) {
  const auto nf = normalize_to_order<T>(V, lambda, L, {}, fz);
  if (!nf.obstructions().empty()) return fail("obstructions in a nonresonant normalization");
  const auto V0 = PolyVectorField<T>::linear_diagonal(lambda, L);
  const double tol = std::is_same_v<T, double> ? 1e-8 : 0.0;
  const auto res = nf.field.residual(lambda);
  for (std::size_t i = 0; i < V.dimension(); ++i) {
    if (!jets_agree(res[i], Jet<T>(V.dimension(), res[i].order()), tol)) return fail(fmt("residual component %zu nonzero", i + 1));
    // L_V(Psi_i) = (V0)_i o Psi is an independent statement of the conjugacy.
    if (!jets_agree(lie_derivative(V, nf.change[i]), compose(V0[i], nf.change), tol))
      return fail(fmt("Lie-derivative identity fails in component %zu", i + 1));
  }
  const auto again = normalize_to_order<T>(nf.field, lambda, L, {}, fz);
  std::size_t removed = 0;
  for (const auto& s : again.steps) removed += s.removed_terms.size();
  if (removed) return fail("renormalizing the normal form changed it");
  return pass(fmt("residual equals V0 through order %d; conjugacy and idempotence hold", L));
}

Check normalization_soundness(Context& c) {
  if (c.resonant) return skip("spectrum is resonant");
  const int L = c.spec.order;
  if (c.chart.exact) return soundness_impl<Rational>(c.chart.field_exact, c.chart.lambda_exact, L, 0);
  return soundness_impl<double>(c.chart.field, c.chart.lambda, L, c.spec.tolerances.float_zero);
}

Check obstruction_completeness(Context& c) {
  const int L = c.spec.order;
  const double fz = c.spec.tolerances.float_zero;
  Ledger obstructions, witnesses;
  if (c.chart.exact) {
    obstructions = ledger(normalize_to_order<Rational>(c.chart.field_exact, c.chart.lambda_exact, L).obstructions());
    witnesses = ledger(check_N_linearity<Rational>(c.chart.lambda_exact, L).witnesses);
  } else {
    obstructions = ledger(normalize_to_order<double>(c.chart.field, c.chart.lambda, L, {}, fz).obstructions());
    witnesses = ledger(check_N_linearity<double>(c.chart.lambda, L, fz).witnesses);
  }
  for (const auto& o : obstructions)
    if (!witnesses.count(o)) return fail("an obstruction is not a resonance witness");
  return pass(fmt("%zu obstruction(s), all resonance witnesses", obstructions.size()));
}

Check morse_lemma(Context& c) {
  const ProblemSpec& spec = c.spec;
  if (spec.mode != SourceMode::Function) return skip("field mode has no function");
  Jet<Rational> f = spec.function;
  f.add_term(MultiIndex(spec.dimension), -f.coefficient(MultiIndex(spec.dimension)));
  const auto chart = morse_lemma_jet(f);
  const auto defect = morse_lemma_defect(f, chart);
  if (!defect.is_zero()) return fail("f o Phi^{-1} differs from the signed square sum");
  std::size_t neg = 0;
  for (int s : chart.signs) neg += s < 0;
  const Eigen::MatrixXd Hd = hessian_at(spec, Eigen::VectorXd::Zero(static_cast<Eigen::Index>(spec.dimension)));
  const auto want = static_cast<std::size_t>((Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(Hd).eigenvalues().array() < 0).count());
  if (neg != want) return fail(fmt("%zu negative squares, Hessian inertia %zu", neg, want));
  return pass(fmt("zero defect through order %d, %zu negative square(s)", defect.order(), neg));
}

template <class T>
Check flatness_impl(const PolyVectorField<T>& V, std::span<const T> lambda, std::size_t k, int L, double fz) {
  const int alpha = 3;
  const auto Y = invariant_manifold_jet<T>(V, lambda, k, ManifoldKind::Unstable, fz);
  const auto Z = invariant_manifold_jet<T>(V, lambda, k, ManifoldKind::Stable, fz);
  const auto straight = pullback_by_parametrization(V, straighten_manifolds(Y, Z));
  if (!invariant_manifold_jet<T>(straight, lambda, k, ManifoldKind::Unstable, fz).is_zero() ||
      !invariant_manifold_jet<T>(straight, lambda, k, ManifoldKind::Stable, fz).is_zero())
    return fail("manifold graphs not flat after straightening");
  const auto inner = normalize_to_order<T>(straight, lambda, L, block_terms(k), fz);
  const auto flat = cross_flatten<T>(inner.field, lambda, k, alpha, fz);
  const auto res = flat.field.residual(lambda);
  std::size_t shallow = 0;
  for (std::size_t i = 0; i < V.dimension(); ++i)
    for (const auto& [a, coef] : res[i].terms())
      if (a.block_degree(0, k) < alpha || a.block_degree(k, a.size()) < alpha) ++shallow;
  if (shallow) return fail(fmt("%zu residual monomial(s) with a block degree below %d", shallow, alpha));
  return pass(fmt("graphs straightened; residual block degrees >= %d through order %d", alpha, L));
}

Check manifold_flatness(Context& c) {
  if (c.resonant) return skip("spectrum is resonant");
  const std::size_t k = c.chart.split, n = c.spec.dimension;
  if (k == 0 || k == n) return pass("one-sided spectrum: the blocks are trivially flat");
  if (c.chart.exact) return flatness_impl<Rational>(c.chart.field_exact, c.chart.lambda_exact, k, c.spec.order, 0);
  return flatness_impl<double>(c.chart.field, c.chart.lambda, k, c.spec.order, c.spec.tolerances.float_zero);
}

std::vector<std::vector<double>> sample_points(std::size_t n, double r, std::mt19937_64& rng) {
  std::vector<std::vector<double>> pts;
  if (n <= 3) {
    const int m = n == 3 ? 3 : 5;
    std::vector<int> idx(n, 0);
    for (;;) {
      std::vector<double> x(n);
      for (std::size_t i = 0; i < n; ++i) x[i] = -r + 2 * r * idx[i] / (m - 1);
      pts.push_back(x);
      std::size_t k = 0;
      while (k < n && ++idx[k] == m) idx[k++] = 0;
      if (k == n) break;
    }
    return pts;
  }
  std::normal_distribution<double> g;
  std::uniform_real_distribution<double> u(0, 1);
  for (int p = 0; p < 16; ++p) {
    std::vector<double> x(n);
    double norm = 0;
    for (double& v : x) {
      v = g(rng);
      norm += v * v;
    }
    const double s = r * std::pow(u(rng), 1.0 / static_cast<double>(n)) / std::sqrt(norm);
    for (double& v : x) v *= s;
    pts.push_back(x);
  }
  return pts;
}

Check conjugation_identity(Context& c, const BlockChart& bc, const std::vector<std::vector<double>>& pts) {
  if (!bc.obstructions.empty()) return skip("block normalization is obstructed");
  const TruncatedField field = truncated(bc, c.spec);
  const double tol = c.spec.tolerances.ode;
  std::vector<double> residual(pts.size(), 0.0);
  std::vector<std::string> errors(pts.size());
  parallel_for(pts.size(), [&](std::size_t i) {
    try {
      const auto phi = conjugacy_phi(field, pts[i], tol).value;
      for (double s : {-0.5, -0.1, 0.1, 0.5}) {
        const auto lhs = flow_G(field, phi, s, tol);
        const auto rhs = conjugacy_phi(field, flow_F(field.eigenvalues(), pts[i], s), tol).value;
        residual[i] = std::max(residual[i], max_dist(lhs, rhs));
      }
    } catch (const Error& e) {
      errors[i] = e.what();
    }
  });
  for (std::size_t i = 0; i < pts.size(); ++i)
    if (!errors[i].empty()) return fail(fmt("point %zu: %s", i, errors[i].c_str()));
  const double worst = *std::max_element(residual.begin(), residual.end());
  if (worst > c.spec.tolerances.conjugacy) return fail(fmt("max residual %.3g above %.3g", worst, c.spec.tolerances.conjugacy));
  return pass(fmt("%zu points, max residual %.2g", pts.size(), worst));
}

Check fixed_point_agreement(Context& c, const BlockChart& bc, const std::vector<std::vector<double>>& pts) {
  if (!bc.obstructions.empty()) return skip("block normalization is obstructed");
  const TruncatedField field = truncated(bc, c.spec);
  FixedPointOptions fp;
  fp.params = {2.0, 0, delta_min(field, 2.0)};
  std::vector<double> dev(pts.size(), 0.0), rho(pts.size(), 0.0);
  std::vector<std::string> errors(pts.size());
  parallel_for(pts.size(), [&](std::size_t i) {
    try {
      const auto r = fixed_point_iterate(field, pts[i], fp);
      dev[i] = max_dist(r.diagnostics.phi, conjugacy_phi(field, pts[i], c.spec.tolerances.ode).value);
      rho[i] = r.diagnostics.rho;
    } catch (const Error& e) {
      errors[i] = e.what();
    }
  });
  for (std::size_t i = 0; i < pts.size(); ++i)
    if (!errors[i].empty()) return fail(fmt("point %zu: %s", i, errors[i].c_str()));
  const double worst = *std::max_element(dev.begin(), dev.end());
  const double rmax = *std::max_element(rho.begin(), rho.end());
  if (worst > 5e-6) return fail(fmt("max deviation from the exit-time map %.3g > 5e-6", worst));
  if (!(rmax < 1)) return fail(fmt("contraction ratio %.3g", rmax));
  return pass(fmt("delta %.3g, max deviation %.2g, max rho %.3g", fp.params.delta, worst, rmax));
}

Check integration_lemma(Context& c) {
  const double C0 = lemma_integration_constant(2.0);
  const double closed = 1 / (2 * (std::sqrt(2.0) - 1));
  if (std::abs(C0 - closed) > 1e-10) return fail(fmt("C0(2) = %.15g, closed form %.15g", C0, closed));
  std::uniform_real_distribution<double> u(-1, 1);
  const double H = 4.0;
  const auto nodes = uniform_nodes(H, 4000);
  double worst = 0;
  const int trials = 10;
  for (int trial = 0; trial < trials; ++trial) {
    const double a = -H * (0.1 + 0.85 * (u(c.rng) + 1) / 2);
    const double b = a * (1 - (u(c.rng) + 1) / 2 * 0.9);
    double q[4];
    for (double& v : q) v = u(c.rng);
    for (double delta : {4.0, 8.0, 16.0}) {
      TrajectoryGrid w(nodes, 1, {2.0, 0, delta});
      for (std::size_t i = 0; i < w.size(); ++i) {
        const double t = w.nodes()[i];
        if (t < a || t > b) continue;
        const double s = t - a;
        w.at(i)[0] = q[0] + s * (q[1] + s * (q[2] + s * q[3]));
      }
      worst = std::max(worst, weighted_norm(cumulative_integral(w)) / (C0 / delta * weighted_norm(w)));
    }
  }
  if (worst > 1.05) return fail(fmt("worst ratio to the bound %.4f", worst));
  return pass(fmt("%d random cubics, worst ratio to the bound %.3f", trials * 3, worst));
}

const char* status_name(Status s) {
  switch (s) {
    case Status::Pass: return "PASS";
    case Status::Fail: return "FAIL";
    default: return "SKIPPED";
  }
}

}  // namespace

int cmd_verify(const Options& opts) {
  const auto t0 = std::chrono::steady_clock::now();
  const ProblemSpec spec = load_spec(opts);
  json report = report_header(opts, spec);
  std::mt19937_64 rng(opts.seed);
  json checks = json::array();
  bool failed = false;

  auto record = [&](const char* name, const std::function<Check()>& run) {
    Check c;
    try {
      c = run();
    } catch (const DegenerateCriticalPoint&) {
      throw;
    } catch (const ComplexSpectrum&) {
      throw;
    } catch (const Error& e) {
      c = fail(std::string("error: ") + e.what());
    }
    failed |= c.status == Status::Fail;
    std::printf("%-7s %s: %s\n", status_name(c.status), name, c.detail.c_str());
    checks.push_back({{"name", name}, {"status", status_name(c.status)}, {"detail", c.detail}});
  };

  const Check origin = origin_critical(spec);
  record("critical point at the origin", [&] { return origin; });
  if (origin.status == Status::Pass) {
    const Chart chart = diagonal_chart(spec);
    Context ctx{spec, chart, rng};
    ctx.resonant = chart.exact ? !check_N_linearity<Rational>(chart.lambda_exact, spec.order).satisfied
                               : !check_N_linearity<double>(chart.lambda, spec.order, spec.tolerances.float_zero).satisfied;
    record("eigenvalue invariance", [&] { return eigenvalue_invariance(ctx); });
    record("resonance scan", [&] { return resonance_brute(ctx); });
    record("normalization soundness", [&] { return normalization_soundness(ctx); });
    record("obstruction completeness", [&] { return obstruction_completeness(ctx); });
    record("Morse lemma", [&] { return morse_lemma(ctx); });
    record("manifold flatness", [&] { return manifold_flatness(ctx); });
    const BlockChart bc = block_chart(spec);
    const auto pts = sample_points(spec.dimension, 0.25 * spec.bump.inner, rng);
    record("conjugation identity", [&] { return conjugation_identity(ctx, bc, pts); });
    record("fixed-point agreement", [&] { return fixed_point_agreement(ctx, bc, pts); });
    record("integration lemma", [&] { return integration_lemma(ctx); });
  }

  report["checks"] = checks;
  report["passed"] = !failed;
  if (opts.timings)
    report["timings"] = {{"total_seconds", std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count()},
                         {"workers", worker_count()}};
  std::filesystem::create_directories(opts.out);
  write_json(opts.out / "report.json", report);
  return failed ? kExitCheckFailed : kExitOk;
}

}  // namespace morsenorm::cli
