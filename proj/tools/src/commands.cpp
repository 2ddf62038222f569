#include "commands.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "morsenorm/conjugacy.hpp"
#include "morsenorm/fixed_point.hpp"
#include "morsenorm/parallel.hpp"

namespace morsenorm::cli {
namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

double max_dist(std::span<const double> a, std::span<const double> b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s = std::max(s, std::abs(a[i] - b[i]));
  return s;
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

json vec_json(const Eigen::VectorXd& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

json witnesses_json(const ResonanceReport& r) {
  json out = json::array();
  for (const auto& w : r.witnesses) out.push_back({{"exponent", exponent_json(w.exponent)}, {"component", w.component + 1}});
  return out;
}

json resonance_json(const ResonanceReport& r, const char* mode) {
  return {{"mode", mode}, {"scanned_order", r.scanned_order}, {"satisfied", r.satisfied}, {"witnesses", witnesses_json(r)}};
}

template <class T>
json field_terms_json(const PolyVectorField<T>& V) {
  json out = json::array();
  for (std::size_t i = 0; i < V.dimension(); ++i)
    for (auto& t : jet_terms_json(V[i], i)) out.push_back(std::move(t));
  return out;
}

template <class T>
json change_terms_json(const CoordinateChange<T>& g) {
  json out = json::array();
  for (std::size_t i = 0; i < g.dimension(); ++i)
    for (auto& t : jet_terms_json(g[i], i)) out.push_back(std::move(t));
  return out;
}

template <class T>
json steps_json(const std::vector<HomologicalStep<T>>& steps) {
  json out = json::array();
  for (const auto& s : steps)
    out.push_back({{"order", s.order}, {"removed", s.removed_terms.size()}, {"obstructions", s.obstructions.size()}});
  return out;
}

void finish(json& report, const Options& opts, Clock::time_point t0) {
  if (opts.timings) report["timings"] = {{"total_seconds", seconds_since(t0)}, {"workers", worker_count()}};
  std::filesystem::create_directories(opts.out);
  write_json(opts.out / "report.json", report);
}

struct PointResult {
  std::vector<double> phi, phi_fp;
  double residual = 0, deviation = 0, rho = 0, rho2 = 0;
  int iterations = 0;
  double horizon = 0, exit_time = 0;
  std::string error;
};

FixedPointOptions fixed_point_options(const Options& opts, const TruncatedField& field) {
  FixedPointOptions fp;
  const double dmin = delta_min(field, opts.p);
  fp.params = {opts.p, opts.k, opts.delta.value_or(dmin)};
  fp.params.validate();
  fp.tmax = opts.tmax;
  fp.probe_deltas = {2 * fp.params.delta};
  return fp;
}

const std::vector<double> kShifts{-0.5, -0.1, 0.1, 0.5};

}  // namespace

ProblemSpec load_spec(const Options& opts) {
  ProblemSpec spec = load_problem(opts.spec_path);
  if (opts.order) {
    if (*opts.order < 2 || *opts.order > kMaxOrder) throw SpecError("order", "--order out of range 2.." + std::to_string(kMaxOrder));
    spec = with_order(spec, *opts.order);
  }
  return spec;
}

int cmd_analyze(const Options& opts) {
  const auto t0 = Clock::now();
  const ProblemSpec spec = load_spec(opts);
  const std::size_t n = spec.dimension;
  json report = report_header(opts, spec);

  std::vector<Eigen::VectorXd> points;
  json degenerate = json::array();
  std::size_t unconverged = 0;
  if (spec.mode == SourceMode::Function) {
    const auto search = find_critical_points(spec, default_seeds(spec));
    points = search.points;
    for (const auto& p : search.degenerate_points) degenerate.push_back({{"point", vec_json(p)}, {"reason", "singular Hessian"}});
    unconverged = search.unconverged_seeds.size();
  } else {
    points.push_back(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n)));
  }

  json cps = json::array();
  for (const auto& p : points) {
    Spectrum s;
    try {
      s = morse_eigenvalues(spec, p);
    } catch (const DegenerateCriticalPoint& e) {
      degenerate.push_back({{"point", vec_json(p)}, {"reason", e.what()}});
      continue;
    } catch (const ComplexSpectrum& e) {
      degenerate.push_back({{"point", vec_json(p)}, {"reason", e.what()}});
      continue;
    }
    json cp = json::object();
    cp["point"] = vec_json(p);
    cp["eigenvalues"] = s.eigenvalues;
    cp["morse_index"] = s.morse_index;
    cp["unstable_dimension"] = s.unstable_dimension;
    json groups = json::array();
    for (const auto& [b, e] : s.multiplicity_groups) groups.push_back({b + 1, e});
    cp["multiplicity_groups"] = groups;
    std::optional<LinearNormalization<Rational>> exact;
    if (p.norm() == 0.0) exact = diagonalize_exact(source_field(spec));
    if (exact) {
      json ev = json::array();
      for (const auto& q : exact->eigenvalues) ev.push_back(rational_json(q));
      cp["eigenvalues_exact"] = ev;
      cp["resonance"] = resonance_json(check_N_linearity<Rational>(exact->eigenvalues, spec.resonance_order), "exact");
    } else {
      cp["resonance"] = resonance_json(
          check_N_linearity<double>(s.eigenvalues, spec.resonance_order, spec.tolerances.float_zero), "float");
    }
    std::printf("critical point %zu: lambda =", cps.size() + 1);
    for (double l : s.eigenvalues) std::printf(" %.10g", l);
    std::printf(", Morse index %zu, %s\n", s.morse_index,
                cp["resonance"]["satisfied"].get<bool>() ? "N-linear" : "resonant");
    cps.push_back(std::move(cp));
  }
  report["critical_points"] = cps;
  report["degenerate_points"] = degenerate;
  report["unconverged_seeds"] = unconverged;
  finish(report, opts, t0);
  if (!degenerate.empty()) {
    std::fprintf(stderr, "morsenorm: %zu degenerate critical point(s)\n", degenerate.size());
    return kExitDegenerate;
  }
  return kExitOk;
}

int cmd_normalize(const Options& opts) {
  const auto t0 = Clock::now();
  const ProblemSpec spec = load_spec(opts);
  const int L = spec.order;
  json report = report_header(opts, spec);
  const Chart chart = diagonal_chart(spec);
  json nf_json = json::object();
  json change;
  std::size_t obstructions = 0;
  nf_json["mode"] = chart.exact ? "exact" : "float";
  nf_json["order"] = L;
  nf_json["eigenvalues"] = chart.lambda;
  if (chart.exact) {
    json ev = json::array();
    for (const auto& q : chart.lambda_exact) ev.push_back(rational_json(q));
    nf_json["eigenvalues_exact"] = ev;
    const auto nf = normalize_to_order<Rational>(chart.field_exact, chart.lambda_exact, L);
    const auto total = compose(nf.change, chart.change_exact);
    change = change_terms_json(total);
    const auto res = nf.field.residual(chart.lambda_exact);
    nf_json["residual"] = field_terms_json(res);
    nf_json["obstructions"] = records_json(nf.obstructions());
    nf_json["steps"] = steps_json(nf.steps);
    obstructions = nf.obstructions().size();
    nf_json["residual_is_linear"] = res.components().empty() || std::all_of(res.components().begin(), res.components().end(),
                                                                            [](const auto& j) { return j.is_zero(); });
  } else {
    const auto nf = normalize_to_order<double>(chart.field, chart.lambda, L, {}, spec.tolerances.float_zero);
    const auto total = compose(nf.change, chart.change);
    change = change_terms_json(total);
    const auto res = nf.field.residual(chart.lambda);
    nf_json["residual"] = field_terms_json(res);
    nf_json["obstructions"] = records_json(nf.obstructions());
    nf_json["steps"] = steps_json(nf.steps);
    obstructions = nf.obstructions().size();
    nf_json["residual_is_linear"] = std::all_of(res.components().begin(), res.components().end(),
                                                [](const auto& j) { return j.is_zero(); });
  }
  nf_json["change"] = change;
  report["normalization"] = nf_json;
  finish(report, opts, t0);
  write_json(opts.out / "change.json", json{{"dimension", spec.dimension}, {"order", L}, {"terms", change}});
  std::printf("normalized through order %d (%s mode): %zu obstruction(s)\n", L, chart.exact ? "exact" : "float",
              obstructions);
  return obstructions ? kExitObstructed : kExitOk;
}

int cmd_conjugate(const Options& opts) {
  const auto t0 = Clock::now();
  const ProblemSpec spec = load_spec(opts);
  const std::size_t n = spec.dimension;
  if (opts.method != "exit" && opts.method != "fixedpoint" && opts.method != "both")
    throw CliFailure(kExitSpec, "--method must be exit, fixedpoint or both");
  const bool use_exit = opts.method != "fixedpoint";
  const bool use_fp = opts.method != "exit";
  const auto pts = parse_grid(opts.grid, n, spec.bump.inner, 11);
  json report = report_header(opts, spec);
  const BlockChart chart = block_chart(spec);
  const TruncatedField field = truncated(chart, spec);
  const double tol = spec.tolerances.ode;
  FixedPointOptions fp;
  if (use_fp) fp = fixed_point_options(opts, field);

  std::vector<PointResult> results(pts.size());
  parallel_for(pts.size(), [&](std::size_t i) {
    PointResult& r = results[i];
    const auto& x = pts[i];
    try {
      auto phi_of = [&](std::span<const double> y) {
        return use_exit ? conjugacy_phi(field, y, tol).value : fixed_point_iterate(field, y, fp).diagnostics.phi;
      };
      if (use_exit) r.phi = conjugacy_phi(field, x, tol).value;
      if (use_fp) {
        const auto res = fixed_point_iterate(field, x, fp);
        r.phi_fp = res.diagnostics.phi;
        r.rho = res.diagnostics.rho;
      }
      const auto& phi = use_exit ? r.phi : r.phi_fp;
      for (double s : kShifts) {
        const auto lhs = flow_G(field, phi, s, tol);
        const auto rhs = phi_of(flow_F(field.eigenvalues(), x, s));
        r.residual = std::max(r.residual, max_dist(lhs, rhs));
      }
      if (use_exit && use_fp) r.deviation = max_dist(r.phi, r.phi_fp);
    } catch (const Error& e) {
      r.error = e.what();
    }
  });

  std::filesystem::create_directories(opts.out);
  std::ofstream csv(opts.out / "phi_map.csv");
  for (std::size_t c = 0; c < n; ++c) csv << "x" << c + 1 << ",";
  if (use_exit)
    for (std::size_t c = 0; c < n; ++c) csv << "phi" << c + 1 << ",";
  if (use_fp)
    for (std::size_t c = 0; c < n; ++c) csv << "phi_fp" << c + 1 << ",";
  csv << "residual";
  if (use_fp) csv << ",rho";
  if (use_exit && use_fp) csv << ",deviation";
  csv << ",status\n";
  std::size_t failed = 0;
  double rmax = 0, rsum = 0, dmax = 0, rho_max = 0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const auto& r = results[i];
    const bool ok = r.error.empty();
    for (double v : pts[i]) csv << num(v) << ",";
    auto put = [&](const std::vector<double>& v) {
      for (std::size_t c = 0; c < n; ++c) csv << (ok ? num(v[c]) : "nan") << ",";
    };
    if (use_exit) put(r.phi);
    if (use_fp) put(r.phi_fp);
    csv << (ok ? num(r.residual) : "nan");
    if (use_fp) csv << "," << (ok ? num(r.rho) : "nan");
    if (use_exit && use_fp) csv << "," << (ok ? num(r.deviation) : "nan");
    csv << "," << (ok ? "ok" : "failed") << "\n";
    if (!ok) {
      ++failed;
      continue;
    }
    rmax = std::max(rmax, r.residual);
    rsum += r.residual;
    dmax = std::max(dmax, r.deviation);
    rho_max = std::max(rho_max, r.rho);
  }
  const std::size_t good = pts.size() - failed;
  json cj = json::object();
  cj["method"] = opts.method;
  cj["chart"] = chart.base.exact ? "exact" : "float";
  cj["eigenvalues"] = chart.base.lambda;
  cj["block_obstructions"] = chart.obstructions;
  cj["points"] = pts.size();
  cj["failed"] = failed;
  cj["shifts"] = kShifts;
  cj["residual"] = {{"max", rmax}, {"mean", good ? rsum / static_cast<double>(good) : 0.0}};
  cj["tolerance"] = spec.tolerances.conjugacy;
  cj["within_tolerance"] = failed == 0 && rmax <= spec.tolerances.conjugacy;
  if (use_fp) cj["fixed_point"] = {{"delta", fp.params.delta}, {"p", fp.params.p}, {"k", fp.params.k}, {"rho_max", rho_max}};
  if (use_exit && use_fp) cj["cross_method_max_deviation"] = dmax;
  json errors = json::array();
  for (std::size_t i = 0; i < pts.size(); ++i)
    if (!results[i].error.empty()) errors.push_back({{"index", i}, {"message", results[i].error}});
  cj["errors"] = errors;
  report["conjugacy"] = cj;
  finish(report, opts, t0);
  std::printf("conjugacy on %zu points (%s): max residual %.3g, %zu failed\n", pts.size(), opts.method.c_str(), rmax,
              failed);
  return static_cast<double>(failed) > 0.01 * static_cast<double>(pts.size()) ? kExitPointFailures : kExitOk;
}

int cmd_fixedpoint(const Options& opts) {
  const auto t0 = Clock::now();
  const ProblemSpec spec = load_spec(opts);
  const std::size_t n = spec.dimension;
  const auto pts = parse_grid(opts.grid, n, spec.bump.inner, 5);
  json report = report_header(opts, spec);
  const BlockChart chart = block_chart(spec);
  const TruncatedField field = truncated(chart, spec);
  const FixedPointOptions fp = fixed_point_options(opts, field);
  std::filesystem::create_directories(opts.out);

  std::vector<PointResult> results(pts.size());
  std::vector<TrajectoryGrid> trajectories(pts.size());
  parallel_for(pts.size(), [&](std::size_t i) {
    PointResult& r = results[i];
    try {
      auto res = fixed_point_iterate(field, pts[i], fp);
      r.phi_fp = res.diagnostics.phi;
      r.rho = res.diagnostics.rho;
      r.rho2 = res.diagnostics.probe_rho.at(0);
      r.iterations = res.diagnostics.iterations;
      r.horizon = res.diagnostics.horizon;
      r.exit_time = res.diagnostics.exit_time;
      trajectories[i] = std::move(res.trajectory);
    } catch (const Error& e) {
      r.error = e.what();
    }
  });

  json list = json::array();
  std::size_t failed = 0;
  double rho_max = 0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const auto& r = results[i];
    json e = json::object();
    e["index"] = i;
    e["x"] = pts[i];
    if (!r.error.empty()) {
      ++failed;
      e["error"] = r.error;
      list.push_back(std::move(e));
      continue;
    }
    std::ofstream traj(opts.out / ("traj_" + std::to_string(i) + ".csv"));
    write_trajectory_csv(traj, trajectories[i]);
    e["phi"] = r.phi_fp;
    e["iterations"] = r.iterations;
    e["rho"] = r.rho;
    e["rho_2delta"] = r.rho2;
    e["horizon"] = r.horizon;
    e["exit_time"] = std::isfinite(r.exit_time) ? json(r.exit_time) : json(nullptr);
    rho_max = std::max(rho_max, r.rho);
    list.push_back(std::move(e));
  }
  report["fixed_point"] = {{"delta", fp.params.delta},
                           {"delta_min", delta_min(field, opts.p)},
                           {"p", fp.params.p},
                           {"k", fp.params.k},
                           {"step", fp.step},
                           {"rho_max", rho_max},
                           {"failed", failed},
                           {"points", list}};
  finish(report, opts, t0);
  std::printf("fixed point on %zu points: delta %.4g, max rho %.3g, %zu failed\n", pts.size(), fp.params.delta, rho_max,
              failed);
  return static_cast<double>(failed) > 0.01 * static_cast<double>(pts.size()) ? kExitPointFailures : kExitOk;
}

}  // namespace morsenorm::cli
