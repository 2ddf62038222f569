#include "pipeline.hpp"

#include <openssl/evp.h>

#include <cmath>
#include <fstream>
#include <sstream>

#include "morsenorm/expression.hpp"

namespace morsenorm::cli {
namespace {

std::size_t count_positive(const std::vector<double>& lambda) {
  std::size_t k = 0;
  while (k < lambda.size() && lambda[k] > 0) ++k;
  return k;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) out.push_back(item);
  return out;
}

double parse_double(const std::string& s, const std::string& what) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size() || !std::isfinite(v)) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw CliFailure(kExitSpec, "invalid " + what + ": '" + s + "'");
  }
}

}  // namespace

Chart diagonal_chart(const ProblemSpec& spec) {
  const std::size_t n = spec.dimension;
  const PolyVectorField<Rational> V = source_field(spec);
  for (std::size_t i = 0; i < n; ++i) {
    if (sgn(V[i].coefficient(MultiIndex(n))) != 0)
      throw CliFailure(kExitSpec, "the chart origin is not a zero of the field (component " + std::to_string(i + 1) + ")");
  }
  // Spectral check first: degenerate and complex spectra stop here.
  morse_eigenvalues(spec, Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n)));

  Chart c;
  if (auto ex = diagonalize_exact(V)) {
    c.exact = true;
    c.lambda_exact = ex->eigenvalues;
    for (const auto& q : c.lambda_exact) c.lambda.push_back(q.get_d());
    c.change_exact = ex->change;
    c.field_exact = ex->field;
    std::vector<Jet<double>> comps, chg;
    for (const auto& j : c.field_exact.components()) comps.push_back(convert<double>(j));
    for (const auto& j : c.change_exact.components()) chg.push_back(convert<double>(j));
    c.field = PolyVectorField<double>(std::move(comps));
    c.change = CoordinateChange<double>(std::move(chg));
  } else {
    std::vector<Jet<double>> comps;
    for (const auto& j : V.components()) comps.push_back(convert<double>(j));
    std::optional<Eigen::MatrixXd> g0;
    if (spec.mode == SourceMode::Function) g0 = metric_at(spec, Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n)));
    auto lin = diagonalize_float(PolyVectorField<double>(std::move(comps)), g0 ? &*g0 : nullptr,
                                 spec.tolerances.float_zero);
    c.lambda = lin.eigenvalues;
    c.change = std::move(lin.change);
    c.field = std::move(lin.field);
  }
  c.split = count_positive(c.lambda);
  return c;
}

BlockChart block_chart(const ProblemSpec& spec) {
  BlockChart b;
  b.base = diagonal_chart(spec);
  const int L = spec.order;
  const auto filter = block_terms(b.base.split);
  if (b.base.exact) {
    const auto nf = normalize_to_order<Rational>(b.base.field_exact, b.base.lambda_exact, L, filter,
                                                 spec.tolerances.float_zero);
    std::vector<Jet<double>> comps, chg;
    for (const auto& j : nf.field.components()) comps.push_back(convert<double>(j));
    const auto total = compose(nf.change, b.base.change_exact);
    for (const auto& j : total.components()) chg.push_back(convert<double>(j));
    b.field = PolyVectorField<double>(std::move(comps));
    b.change = CoordinateChange<double>(std::move(chg));
    b.obstructions = records_json(nf.obstructions());
  } else {
    const auto nf = normalize_to_order<double>(b.base.field, b.base.lambda, L, filter, spec.tolerances.float_zero);
    b.field = nf.field;
    b.change = compose(nf.change, b.base.change);
    b.obstructions = records_json(nf.obstructions());
  }
  return b;
}

TruncatedField truncated(const BlockChart& chart, const ProblemSpec& spec) {
  return TruncatedField(chart.field, chart.base.lambda, spec.bump);
}

std::vector<std::vector<double>> parse_grid(const std::string& text, std::size_t n, double r_in, int default_steps) {
  struct Axis {
    double lo, hi;
    int steps;
  };
  std::vector<Axis> axes;
  if (text.empty()) {
    axes.assign(n, Axis{-0.5 * r_in, 0.5 * r_in, default_steps});
  } else {
    for (const auto& part : split(text, ',')) {
      const auto f = split(part, ':');
      if (f.size() != 3) throw CliFailure(kExitSpec, "grid axis must read lo:hi:steps, got '" + part + "'");
      const double lo = parse_double(f[0], "grid bound");
      const double hi = parse_double(f[1], "grid bound");
      const double st = parse_double(f[2], "grid step count");
      if (st < 1 || st != std::floor(st) || st > 10000) throw CliFailure(kExitSpec, "grid step count must be 1..10000");
      if (hi < lo) throw CliFailure(kExitSpec, "grid upper bound below lower bound");
      axes.push_back({lo, hi, static_cast<int>(st)});
    }
    if (axes.size() == 1) axes.assign(n, axes[0]);
    if (axes.size() != n) throw CliFailure(kExitSpec, "grid needs one axis or one per dimension");
  }
  std::vector<std::vector<double>> pts;
  std::vector<int> idx(n, 0);
  for (;;) {
    std::vector<double> x(n);
    double r2 = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const Axis& a = axes[i];
      x[i] = a.steps == 1 ? 0.5 * (a.lo + a.hi) : a.lo + (a.hi - a.lo) * idx[i] / (a.steps - 1);
      r2 += x[i] * x[i];
    }
    if (!(std::sqrt(r2) < r_in)) throw CliFailure(kExitSpec, "grid point outside the inner bump radius");
    pts.push_back(std::move(x));
    std::size_t k = 0;
    while (k < n && ++idx[k] == axes[k].steps) idx[k++] = 0;
    if (k == n) break;
  }
  return pts;
}

std::string sha256_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) != 1) throw Error("SHA-256 failed");
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[md[i] >> 4];
    out += hex[md[i] & 15];
  }
  return out;
}

json spec_echo(const ProblemSpec& spec) {
  json j = json::object();
  j["dimension"] = spec.dimension;
  if (spec.mode == SourceMode::Function) {
    j["function"] = spec.function_text;
    if (!spec.metric_text.empty()) j["metric"] = spec.metric_text;
  } else {
    j["field"] = spec.field_text;
  }
  j["order"] = spec.order;
  j["radius"] = spec.radius;
  j["bump"] = {{"inner", spec.bump.inner}, {"outer", spec.bump.outer}};
  j["tolerances"] = {{"float_zero", spec.tolerances.float_zero},
                     {"ode", spec.tolerances.ode},
                     {"conjugacy", spec.tolerances.conjugacy}};
  j["resonance_order"] = spec.resonance_order;
  return j;
}

json rational_json(const Rational& q) { return {{"num", q.get_num().get_str()}, {"den", q.get_den().get_str()}}; }

json coefficient_json(const Rational& q) { return rational_json(q); }

json coefficient_json(double v) { return {{"value", v}}; }

json exponent_json(const MultiIndex& a) { return a.exponents(); }

void write_json(const std::filesystem::path& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw CliFailure(kExitSpec, "cannot write " + path.string());
  out << j.dump(2) << '\n';
}

json report_header(const Options& opts, const ProblemSpec& spec) {
  json r = json::object();
  r["tool"] = {{"name", "morsenorm"}, {"version", MORSENORM_VERSION}};
  r["command"] = opts.command;
  r["input_sha256"] = sha256_file(opts.spec_path);
  r["seed"] = opts.seed;
  r["spec"] = spec_echo(spec);
  r["defaults_applied"] = spec.defaults_applied;
  r["truncated_inputs"] = spec.truncated_inputs;
  return r;
}

}  // namespace morsenorm::cli
