#include "morsenorm/problem.hpp"

#include <fstream>
#include <json.hpp>
#include <set>
#include <sstream>

#include "morsenorm/expression.hpp"

namespace morsenorm {
namespace {

using nlohmann::json;
using JetMatrix = std::vector<std::vector<Jet<Rational>>>;

const json* member(const json& obj, const std::string& key) {
  auto it = obj.find(key);
  return it == obj.end() ? nullptr : &*it;
}

long read_int(const json& v, const std::string& path) {
  if (!v.is_number_integer()) throw SpecError(path, "expected an integer");
  return v.get<long>();
}

double read_number(const json& v, const std::string& path) {
  if (!v.is_number()) throw SpecError(path, "expected a number");
  return v.get<double>();
}

std::string read_string(const json& v, const std::string& path) {
  if (!v.is_string()) throw SpecError(path, "expected a string");
  return v.get<std::string>();
}

void check_keys(const json& obj, const std::string& path, const std::set<std::string>& allowed) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (!allowed.count(it.key())) {
      throw SpecError(path.empty() ? it.key() : path + "." + it.key(), "unknown key");
    }
  }
}

Jet<Rational> parse_at(const std::string& text, std::size_t n, int L, const std::string& path,
                       std::vector<std::string>& truncated) {
  try {
    ParsedExpression e = parse_expression(text, n, L);
    if (e.truncated) truncated.push_back(path);
    return std::move(e.jet);
  } catch (const ParseError& err) {
    throw SpecError(path, std::string("parse error: ") + err.what());
  }
}

Rational constant_term(const Jet<Rational>& j) { return j.coefficient(MultiIndex(j.dimension())); }

void validate_metric(const ProblemSpec& s) {
  const std::size_t n = s.dimension;
  DenseMatrix<Rational> g0(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (!(s.metric[i][j] == s.metric[j][i]))
        throw SpecError("metric", "metric must be symmetric (entries [" + std::to_string(i) + "][" +
                                      std::to_string(j) + "] and [" + std::to_string(j) + "][" +
                                      std::to_string(i) + "] differ)");
      g0(i, j) = constant_term(s.metric[i][j]);
    }
  }
  // Sylvester's criterion on leading principal minors.
  for (std::size_t k = 1; k <= n; ++k) {
    DenseMatrix<Rational> sub(k, k);
    for (std::size_t i = 0; i < k; ++i)
      for (std::size_t j = 0; j < k; ++j) sub(i, j) = g0(i, j);
    if (sgn(determinant(sub)) <= 0) throw SpecError("metric", "metric must be positive definite at the origin");
  }
}

void resolve(ProblemSpec& s) {
  const std::size_t n = s.dimension;
  const int L = s.order;
  s.truncated_inputs.clear();
  if (s.mode == SourceMode::Function) {
    s.function = parse_at(s.function_text, n, L + 1, "function", s.truncated_inputs);
    s.metric.assign(n, std::vector<Jet<Rational>>());
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        if (s.metric_text.empty()) {
          s.metric[i].push_back(Jet<Rational>::constant(n, L, Rational(i == j ? 1 : 0)));
        } else {
          const std::string path = "metric[" + std::to_string(i) + "][" + std::to_string(j) + "]";
          s.metric[i].push_back(parse_at(s.metric_text[i][j], n, L, path, s.truncated_inputs));
        }
      }
    }
    validate_metric(s);
    s.field.clear();
  } else {
    s.field.clear();
    for (std::size_t i = 0; i < n; ++i) {
      s.field.push_back(parse_at(s.field_text[i], n, L, "field[" + std::to_string(i) + "]", s.truncated_inputs));
    }
    s.function = Jet<Rational>();
    s.metric.clear();
  }
}

ProblemSpec from_json(const json& root) {
  if (!root.is_object()) throw SpecError("", "problem must be a JSON object");
  check_keys(root, "", {"dimension", "function", "metric", "field", "order", "radius", "bump", "tolerances",
                        "resonance_order", "name", "description"});
  ProblemSpec s;
  const json* dim = member(root, "dimension");
  if (!dim) throw SpecError("dimension", "missing required key");
  const long n = read_int(*dim, "dimension");
  if (n < 1 || n > 16) throw SpecError("dimension", "invariant n >= 1 violated (supported range 1..16)");
  s.dimension = static_cast<std::size_t>(n);

  const json* fn = member(root, "function");
  const json* fld = member(root, "field");
  const json* met = member(root, "metric");
  if ((fn != nullptr) == (fld != nullptr)) throw SpecError("", "exactly one of \"function\" or \"field\" must be present");
  if (fn) {
    s.mode = SourceMode::Function;
    s.function_text = read_string(*fn, "function");
    if (met) {
      if (!met->is_array() || met->size() != s.dimension) throw SpecError("metric", "expected an n x n array of strings");
      for (std::size_t i = 0; i < s.dimension; ++i) {
        const json& row = (*met)[i];
        const std::string rpath = "metric[" + std::to_string(i) + "]";
        if (!row.is_array() || row.size() != s.dimension) throw SpecError(rpath, "expected an array of n strings");
        std::vector<std::string> r;
        for (std::size_t j = 0; j < s.dimension; ++j) r.push_back(read_string(row[j], rpath + "[" + std::to_string(j) + "]"));
        s.metric_text.push_back(std::move(r));
      }
    } else {
      s.defaults_applied.push_back("metric");
    }
  } else {
    s.mode = SourceMode::Field;
    if (met) throw SpecError("metric", "metric only applies to function mode");
    if (!fld->is_array() || fld->size() != s.dimension) throw SpecError("field", "expected an array of n strings");
    for (std::size_t i = 0; i < s.dimension; ++i) s.field_text.push_back(read_string((*fld)[i], "field[" + std::to_string(i) + "]"));
  }

  if (const json* v = member(root, "order")) {
    const long L = read_int(*v, "order");
    if (L < 2 || L > kMaxOrder) throw SpecError("order", "invariant L >= 2 violated (supported range 2.." + std::to_string(kMaxOrder) + ")");
    s.order = static_cast<int>(L);
  } else {
    s.defaults_applied.push_back("order");
  }

  if (const json* v = member(root, "radius")) {
    s.radius = read_number(*v, "radius");
    if (!(s.radius > 0)) throw SpecError("radius", "radius must be positive");
  } else {
    s.defaults_applied.push_back("radius");
  }

  s.bump = BumpParams{0.5 * s.radius, s.radius};
  if (const json* b = member(root, "bump")) {
    if (!b->is_object()) throw SpecError("bump", "expected an object");
    check_keys(*b, "bump", {"inner", "outer"});
    if (const json* v = member(*b, "inner")) {
      s.bump.inner = read_number(*v, "bump.inner");
    } else {
      s.defaults_applied.push_back("bump.inner");
    }
    if (const json* v = member(*b, "outer")) {
      s.bump.outer = read_number(*v, "bump.outer");
    } else {
      s.defaults_applied.push_back("bump.outer");
    }
  } else {
    s.defaults_applied.push_back("bump.inner");
    s.defaults_applied.push_back("bump.outer");
  }
  if (!(s.bump.inner > 0 && s.bump.inner < s.bump.outer && s.bump.outer <= s.radius)) {
    throw SpecError("bump", "invariant 0 < r_in < r_out <= R violated");
  }

  if (const json* t = member(root, "tolerances")) {
    if (!t->is_object()) throw SpecError("tolerances", "expected an object");
    check_keys(*t, "tolerances", {"float_zero", "ode", "conjugacy"});
    auto read_tol = [&](const char* key, double& dst) {
      const std::string path = std::string("tolerances.") + key;
      if (const json* v = member(*t, key)) {
        dst = read_number(*v, path);
        if (!(dst > 0)) throw SpecError(path, "tolerance must be positive");
      } else {
        s.defaults_applied.push_back(path);
      }
    };
    read_tol("float_zero", s.tolerances.float_zero);
    read_tol("ode", s.tolerances.ode);
    read_tol("conjugacy", s.tolerances.conjugacy);
  } else {
    for (const char* k : {"tolerances.float_zero", "tolerances.ode", "tolerances.conjugacy"}) s.defaults_applied.push_back(k);
  }

  if (const json* v = member(root, "resonance_order")) {
    const long r = read_int(*v, "resonance_order");
    if (r < 2 || r > 64) throw SpecError("resonance_order", "resonance order must be in 2..64");
    s.resonance_order = static_cast<int>(r);
  } else {
    s.resonance_order = s.order;
    s.defaults_applied.push_back("resonance_order");
  }

  resolve(s);
  return s;
}

}  // namespace

ProblemSpec parse_problem(const std::string& json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw SpecError("", std::string("invalid JSON: ") + e.what());
  }
  return from_json(root);
}

ProblemSpec load_problem(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw SpecError("", "cannot open problem file '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_problem(buf.str());
}

ProblemSpec with_order(const ProblemSpec& spec, int order) {
  if (order < 2 || order > kMaxOrder) throw SpecError("order", "invariant L >= 2 violated (supported range 2.." + std::to_string(kMaxOrder) + ")");
  ProblemSpec s = spec;
  s.order = order;
  bool resonance_defaulted = false;
  for (const auto& d : s.defaults_applied) resonance_defaulted = resonance_defaulted || d == "resonance_order";
  if (resonance_defaulted) s.resonance_order = order;
  std::erase(s.defaults_applied, std::string("order"));
  resolve(s);
  return s;
}

template <Coefficient T>
std::vector<std::vector<Jet<T>>> inverse_jet_matrix(const std::vector<std::vector<Jet<T>>>& g) {
  using Matrix = std::vector<std::vector<Jet<T>>>;
  const std::size_t n = g.size();
  if (n == 0) return {};
  const std::size_t dim = g[0][0].dimension();
  int L = g[0][0].order();
  for (const auto& row : g) {
    if (row.size() != n) throw DimensionMismatch("jet matrix must be square");
    for (const auto& x : row) L = std::min(L, x.order());
  }
  DenseMatrix<T> g0(n, n);
  Matrix e(n, std::vector<Jet<T>>(n));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      const Jet<T> gij = g[i][j].truncated(L);
      g0(i, j) = gij.coefficient(MultiIndex(dim));
      e[i][j] = gij.degree_range(1, L);
    }
  const DenseMatrix<T> b = inverse(g0);
  Matrix binv(n, std::vector<Jet<T>>(n));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) binv[i][j] = Jet<T>::constant(dim, L, b(i, j));

  auto mul = [&](const Matrix& a, const Matrix& c) {
    Matrix r(n, std::vector<Jet<T>>(n, Jet<T>(dim, L)));
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t k = 0; k < n; ++k) {
        if (a[i][k].is_zero()) continue;
        for (std::size_t j = 0; j < n; ++j) {
          if (!c[k][j].is_zero()) r[i][j] += multiply(a[i][k], c[k][j]);
        }
      }
    return r;
  };

  // g^{-1} = sum_k (-B E)^k B with B = g(0)^{-1}.
  Matrix m = mul(binv, e);
  for (auto& row : m)
    for (auto& x : row) x *= T(-1);
  Matrix term = binv;
  Matrix sum = binv;
  for (int k = 1; k <= L; ++k) {
    term = mul(m, term);
    bool all_zero = true;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        sum[i][j] += term[i][j];
        all_zero = all_zero && term[i][j].is_zero();
      }
    if (all_zero) break;
  }
  return sum;
}

template std::vector<std::vector<Jet<Rational>>> inverse_jet_matrix(const std::vector<std::vector<Jet<Rational>>>&);
template std::vector<std::vector<Jet<double>>> inverse_jet_matrix(const std::vector<std::vector<Jet<double>>>&);

std::vector<std::vector<Jet<Rational>>> inverse_metric(const ProblemSpec& spec) {
  std::vector<std::vector<Jet<Rational>>> g = spec.metric;
  for (auto& row : g)
    for (auto& x : row) x = x.truncated(spec.order);
  return inverse_jet_matrix(g);
}

PolyVectorField<Rational> source_field(const ProblemSpec& spec) {
  const std::size_t n = spec.dimension;
  const int L = spec.order;
  if (spec.mode == SourceMode::Field) {
    std::vector<Jet<Rational>> comps;
    for (const auto& c : spec.field) comps.push_back(c.truncated(L));
    return PolyVectorField<Rational>(std::move(comps));
  }
  std::vector<Jet<Rational>> grad;
  for (std::size_t j = 0; j < n; ++j) grad.push_back(spec.function.derivative(j).truncated(L));
  const JetMatrix ginv = inverse_metric(spec);
  std::vector<Jet<Rational>> comps;
  for (std::size_t i = 0; i < n; ++i) {
    Jet<Rational> v(n, L);
    for (std::size_t j = 0; j < n; ++j) {
      if (!ginv[i][j].is_zero() && !grad[j].is_zero()) v += multiply(ginv[i][j], grad[j]);
    }
    comps.push_back(std::move(v));
  }
  return PolyVectorField<Rational>(std::move(comps));
}

}  // namespace morsenorm
