#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "morsenorm/normal_form.hpp"
#include "morsenorm/problem.hpp"
#include "morsenorm/spectrum.hpp"
#include "morsenorm/truncated_field.hpp"

namespace morsenorm::cli {

using json = nlohmann::ordered_json;

inline constexpr int kExitOk = 0;
inline constexpr int kExitCheckFailed = 1;
inline constexpr int kExitSpec = 2;
inline constexpr int kExitDegenerate = 3;
inline constexpr int kExitObstructed = 4;
inline constexpr int kExitPointFailures = 5;

struct Options {
  std::string command;
  std::filesystem::path spec_path;
  std::optional<int> order;
  std::string grid;
  std::string method = "exit";
  std::optional<double> delta;
  double p = 2.0;
  int k = 0;
  double tmax = 0.0;
  unsigned long long seed = 0;
  std::filesystem::path out = ".";
  bool timings = false;
};

/// Exit with a given code after printing a message (bad problem files, bad grids).
class CliFailure : public Error {
 public:
  CliFailure(int code, const std::string& message) : Error(message), code_(code) {}
  int code() const noexcept { return code_; }

 private:
  int code_;
};

/// The field in eigen coordinates at the chart origin, exact when the
/// spectrum is rational.
struct Chart {
  bool exact = false;
  std::vector<double> lambda;
  std::vector<Rational> lambda_exact;
  /// Unstable dimension (number of positive eigenvalues; they come first).
  std::size_t split = 0;
  CoordinateChange<Rational> change_exact;
  PolyVectorField<Rational> field_exact;
  CoordinateChange<double> change;
  PolyVectorField<double> field;
};

Chart diagonal_chart(const ProblemSpec& spec);

/// Chart after removing every removable monomial confined to one block, so
/// that the field is linear on both coordinate blocks up to obstructions.
struct BlockChart {
  Chart base;
  PolyVectorField<double> field;
  /// Old coordinates to the block-normalized chart (double).
  CoordinateChange<double> change;
  json obstructions = json::array();
};

BlockChart block_chart(const ProblemSpec& spec);

TruncatedField truncated(const BlockChart& chart, const ProblemSpec& spec);

/// Cartesian grid from "lo:hi:steps" (one range per axis or one for all).
std::vector<std::vector<double>> parse_grid(const std::string& text, std::size_t n, double r_in, int default_steps);

std::string sha256_file(const std::filesystem::path& path);

json spec_echo(const ProblemSpec& spec);
json rational_json(const Rational& q);
json coefficient_json(const Rational& q);
json coefficient_json(double v);
json exponent_json(const MultiIndex& a);

template <class T>
json jet_terms_json(const Jet<T>& j, std::size_t component) {
  json out = json::array();
  for (const auto& [a, c] : j.terms()) {
    json t = json::object();
    t["exponent"] = exponent_json(a);
    t["component"] = component + 1;
    const json coef = coefficient_json(c);
    for (const auto& [k, v] : coef.items()) t[k] = v;
    out.push_back(std::move(t));
  }
  return out;
}

template <class T>
json records_json(const std::vector<TermRecord<T>>& records) {
  json out = json::array();
  for (const auto& r : records) {
    json t = json::object();
    t["exponent"] = exponent_json(r.exponent);
    t["component"] = r.component + 1;
    const json coef = coefficient_json(r.coefficient);
    for (const auto& [k, v] : coef.items()) t[k] = v;
    out.push_back(std::move(t));
  }
  return out;
}

void write_json(const std::filesystem::path& path, const json& j);

/// report skeleton shared by all commands.
json report_header(const Options& opts, const ProblemSpec& spec);

}  // namespace morsenorm::cli
