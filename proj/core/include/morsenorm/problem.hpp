#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include "morsenorm/jet.hpp"
#include "morsenorm/vector_field.hpp"

namespace morsenorm {

enum class SourceMode { Function, Field };

struct BumpParams {
  double inner = 0.5;
  double outer = 1.0;
};

struct Tolerances {
  double float_zero = 1e-12;
  double ode = 1e-11;
  double conjugacy = 1e-6;
};

inline constexpr int kDefaultOrder = 8;
inline constexpr int kMaxOrder = 40;

/// A validated problem: Morse function plus metric, or a raw vector field.
struct ProblemSpec {
  std::size_t dimension = 0;
  SourceMode mode = SourceMode::Function;

  std::string function_text;
  /// Empty means the identity metric.
  std::vector<std::vector<std::string>> metric_text;
  std::vector<std::string> field_text;

  /// f expanded to order+1, so that its gradient is known through order.
  Jet<Rational> function;
  /// g(x) entries at order; identity when metric_text is empty.
  std::vector<std::vector<Jet<Rational>>> metric;
  std::vector<Jet<Rational>> field;

  int order = kDefaultOrder;
  double radius = 1.0;
  BumpParams bump;
  Tolerances tolerances;
  int resonance_order = kDefaultOrder;

  /// Keys filled with default values, as field paths.
  std::vector<std::string> defaults_applied;
  /// Expressions whose expansion lost terms above the truncation order.
  std::vector<std::string> truncated_inputs;
};

/// Reads and validates a JSON problem file. Throws SpecError.
ProblemSpec load_problem(const std::filesystem::path& path);

/// Same, from JSON text.
ProblemSpec parse_problem(const std::string& json_text);

/// Re-expands all expressions of a resolved problem at a new truncation
/// order. The resonance order follows when it was defaulted.
ProblemSpec with_order(const ProblemSpec& spec, int order);

/// V = g(x)^{-1} grad f through the problem order (function mode), or the raw
/// field (field mode).
PolyVectorField<Rational> source_field(const ProblemSpec& spec);

/// Entries of g(x)^{-1} as jets, by a Neumann series around g(0).
std::vector<std::vector<Jet<Rational>>> inverse_metric(const ProblemSpec& spec);

/// Inverse of a square matrix of jets with invertible constant part.
template <Coefficient T>
std::vector<std::vector<Jet<T>>> inverse_jet_matrix(const std::vector<std::vector<Jet<T>>>& g);

}  // namespace morsenorm
