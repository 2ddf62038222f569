#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace morsenorm {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

class SingularLinearPart : public Error {
 public:
  using Error::Error;
};

class PreconditionViolation : public Error {
 public:
  using Error::Error;
};

/// Syntax or vocabulary error in a polynomial expression.
class ParseError : public Error {
 public:
  ParseError(const std::string& message, std::size_t position,
             std::vector<std::string> expected = {})
      : Error(message + " at position " + std::to_string(position)),
        position_(position),
        expected_(std::move(expected)) {}

  std::size_t position() const noexcept { return position_; }
  const std::vector<std::string>& expected() const noexcept { return expected_; }

 private:
  std::size_t position_;
  std::vector<std::string> expected_;
};

/// Problem file violates the schema or a named invariant.
class SpecError : public Error {
 public:
  SpecError(std::string path, const std::string& message)
      : Error(path.empty() ? message : path + ": " + message), path_(std::move(path)) {}

  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

class DegenerateCriticalPoint : public Error {
 public:
  using Error::Error;
};

class ComplexSpectrum : public Error {
 public:
  using Error::Error;
};

class IntegrationError : public Error {
 public:
  IntegrationError(const std::string& message, double time, std::vector<double> state)
      : Error(message), time_(time), state_(std::move(state)) {}

  double time() const noexcept { return time_; }
  const std::vector<double>& state() const noexcept { return state_; }

 private:
  double time_;
  std::vector<double> state_;
};

class FlowOverflow : public Error {
 public:
  using Error::Error;
};

class ConvergenceFailure : public Error {
 public:
  using Error::Error;
};

class ContractionFailure : public Error {
 public:
  ContractionFailure(const std::string& message, std::vector<double> ratios)
      : Error(message), ratios_(std::move(ratios)) {}

  const std::vector<double>& ratios() const noexcept { return ratios_; }

 private:
  std::vector<double> ratios_;
};

}  // namespace morsenorm
