#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace tailbound {

// A caller passed a value outside an operation's domain.
class ParameterError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Bad or missing input data (empty files, unknown columns).
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A malformed record in an input file.
class ParseError : public InputError {
 public:
  ParseError(const std::string& what, std::size_t line)
      : InputError("line " + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

// Data carries too little spread to fit a scale.
class DegenerateDataError : public InputError {
 public:
  using InputError::InputError;
};

// Solver breakdown or non-finite intermediate values.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// No mixing distribution over the kernel family comes within the DKW
// radius of the data: the observation model is misspecified.
class ModelMisfit : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace tailbound
