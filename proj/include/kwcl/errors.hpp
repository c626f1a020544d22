#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace kwcl {

class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Zero-norm rows and similar inputs that cannot be projected onto the sphere.
class DegenerateInput : public std::domain_error {
 public:
  DegenerateInput(const std::string& what, std::ptrdiff_t row = -1)
      : std::domain_error(what), row_(row) {}
  std::ptrdiff_t row() const { return row_; }

 private:
  std::ptrdiff_t row_;
};

// Every anchor of a batch was skipped.
class DegenerateBatch : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

class TrainingDiverged : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class UndefinedMetric : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

class IllConditioned : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidFold : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : std::runtime_error("line " + std::to_string(line) + ": " + what),
        line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

}  // namespace kwcl
