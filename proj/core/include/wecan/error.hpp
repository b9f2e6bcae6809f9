#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace wecan {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input file. `row()` is 1-based over data rows (header excluded).
class ParseError : public Error {
 public:
  ParseError(std::size_t row, const std::string& what)
      : Error("row " + std::to_string(row) + ": " + what), row_(row) {}
  std::size_t row() const { return row_; }

 private:
  std::size_t row_;
};

/// A value fell outside the support or domain a computation requires.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Non-finite quantity produced during estimation.
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace wecan
