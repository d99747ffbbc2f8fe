#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace klstm {

/// Symmetric factorization failed, even after the jitter safeguard.
class NotPositiveDefinite : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionMismatch : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class EmptyContext : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

class InvalidZetaMin : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class ConstantTarget : public std::invalid_argument {
 public:
  explicit ConstantTarget(std::size_t column)
      : std::invalid_argument("target dimension " + std::to_string(column) +
                              " is constant; cannot scale to [-1,1]"),
        column_(column) {}
  std::size_t column() const { return column_; }

 private:
  std::size_t column_;
};

class FileNotFound : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class RaggedRows : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A numeric cell could not be parsed. Row and column are 1-based file positions.
class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t row, std::size_t col, const std::string& cell)
      : std::runtime_error("cannot parse '" + cell + "' at row " + std::to_string(row) +
                           ", column " + std::to_string(col)),
        row_(row),
        col_(col) {}
  std::size_t row() const { return row_; }
  std::size_t col() const { return col_; }

 private:
  std::size_t row_;
  std::size_t col_;
};

class ZeroVariance : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class HorizonOutOfRange : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad user configuration (maps to CLI exit code 1).
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace klstm
