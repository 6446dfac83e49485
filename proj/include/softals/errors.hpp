#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace softals {

/// Bad user input: shapes, configuration values, malformed data. The CLI
/// maps every ValidationError to exit code 2.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class DimensionMismatch : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

/// An (i, j) cell listed twice. Positions are 0-based input positions; the
/// loaders rethrow with 1-based line numbers.
class DuplicateEntry : public ValidationError {
 public:
  DuplicateEntry(std::size_t first, std::size_t second, const std::string& what)
      : ValidationError(what), first_(first), second_(second) {}
  std::size_t first() const noexcept { return first_; }
  std::size_t second() const noexcept { return second_; }

 private:
  std::size_t first_;
  std::size_t second_;
};

class ParseError : public ValidationError {
 public:
  ParseError(std::size_t line, std::size_t column, const std::string& what)
      : ValidationError("line " + std::to_string(line) + ", column " + std::to_string(column) +
                        ": " + what),
        line_(line),
        column_(column) {}
  std::size_t line() const noexcept { return line_; }
  std::size_t column() const noexcept { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

}  // namespace softals
