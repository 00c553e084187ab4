#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace opnn {

/// Broad classification of failures. The CLI maps Config to exit code 2 and
/// Data to exit code 3.
enum class ErrorKind {
  Shape,
  Argument,
  Config,
  Data,
  Numeric,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// Raised when an operand does not have the extent an operation needs.
class ShapeError : public Error {
 public:
  ShapeError(std::string what_dim, std::size_t expected, std::size_t actual, const std::string& context)
      : Error(ErrorKind::Shape, context + ": expected " + what_dim + " " + std::to_string(expected) +
                                    ", got " + std::to_string(actual)),
        dimension_(std::move(what_dim)),
        expected_(expected),
        actual_(actual) {}

  const std::string& dimension() const noexcept { return dimension_; }
  std::size_t expected() const noexcept { return expected_; }
  std::size_t actual() const noexcept { return actual_; }

 private:
  std::string dimension_;
  std::size_t expected_;
  std::size_t actual_;
};

/// Raised while reading a file; carries the path and, when known, the line.
class DataError : public Error {
 public:
  DataError(std::string file, std::size_t line, const std::string& message)
      : Error(ErrorKind::Data, format(file, line, message)), file_(std::move(file)), line_(line) {}

  const std::string& file() const noexcept { return file_; }
  std::size_t line() const noexcept { return line_; }

 private:
  static std::string format(const std::string& file, std::size_t line, const std::string& message) {
    std::string out = file;
    if (line > 0) out += ":" + std::to_string(line);
    return out + ": " + message;
  }

  std::string file_;
  std::size_t line_;
};

inline void require(bool condition, ErrorKind kind, const std::string& message) {
  if (!condition) throw Error(kind, message);
}

}  // namespace opnn
