#pragma once

#include <stdexcept>
#include <string>

namespace ballmapper {

// Broad failure classes. The CLI maps these onto its exit codes and the
// service onto HTTP status codes.
enum class ErrorKind {
  validation,  // bad parameters or configuration
  data,        // malformed or unusable input data
  numeric,     // a numerical procedure could not produce a result
  not_found,   // unknown id or name in a lookup
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

class ValidationError : public Error {
 public:
  explicit ValidationError(const std::string& what)
      : Error(ErrorKind::validation, what) {}
};

class DataError : public Error {
 public:
  explicit DataError(const std::string& what) : Error(ErrorKind::data, what) {}
};

class NumericError : public Error {
 public:
  explicit NumericError(const std::string& what)
      : Error(ErrorKind::numeric, what) {}
};

class NotFoundError : public Error {
 public:
  explicit NotFoundError(const std::string& what)
      : Error(ErrorKind::not_found, what) {}
};

// Raised by the table reader; carries the 1-based line of the problem.
class ParseError : public DataError {
 public:
  ParseError(std::size_t line, const std::string& what)
      : DataError("line " + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

}  // namespace ballmapper
