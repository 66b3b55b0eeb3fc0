#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace comorbid {

/// Base of every error raised by the toolkit.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input text. `line()` is 1-based, 0 when not line oriented.
class ParseError : public Error {
 public:
  explicit ParseError(const std::string& what, std::size_t line = 0)
      : Error(line == 0 ? what : "line " + std::to_string(line) + ": " + what),
        line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

/// Well-formed input that breaks a domain invariant.
class ValidationError : public Error {
 public:
  using Error::Error;
};

class ArgumentError : public Error {
 public:
  using Error::Error;
};

class OutOfScopeError : public Error {
 public:
  using Error::Error;
};

/// Training data that cannot produce a classifier (e.g. a single class).
class DegenerateDataError : public Error {
 public:
  using Error::Error;
};

/// Cohen's kappa is undefined because chance agreement is 1.
class DegenerateMarginalsError : public Error {
 public:
  using Error::Error;
};

class EmptyScopeError : public Error {
 public:
  using Error::Error;
};

class ReferenceError : public Error {
 public:
  using Error::Error;
};

class ConflictError : public Error {
 public:
  using Error::Error;
};

class VersionError : public Error {
 public:
  using Error::Error;
};

class NetworkError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace comorbid
