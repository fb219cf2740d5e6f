#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace dapi {

/// Base class for every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A caller-supplied value violates a documented precondition.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// An iterative numerical routine did not converge.
class ConvergenceError : public Error {
 public:
  using Error::Error;
};

/// A mathematical precondition of an analysis does not hold for the data.
class PreconditionError : public Error {
 public:
  using Error::Error;
};

/// Broken internal invariant. Indicates a bug rather than bad input.
class InternalError : public Error {
 public:
  using Error::Error;
};

/// Malformed network or scenario file. Carries the offending line (1-based, 0 if unknown).
class ParseError : public Error {
 public:
  ParseError(std::string file, std::size_t line, const std::string& message)
      : Error(format(file, line, message)), file_(std::move(file)), line_(line) {}

  const std::string& file() const noexcept { return file_; }
  std::size_t line() const noexcept { return line_; }

 private:
  static std::string format(const std::string& file, std::size_t line, const std::string& message) {
    std::string out = file.empty() ? std::string("<input>") : file;
    if (line > 0) out += ":" + std::to_string(line);
    return out + ": " + message;
  }

  std::string file_;
  std::size_t line_;
};

/// A parsed document is well-formed but describes an invalid model.
class ValidationError : public Error {
 public:
  using Error::Error;
};

}  // namespace dapi
