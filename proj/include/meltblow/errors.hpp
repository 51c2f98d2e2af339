#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

#include "meltblow/vec3.hpp"

namespace meltblow {

/// Base of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An argument lies outside the domain of the operation.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// An iterative method failed: nonconvergence, step underflow, singular state.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// A flow query left the region where flow data exists.
class DomainExit : public Error {
 public:
  DomainExit(const std::string& what, const Vec3& position)
      : Error(what), position_(position) {}
  const Vec3& position() const { return position_; }

 private:
  Vec3 position_;
};

/// Malformed input file. `line` is 1-based, 0 when not attributable to a line.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : Error(line > 0 ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

/// A file could not be opened, read or written.
class IoError : public Error {
 public:
  using Error::Error;
};

/// Input parsed fine but violates a data invariant.
class ValidationError : public Error {
 public:
  using Error::Error;
};

}  // namespace meltblow
