#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace ahis {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed polynomial text or JSON. `position` is a byte offset into the
/// input (npos when not applicable).
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t position = std::string::npos)
      : Error(position == std::string::npos
                  ? what
                  : what + " (at position " + std::to_string(position) + ")"),
        position_(position) {}

  std::size_t position() const noexcept { return position_; }

 private:
  std::size_t position_;
};

/// Precondition violated by the caller (dimension mismatch, bad parameters).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// A numerical stage could not reach its certificate (divergence, singular
/// Jacobian, insufficient resolution, ...).
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace ahis
