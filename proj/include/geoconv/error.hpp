#pragma once

#include <stdexcept>
#include <string>

namespace geoconv {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Tensor extents disagree with what an operation requires.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Invalid user-facing configuration (model spec, dataset parameters, ...).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Malformed or truncated serialized data.
class FormatError : public Error {
 public:
  FormatError(const std::string& what, std::size_t offset)
      : Error(what + " (at byte offset " + std::to_string(offset) + ")"), offset_(offset) {}

  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

/// Non-finite values reached an optimizer or loss.
class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace geoconv
