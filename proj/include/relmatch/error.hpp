#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace relmatch {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Incompatible array shapes; the message carries the offending shapes.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Malformed binary or text input. `offset` is the byte (or line) position.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t offset)
      : Error(what + " (at offset " + std::to_string(offset) + ")"), offset_(offset) {}
  std::size_t offset() const { return offset_; }

 private:
  std::size_t offset_;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace relmatch
