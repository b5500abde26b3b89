#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace hopgnn {

using VertexId = std::uint32_t;
using ServerId = std::uint32_t;
using ModelId = std::uint32_t;

/// Bytes per transported feature / parameter element (32-bit reals).
inline constexpr std::uint64_t kBytesPerElement = 4;

class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised when a simulation-wide invariant is broken (CLI exit code 3).
class InvariantViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace hopgnn
