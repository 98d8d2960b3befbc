#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace finhol {

// Error taxonomy, mapped to process exit codes by the CLI:
//   ConfigError      -> 2  (bad config file, bad flag, depth cap exceeded)
//   GeometryError    -> 1  (metric fails its construction checks, curve leaves
//                           the chart, non-positive-definite tensor, ...)
//   IntegrationError -> 3  (step-size underflow, non-finite state)
// ParseError / EvalError surface through ConfigError or GeometryError
// depending on where the offending expression came from.

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct GeometryError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct IntegrationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Syntax error in the expression language; `offset` is the byte position in
// the source text the scanner/parser was looking at.
struct ParseError : std::runtime_error {
  ParseError(const std::string& msg, std::size_t at)
      : std::runtime_error(msg + " (at offset " + std::to_string(at) + ")"),
        offset(at) {}
  std::size_t offset;
};

// Domain violation while evaluating an expression (log of a non-positive
// value, fractional power of a non-positive base, division by zero).
// `subtree` holds the printed form of the node that failed.
struct EvalError : std::runtime_error {
  EvalError(const std::string& msg, std::string node)
      : std::runtime_error(msg + " in '" + node + "'"), subtree(std::move(node)) {}
  std::string subtree;
};

}  // namespace finhol
