#pragma once

#include <stdexcept>
#include <string>

namespace privmcmc {

// Bad user input: invalid parameters, malformed or inconsistent configuration.
// The CLI maps this to exit code 2.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Numeric failure while sampling or evaluating (NaN log-densities, diverging
// loops, callback contract breaches detected mid-run). CLI exit code 3.
class NumericError : public std::runtime_error {
 public:
  explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

// File-system failure: unreadable input, unwritable output. CLI exit code 4.
class IoError : public std::runtime_error {
 public:
  explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace privmcmc
