#pragma once

#include <stdexcept>
#include <string>

namespace fourn {

// Contract violations and malformed input.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Factorization failures, divergence and other numerical breakdowns.
class NumericalError : public Error {
 public:
  using Error::Error;
};

// Invalid user configuration (bad flag values, inconsistent config files).
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace fourn
