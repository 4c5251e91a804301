#pragma once

#include <stdexcept>
#include <string>

namespace sobolrf {

// Invalid input data (unreadable file, malformed cell, bad shape).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid configuration or arguments; maps to a usage exit code in the CLI.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A computation whose preconditions fail on the given forest / data.
class ComputeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace sobolrf
