#pragma once

#include <stdexcept>
#include <string>

namespace mupo {

// Failure categories surfaced by the command-line tool as distinct exit codes.
// Precondition violations on library calls use std::invalid_argument.

class ConfigError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class NumericError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

}  // namespace mupo
