#pragma once

#include <stdexcept>
#include <string>

namespace urlflow {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid run configuration or command-line usage.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Unreadable, malformed or inconsistent input data.
class DataError : public Error {
 public:
  using Error::Error;
};

// Model-level failure: non-stationary weights, zero rate at an occupied bin,
// non-finite parameters during inference.
class ModelError : public Error {
 public:
  using Error::Error;
};

// One or more per-URL fits failed while running in strict mode.
class FitError : public Error {
 public:
  using Error::Error;
};

}  // namespace urlflow
