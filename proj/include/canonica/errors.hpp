#pragma once

#include <stdexcept>
#include <string>

namespace canonica {

// Malformed configuration or command-line input.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Unreadable, missing or inconsistent clip data.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Non-finite values during optimization or an ill-posed numeric system.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Misuse of the computation graph (shape mismatch, bad ordering, ...).
class GraphError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace canonica
