#pragma once

#include <stdexcept>
#include <string>

namespace qcdma {

/// Invalid user input: configuration fields, indices, grids. CLI exit code 1.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A numerical routine could not produce a trustworthy answer
/// (unpaired spectrum, degenerate measurement, asymmetric matrix).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// File could not be read or written. CLI exit code 3.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

inline void require(bool ok, const std::string& message) {
  if (!ok) throw ValidationError(message);
}

}  // namespace detail
}  // namespace qcdma
