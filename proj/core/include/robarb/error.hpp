#pragma once

#include <stdexcept>
#include <string>

namespace robarb {

// Base class for every error thrown by the library. `context()` names the
// module/operation that raised it so the CLI can prefix diagnostics.
class Error : public std::runtime_error {
public:
  Error(std::string context, const std::string& what);
  const std::string& context() const noexcept { return context_; }

private:
  std::string context_;
};

// Malformed inputs: bad shapes, nonpositive states, empty scans.
class InvalidArgument : public Error {
public:
  using Error::Error;
};

// The explicit scheme would violate its monotonicity bound.
class CflError : public Error {
public:
  CflError(std::string context, const std::string& what, long required_steps);
  long required_steps() const noexcept { return required_steps_; }

private:
  long required_steps_;
};

// Nonfinite values, non-SPD tensors, constraint violations along a path.
class NumericalError : public Error {
public:
  using Error::Error;
};

} // namespace robarb
