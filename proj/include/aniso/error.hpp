#pragma once

#include <stdexcept>
#include <string>

namespace aniso {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid user input: experiment configs, out-of-range parameters.
class ConfigError : public Error {
 public:
  using Error::Error;
};

class MeshError : public Error {
 public:
  using Error::Error;
};

/// Evaluation at a point where the flux function is singular (a wire location).
class SingularityError : public Error {
 public:
  using Error::Error;
};

class UnsupportedError : public Error {
 public:
  using Error::Error;
};

/// Linear solver breakdown or non-convergence.  `iteration()` is -1 when the
/// failure is not tied to a particular iteration (e.g. a bad pivot).
class SolverError : public Error {
 public:
  SolverError(const std::string& what, int iteration = -1)
      : Error(what), iteration_(iteration) {}
  int iteration() const noexcept { return iteration_; }

 private:
  int iteration_;
};

}  // namespace aniso
