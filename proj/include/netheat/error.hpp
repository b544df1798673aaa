#pragma once

#include <stdexcept>
#include <string>

namespace netheat {

enum class ErrorKind {
  invalid_graph,
  invalid_argument,
  bounds_violation,
  not_positive_definite,
  no_convergence,
  solve_failure,
  non_finite,
  insufficient_data,
  schema,
  io,
};

/// Single exception type for the library; `kind()` lets callers and tests
/// distinguish failure classes without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace netheat
