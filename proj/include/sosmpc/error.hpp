#pragma once

#include <optional>
#include <stdexcept>
#include <string>

namespace sosmpc {

enum class ErrorKind {
  infeasible,
  unbounded,
  max_iterations,
  too_large,
  domain,
  infeasible_slice,
  degeneracy_unresolved,
  degenerate_restriction,
  dimension_unsupported,
  unbounded_slack,
  validation,
  bad_argument,
};

const char* error_kind_name(ErrorKind kind);

class SolverError : public std::runtime_error {
 public:
  SolverError(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const { return kind_; }

  // Pipeline context; filled in by hierarchical_step when rethrowing.
  std::optional<std::string> phase;
  std::optional<int> subsystem;
  std::optional<int> step;  // simulation step, filled in by simulate

 private:
  ErrorKind kind_;
};

}  // namespace sosmpc
