#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace opdiff {

enum class ErrorKind {
  order_exceeded,
  nonpositive_epsilon,
  empty_grid,
  degenerate_grid,
  non_hermitian_input,
  eigensolver_failure,
  invalid_p,
  dimension_mismatch,
  budget_exceeded,
  smoothness_insufficient,
  step_too_small,
  index_out_of_range,
  unknown_function,
  schema_violation,
};

/// Stable kebab-case name, used in CLI diagnostics and reports.
std::string_view to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& detail)
      : std::runtime_error(std::string(to_string(kind)) + ": " + detail), kind_(kind), detail_(detail) {}

  ErrorKind kind() const noexcept { return kind_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorKind kind_;
  std::string detail_;
};

}  // namespace opdiff
