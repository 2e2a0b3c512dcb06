#pragma once

#include <stdexcept>
#include <string>

namespace dcoc {

enum class ErrorKind {
  invalid_argument,
  invalid_initial_state,
  simulation_diverged,
  parameter,
  layout,
  evaluation,
  gimbal_singularity,
  resource,
  config,
};

const char* to_string(ErrorKind kind);

/// Exception type thrown by every module. `index()` carries a step or row
/// index when the failure is localized (diverged simulation step, offending
/// constraint row), and -1 otherwise.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what, int index = -1)
      : std::runtime_error{what}, kind_{kind}, index_{index} {}

  ErrorKind kind() const { return kind_; }
  int index() const { return index_; }

 private:
  ErrorKind kind_;
  int index_;
};

}  // namespace dcoc
