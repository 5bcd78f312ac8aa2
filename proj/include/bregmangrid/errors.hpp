#pragma once

#include <stdexcept>
#include <string>

namespace bregmangrid {

/// Argument outside the domain of a formula (non-positive voltage, bad angle).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Topology or controller configuration that violates a standing assumption.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Unreadable or malformed input file.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Newton iteration failed; carries the last residual infinity-norm.
class SolverError : public std::runtime_error {
 public:
  SolverError(const std::string& what, double residual)
      : std::runtime_error(what), residual_(residual) {}
  double residual() const noexcept { return residual_; }

 private:
  double residual_;
};

}  // namespace bregmangrid
