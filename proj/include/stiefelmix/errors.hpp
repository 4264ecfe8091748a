// Apache License, Version 2.0, refer to LICENSE.txt

#pragma once

#include <stdexcept>
#include <string>

namespace stiefelmix {

/// Input failed a structural precondition (shape, orthonormality, range).
class ValidationError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Tied or vanishing singular values, zero first-row entries, and other
/// configurations where the signed SVD parametrization is not defined.
class DegeneracyError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Iterative scheme failed to reach its tolerance. Carries the partial
/// result so callers can decide whether it is still usable.
class ConvergenceError : public std::runtime_error {
public:
  ConvergenceError(const std::string& what, double partial)
      : std::runtime_error(what), partial_(partial) {}
  double partial_value() const noexcept { return partial_; }

private:
  double partial_;
};

/// Requested solution does not exist (e.g. h(d) = t with t outside (0,1)).
class InfeasibleError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Density has no interior maximum for the given parameters.
class NoModeError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Parameters yield a non-integrable (improper) density.
class ImproperError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Spectral norm exactly on the propriety boundary; integrability unknown.
class UndeterminedIntegrabilityError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Conditional support interval is empty (ordering constraint violated).
class OrderingError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Only p <= 2 is supported by the normalizing-constant machinery.
class UnsupportedDimensionError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Malformed input file; carries the 1-based line number.
class ParseError : public std::runtime_error {
public:
  ParseError(const std::string& what, long line)
      : std::runtime_error(what + " (line " + std::to_string(line) + ")"),
        line_(line) {}
  long line() const noexcept { return line_; }

private:
  long line_;
};

}  // namespace stiefelmix
