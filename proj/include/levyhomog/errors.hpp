#pragma once

#include <stdexcept>
#include <string>

namespace levyhomog {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Bad inputs: mismatched grids, malformed configs, out-of-range parameters.
struct ValidationError : Error {
  using Error::Error;
};

/// Iteration budget exhausted, CFL violated, blow-up detected.
struct SolverError : Error {
  using Error::Error;
};

/// Non-finite quadrature output or failed shell refinement.
struct QuadratureError : Error {
  QuadratureError(const std::string& msg, std::string diag = {})
      : Error(msg), diagnostic(std::move(diag)) {}
  std::string diagnostic;
};

}  // namespace levyhomog
