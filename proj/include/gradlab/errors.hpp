#pragma once

#include <stdexcept>
#include <string>

namespace gradlab {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Bad parameters / violated type invariants (rho >= R, a outside (0,1), ...).
struct InvalidArgument : Error {
  using Error::Error;
};

// Geometry-side failures: point outside the metric domain, unsupported
// distance for a registered conformal factor, stencil leaving the domain.
struct GeometryError : Error {
  using Error::Error;
};

// Solver-side failures: CFL violation, positivity loss, nonlinear divergence.
struct SolverError : Error {
  using Error::Error;
};

// Config parse errors carry the offending line/key in the message.
struct ConfigError : Error {
  using Error::Error;
};

struct IoError : Error {
  using Error::Error;
};

}  // namespace gradlab
