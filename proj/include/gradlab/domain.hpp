#pragma once

#include <vector>

#include "gradlab/errors.hpp"

namespace gradlab {

// The space-time cylinder B(x0, R) x [t0-T, t0] plus the cut-off margins.
struct DomainSpec {
  std::vector<double> x0;
  double R = 1.0;
  double t0 = 0.0;
  double T = 1.0;
  double rho = 0.5;
  double delta = 0.5;

  double t_start() const { return t0 - T; }

  void validate() const {
    if (x0.empty()) throw InvalidArgument("domain: x0 missing");
    if (!(R > 0)) throw InvalidArgument("domain: R must be positive");
    if (!(T > 0)) throw InvalidArgument("domain: T must be positive");
    if (!(rho > 0 && rho < R)) throw InvalidArgument("domain: need 0 < rho < R");
    if (!(delta > 0 && delta < T))
      throw InvalidArgument("domain: need 0 < delta < T");
  }
};

}  // namespace gradlab
