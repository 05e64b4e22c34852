#pragma once

#include <string>

#include "gradlab/field.hpp"

namespace gradlab {

// Columnar field file: a text header (domain, metric, M, h, dt, provenance)
// followed by one `t x... u` row per stored node. Doubles are printed with
// 17 significant digits, which round-trips IEEE doubles exactly; the loader
// rebuilds the lattice from the header and validates the coordinates.
void save_field(const SolutionField& f, const std::string& path);
SolutionField load_field(const std::string& path);

}  // namespace gradlab
