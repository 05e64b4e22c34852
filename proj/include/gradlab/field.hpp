#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gradlab/domain.hpp"
#include "gradlab/geometry.hpp"

namespace gradlab {

enum class NodeClass : std::uint8_t { Exterior = 0, Boundary = 1, Interior = 2 };
enum class GridMode { Full2D, Radial1D };
enum class Provenance { Analytic, FDSolve };

// Inclusive-begin/exclusive-end interior column range of one lattice row.
struct RowSpan {
  int begin = 0, end = 0;
  bool empty() const { return end <= begin; }
};

// Cartesian lattice intersected with the (geodesic) ball B(x0, R).
// Interior nodes satisfy d(x, x0) < R - h/2; Boundary nodes are the
// non-interior nodes within two lattice steps of the interior (they carry
// Dirichlet/sampled values); everything else is Exterior and holds NaN.
struct LatticeGrid {
  GridMode mode = GridMode::Full2D;
  double h = 0.1;
  double ox = 0, oy = 0;  // node (i,j) at (ox + i h, oy + j h)
  int nx = 0, ny = 0;     // radial: nx = node count, ny = 1, r_i = i h
  int radial_dim = 0;     // ambient dimension in radial mode

  std::vector<NodeClass> cls;
  std::vector<RowSpan> rows;        // contiguous interior span per row
  std::vector<double> inv_phi;      // 1/phi at nodes (1 when flat)
  std::vector<double> phi;          // phi at nodes (1 when flat)
  std::vector<int> cut_layer;       // boundary nodes adjacent to interior
  std::size_t interior_count = 0;

  std::size_t size() const { return static_cast<std::size_t>(nx) * ny; }
  int index(int i, int j) const { return j * nx + i; }
  void point_of(int i, int j, double* out) const {
    out[0] = ox + i * h;
    if (mode == GridMode::Full2D) out[1] = oy + j * h;
  }
  std::vector<double> point(int i, int j) const {
    if (mode == GridMode::Radial1D) return {ox + i * h};
    return {ox + i * h, oy + j * h};
  }
};

LatticeGrid build_lattice(const DomainSpec& dom, const MetricSpec& metric,
                          double h, GridMode mode);

// A space-time grid of positive values with declared bound M (0 < u <= M).
struct SolutionField {
  DomainSpec domain;
  MetricSpec metric = MetricSpec::euclidean(2);
  LatticeGrid grid;
  double dt = 0;
  std::vector<double> times;
  std::vector<std::vector<double>> u;  // one lattice per time level
  double M = 1.0;
  double min_u = 1.0;
  Provenance provenance = Provenance::FDSolve;
  std::string scheme;          // fdsolve
  std::string analytic_kind;   // analytic: gauss_kernel | exp_example | poincare_harmonic
  double analytic_param = 0;   // epsilon / lambda / n

  // closed forms, present for analytic provenance
  std::function<double(std::span<const double>, double)> exact_value;
  std::function<std::vector<double>(std::span<const double>, double)>
      exact_gradient;
  bool has_exact() const { return static_cast<bool>(exact_gradient); }

  std::string id;

  // Checks 0 < u <= M over interior and boundary nodes; throws on failure.
  void validate_bounds() const;
};

// Spatial point in the cylinder at a given time level; convenience for the
// checking loops.
struct NodeRef {
  int i = 0, j = 0, level = 0;
  int flat = 0;  // grid index
};

// Enumerates interior nodes (all time levels) through `fn(node, point, t)`.
void for_each_interior(const SolutionField& f,
                       const std::function<void(const NodeRef&,
                                                std::span<const double>,
                                                double)>& fn);

}  // namespace gradlab
