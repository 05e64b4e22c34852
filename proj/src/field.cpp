#include "gradlab/field.hpp"

#include <cmath>
#include <limits>

namespace gradlab {
namespace {

void classify_boundary(LatticeGrid& g) {
  // Boundary = non-interior within Chebyshev distance 2 of an interior node.
  const int nx = g.nx, ny = g.ny;
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) {
      if (g.cls[g.index(i, j)] == NodeClass::Interior) continue;
      bool near = false;
      for (int dj = -2; dj <= 2 && !near; ++dj)
        for (int di = -2; di <= 2 && !near; ++di) {
          int ii = i + di, jj = j + dj;
          if (ii < 0 || jj < 0 || ii >= nx || jj >= ny) continue;
          near = g.cls[g.index(ii, jj)] == NodeClass::Interior;
        }
      if (near) g.cls[g.index(i, j)] = NodeClass::Boundary;
    }
}

void collect_cut_layer(LatticeGrid& g) {
  const int nx = g.nx, ny = g.ny;
  auto interior_at = [&](int i, int j) {
    return i >= 0 && j >= 0 && i < nx && j < ny &&
           g.cls[g.index(i, j)] == NodeClass::Interior;
  };
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) {
      if (g.cls[g.index(i, j)] != NodeClass::Boundary) continue;
      if (interior_at(i - 1, j) || interior_at(i + 1, j) ||
          interior_at(i, j - 1) || interior_at(i, j + 1))
        g.cut_layer.push_back(g.index(i, j));
    }
}

void build_rows(LatticeGrid& g) {
  g.rows.assign(g.ny, {});
  g.interior_count = 0;
  for (int j = 0; j < g.ny; ++j) {
    int b = -1, e = -1;
    for (int i = 0; i < g.nx; ++i) {
      if (g.cls[g.index(i, j)] == NodeClass::Interior) {
        if (b < 0) b = i;
        e = i + 1;
      }
    }
    if (b >= 0) {
      // the ball meets each row in one segment; verify contiguity
      for (int i = b; i < e; ++i)
        if (g.cls[g.index(i, j)] != NodeClass::Interior)
          throw Error("lattice: non-contiguous interior row");
      g.rows[j] = {b, e};
      g.interior_count += static_cast<std::size_t>(e - b);
    }
  }
}

void fill_metric_coefficients(LatticeGrid& g, const MetricSpec& metric) {
  g.inv_phi.assign(g.size(), 1.0);
  g.phi.assign(g.size(), 1.0);
  if (metric.kind() != MetricKind::Conformal2D) return;
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      int id = g.index(i, j);
      if (g.cls[id] == NodeClass::Exterior) continue;
      auto p = g.point(i, j);
      double phi = metric.conformal_factor(p);
      g.phi[id] = phi;
      g.inv_phi[id] = 1.0 / phi;
    }
}

}  // namespace

LatticeGrid build_lattice(const DomainSpec& dom, const MetricSpec& metric,
                          double h, GridMode mode) {
  dom.validate();
  if (!(h > 0)) throw InvalidArgument("lattice: h must be positive");
  LatticeGrid g;
  g.mode = mode;
  g.h = h;

  if (mode == GridMode::Radial1D) {
    if (metric.kind() != MetricKind::Euclidean)
      throw InvalidArgument("radial mode requires a Euclidean metric");
    for (double c : dom.x0)
      if (c != 0.0)
        throw InvalidArgument("radial mode requires x0 at the origin");
    g.radial_dim = metric.dimension();
    g.nx = static_cast<int>(std::floor(dom.R / h)) + 3;
    g.ny = 1;
    g.ox = 0.0;
    g.cls.assign(g.size(), NodeClass::Exterior);
    for (int i = 0; i < g.nx; ++i)
      if (i * h < dom.R - 0.5 * h) g.cls[i] = NodeClass::Interior;
    classify_boundary(g);
    build_rows(g);
    collect_cut_layer(g);
    g.inv_phi.assign(g.size(), 1.0);
    g.phi.assign(g.size(), 1.0);
    return g;
  }

  if (metric.dimension() != 2)
    throw InvalidArgument("full lattice mode requires dimension 2");
  double cx = dom.x0[0], cy = dom.x0[1], half = dom.R;
  if (metric.is_poincare()) {
    auto img = poincare_ball_image(metric, dom.x0, dom.R);
    cx = img.cx;
    cy = img.cy;
    half = img.radius;
    if (std::hypot(cx, cy) + half + 2.5 * h >= 1.0)
      throw InvalidArgument(
          "lattice: ball plus boundary layer leaves the unit disk; shrink h "
          "or R");
  }
  int m = static_cast<int>(std::ceil((half + 2 * h) / h));
  g.nx = g.ny = 2 * m + 1;
  g.ox = cx - m * h;
  g.oy = cy - m * h;
  g.cls.assign(g.size(), NodeClass::Exterior);
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      auto p = g.point(i, j);
      if (!metric.contains(p)) continue;
      if (geodesic_distance(metric, p, dom.x0) < dom.R - 0.5 * h)
        g.cls[g.index(i, j)] = NodeClass::Interior;
    }
  classify_boundary(g);
  // boundary nodes must be evaluable under the metric
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i)
      if (g.cls[g.index(i, j)] == NodeClass::Boundary &&
          !metric.contains(g.point(i, j)))
        throw InvalidArgument("lattice: boundary layer leaves metric domain");
  build_rows(g);
  collect_cut_layer(g);
  fill_metric_coefficients(g, metric);
  if (g.interior_count == 0)
    throw InvalidArgument("lattice: no interior nodes; h too coarse");
  return g;
}

void SolutionField::validate_bounds() const {
  for (std::size_t m = 0; m < u.size(); ++m)
    for (std::size_t idx = 0; idx < u[m].size(); ++idx) {
      if (grid.cls[idx] == NodeClass::Exterior) continue;
      double v = u[m][idx];
      if (!(v > 0))
        throw Error("field: non-positive value at level " + std::to_string(m));
      if (v > M)
        throw Error("field: value exceeds declared bound M at level " +
                    std::to_string(m));
    }
}

void for_each_interior(const SolutionField& f,
                       const std::function<void(const NodeRef&,
                                                std::span<const double>,
                                                double)>& fn) {
  double p[2];
  for (std::size_t m = 0; m < f.u.size(); ++m)
    for (int j = 0; j < f.grid.ny; ++j) {
      auto rs = f.grid.rows[j];
      for (int i = rs.begin; i < rs.end; ++i) {
        f.grid.point_of(i, j, p);
        NodeRef n{i, j, static_cast<int>(m), f.grid.index(i, j)};
        fn(n, std::span<const double>(p, f.grid.mode == GridMode::Radial1D ? 1 : 2),
           f.times[m]);
      }
    }
}

}  // namespace gradlab
