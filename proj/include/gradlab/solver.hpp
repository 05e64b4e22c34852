#pragma once

#include <optional>

#include "gradlab/field.hpp"
#include "gradlab/source.hpp"

namespace gradlab {

enum class Scheme { Explicit, CrankNicolson };

using SpaceTimeSampler = std::function<double(std::span<const double>, double)>;

struct SolveOptions {
  Scheme scheme = Scheme::CrankNicolson;
  double h = 0.05;
  double dt = 0.01;
  GridMode mode = GridMode::Full2D;
  std::optional<double> M_override;
};

// Integrates u_t = Lap_g u + S(x,t,u) with Dirichlet data taken from the
// boundary sampler on the cut-cell layer. The explicit scheme enforces
// dt <= h^2/(2n) (metric-weighted for conformal factors); Crank-Nicolson
// treats the source by fixed-point lagging with a Newton fallback.
SolutionField solve_parabolic(const DomainSpec& dom, const MetricSpec& metric,
                              const SourceSpec& src,
                              const SpaceTimeSampler& initial,
                              const SpaceTimeSampler& boundary,
                              const SolveOptions& opt);

struct AnalyticSpec {
  enum class Kind { GaussKernel, ExpExample, PoincareHarmonic };
  Kind kind = Kind::GaussKernel;
  int n = 2;              // GaussKernel ambient dimension
  double epsilon = 0.01;  // ExpExample amplitude, in (0,1)
  double lambda = 1.0;    // PoincareHarmonic metric scale
};

// Samples a closed-form solution onto the lattice and registers its exact
// space derivatives. M defaults to the exact supremum over the closed
// cylinder; an override may only raise it.
SolutionField analytic_solution(const AnalyticSpec& spec, const DomainSpec& dom,
                                double h, double dt,
                                std::optional<double> M_override = {});

// max |u_t - Lap_g u - S| over interior nodes and interior time levels,
// evaluated with the same 2nd-order grid stencils used by the checks.
double pde_residual(const SolutionField& f, const SourceSpec& src);

// Rebinds the closed-form value/gradient lambdas from analytic_kind and
// analytic_param (used after loading an analytic field from disk).
void attach_analytic_forms(SolutionField& f);

// Stencil helpers shared with the estimate/verify modules. All operate on a
// lattice vector laid out like a field level. Gradients fall back to
// one-sided differences where a neighbor is missing (cut layer).
double lattice_laplacian(const LatticeGrid& g, const std::vector<double>& v,
                         int i, int j);  // metric Laplacian (phi^{-1} weighted)
std::vector<double> lattice_gradient(const LatticeGrid& g,
                                     const std::vector<double>& v, int i,
                                     int j);

}  // namespace gradlab
