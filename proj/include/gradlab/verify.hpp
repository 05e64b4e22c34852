#pragma once

#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gradlab/estimate.hpp"

namespace gradlab {

// Everything the checks need about one field, computed once: derived fields,
// boundary traces, source analysis and the estimate constants.
struct FieldAssessment {
  const SolutionField* field = nullptr;
  SourceSpec source;
  DerivedFields derived;
  BoundaryTraces traces;
  SourceAnalysis analysis;
  EstimateConstants constants;
  double m = 1.0;  // effective field infimum used by the closed forms
  std::vector<double> node_distance;  // geodesic distance to x0 per node
  std::string field_id;
};

// m (the field infimum used by the closed-form mu) defaults to the observed
// minimum; a config-supplied override may replace it.
FieldAssessment assess_field(const SolutionField& f, const SourceSpec& src,
                             GridResolution res = {},
                             std::optional<double> m_override = {});

enum class Subregion { Full, Half, InteriorZone };
const char* subregion_name(Subregion s);

struct EstimateSpec {
  enum class Type { TheoremB, RegionalW, Corollary };
  Type type = Type::TheoremB;
  CorollaryKind kind = CorollaryKind::SZHeat;
  bool use_unknown_traces = false;
  std::string label() const;
};

// ids: "theorem", "regional_w", "sz_heat", "ma_zeng_z1|z2|z3",
// "semilinear_p", "u_squared", "interior_general", "boundary_aware"
EstimateSpec estimate_from_id(const std::string& id);

struct Violation {
  std::vector<double> x;
  double t = 0, lhs = 0, rhs = 0;
};

struct BoundReport {
  std::string estimate_id;
  std::string field_id;
  double C_used = 0;
  double min_slack = std::numeric_limits<double>::infinity();
  double max_ratio = 0;  // max LHS/RHS with zero-RHS treated as violation
  std::size_t checked_nodes = 0;
  std::vector<Violation> violations;  // capped at 64, deterministic order
  std::string subregion;
  bool passed() const { return violations.empty(); }
};

// Pointwise LHS <= RHS sweep. LHS is |grad u|/u (or w for the regional
// bounds, or its square for the squared corollary forms); corollary kinds
// are checked on the half cylinder regardless of the filter.
BoundReport check_estimate(const FieldAssessment& fa, const EstimateSpec& spec,
                           double C, Subregion sub, int threads = 1);

// Streams (x..., t, lhs, rhs, region) rows in deterministic order.
void per_node_table(
    const FieldAssessment& fa, const EstimateSpec& spec, double C,
    Subregion sub,
    const std::function<void(std::span<const double>, double, double, double,
                             Region)>& emit);

struct CalibrationTask {
  const FieldAssessment* assessment = nullptr;
  EstimateSpec spec;
  Subregion subregion = Subregion::Full;
};

struct Calibration {
  bool feasible = false;
  double C_star = 0;
  std::string witness_field;
  Violation witness;  // binding node (largest LHS/RHS at C*)
};

// Minimal C such that every task passes, by bisection in log space over
// [2^-20, 2^20]; the RHS is nondecreasing in C, which makes the predicate
// monotone. Returns the lower search bound when even that passes.
Calibration calibrate_C(std::span<const CalibrationTask> tasks,
                        double rel_tol = 1e-3, int threads = 1);

struct LemmaResidual {
  double min_residual = std::numeric_limits<double>::infinity();
  double tolerance = 0;  // 10 h^2 (1 + max w)^2
  std::size_t checked_nodes = 0;
  bool passed() const { return min_residual >= -tolerance; }
};

// Differential-inequality residual of the pointwise lemma behind the main
// estimate: min over filtered interior nodes of
//   (Lap w - w_t)/2 - [(1-v) w^2 + v <grad w, grad v>/(1-v)
//                      - gamma |grad v|/(1-v)^2 - mu w].
// A 2h collar near the spatial boundary and the first/last time levels are
// excluded. Full-2D lattices only.
LemmaResidual lemma_pi_residual(const FieldAssessment& fa);

struct CompareEntry {
  EstimateSpec spec;
  double C = 1.0;
};
struct CompareRow {
  std::string estimate_id;
  double sup_rhs = 0;
};
struct CompareTable {
  std::vector<CompareRow> rows;  // ascending sup_rhs
  std::string winner;
};

// sup-RHS table over the subregion, ascending; the winner is the estimate
// with the smallest supremum.
CompareTable compare_bounds(const FieldAssessment& fa,
                            std::span<const CompareEntry> entries,
                            Subregion sub = Subregion::Half);

}  // namespace gradlab
