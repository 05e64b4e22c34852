#include "gradlab/verify.hpp"

#include <algorithm>
#include <cfloat>
#include <cmath>
#include <thread>

#include "gradlab/kernels.hpp"
#include "gradlab/solver.hpp"

namespace gradlab {
namespace {

constexpr std::size_t kViolationCap = 64;

struct NodeValues {
  double lhs = 0, rhs = 0;
};

// Per-level accumulator merged in level order for determinism.
struct LevelResult {
  double min_slack = std::numeric_limits<double>::infinity();
  double max_ratio = -std::numeric_limits<double>::infinity();
  std::size_t checked = 0;
  std::vector<Violation> violations;
  Violation best;  // argmax ratio
  bool has_best = false;
};

bool in_subregion(const FieldAssessment& fa, Subregion sub, int flat, double t,
                  Region* reg_out) {
  const DomainSpec& dom = fa.field->domain;
  double d = fa.node_distance[flat];
  bool inner = d < dom.R - dom.rho;
  bool late = t >= dom.t_start() + dom.delta;
  Region reg = inner ? (late ? Region::Interior : Region::NearInitial)
                     : (late ? Region::NearLateral : Region::Corner);
  if (reg_out) *reg_out = reg;
  switch (sub) {
    case Subregion::Full:
      return true;
    case Subregion::Half:
      return d <= dom.R / 2 && t >= dom.t0 - dom.T / 2;
    case Subregion::InteriorZone:
      return reg == Region::Interior;
  }
  return true;
}

CorollaryParams corollary_params(const FieldAssessment& fa,
                                 const EstimateSpec& spec) {
  const SolutionField& f = *fa.field;
  CorollaryParams pr;
  pr.k = fa.constants.k;
  pr.R = f.domain.R;
  pr.T = f.domain.T;
  pr.M = f.M;
  pr.m = fa.m;
  pr.gamma = fa.analysis.gamma;
  pr.mu = fa.analysis.mu;
  pr.traces = spec.use_unknown_traces ? BoundaryTraces::unknown() : fa.traces;
  const SourceSpec& s = fa.source;
  switch (spec.kind) {
    case CorollaryKind::SZHeat:
    case CorollaryKind::BoundaryAware:
      if (s.kind != SourceKind::Zero &&
          !(s.kind == SourceKind::Power && s.lambda == 0))
        throw InvalidArgument(std::string(corollary_name(spec.kind)) +
                              ": heat-equation fields only");
      break;
    case CorollaryKind::MaZengZ1:
    case CorollaryKind::MaZengZ2:
    case CorollaryKind::MaZengZ3:
      if (s.kind != SourceKind::Power)
        throw InvalidArgument("ma_zeng: power-law sources only");
      pr.lambda = s.lambda;
      pr.alpha = s.alpha_exp;
      break;
    case CorollaryKind::SemilinearP:
      if (s.kind == SourceKind::SemilinearP)
        pr.p = s.p;
      else if (s.kind == SourceKind::Power && s.lambda == 1.0)
        pr.p = s.alpha_exp;
      else
        throw InvalidArgument("semilinear_p: needs S = u^p");
      break;
    case CorollaryKind::USquared:
      if (!(s.kind == SourceKind::SemilinearP && s.p == 2.0) &&
          !(s.kind == SourceKind::Power && s.lambda == 1.0 &&
            s.alpha_exp == 2.0))
        throw InvalidArgument("u_squared: needs S = u^2");
      break;
    case CorollaryKind::InteriorGeneral:
      break;
  }
  return pr;
}

struct RhsContext {
  EstimateSpec::Type type;
  bool squared_lhs = false;
  double C = 1;
  ZoneCoefficients zone;       // TheoremB
  ZoneCoefficients zone_sq;    // RegionalW combined form
  double base_sq = 0;          // RegionalW: C * common_sq
  double coeff = 0;            // corollary coefficient
  bool coeff_squared = false;
  const EstimateConstants* consts = nullptr;
};

RhsContext make_context(const FieldAssessment& fa, const EstimateSpec& spec,
                        double C) {
  if (!(C > 0)) throw InvalidArgument("check_estimate: C must be positive");
  RhsContext cx;
  cx.type = spec.type;
  cx.C = C;
  cx.consts = &fa.constants;
  BoundaryTraces tr =
      spec.use_unknown_traces ? BoundaryTraces::unknown() : fa.traces;
  switch (spec.type) {
    case EstimateSpec::Type::TheoremB:
      cx.zone = ZoneCoefficients::make(tr, fa.constants, C);
      break;
    case EstimateSpec::Type::RegionalW:
      cx.zone_sq = ZoneCoefficients::make_squared(tr, fa.constants, C);
      cx.base_sq = C * fa.constants.common_term_sq();
      cx.squared_lhs = true;
      break;
    case EstimateSpec::Type::Corollary: {
      auto pr = corollary_params(fa, spec);
      cx.coeff = corollary_coefficient(spec.kind, pr, C);
      cx.coeff_squared = corollary_squared(spec.kind);
      cx.squared_lhs = cx.coeff_squared;
      break;
    }
  }
  return cx;
}

NodeValues node_values(const FieldAssessment& fa, const RhsContext& cx,
                       int flat, int level, Region reg) {
  const DerivedFields& d = fa.derived;
  NodeValues nv;
  const double grad = d.grad_v[level][flat];
  const double one_minus_v = 1.0 - d.v[level][flat];
  switch (cx.type) {
    case EstimateSpec::Type::TheoremB:
      nv.lhs = grad;
      nv.rhs = (cx.C * cx.consts->common_term() + cx.zone.pick(reg)) *
               one_minus_v;
      break;
    case EstimateSpec::Type::RegionalW:
      nv.lhs = d.w[level][flat];
      nv.rhs = cx.base_sq + cx.zone_sq.pick(reg);
      break;
    case EstimateSpec::Type::Corollary:
      if (cx.coeff_squared) {
        nv.lhs = grad * grad;
        nv.rhs = cx.coeff * one_minus_v * one_minus_v;
      } else {
        nv.lhs = grad;
        nv.rhs = cx.coeff * one_minus_v;
      }
      break;
  }
  return nv;
}

LevelResult scan_level(const FieldAssessment& fa, const RhsContext& cx,
                       Subregion sub, int level) {
  const SolutionField& f = *fa.field;
  const LatticeGrid& g = f.grid;
  const double t = f.times[level];
  LevelResult lr;
  std::vector<double> lhs_buf, rhs_buf, rhs_clamped;
  std::vector<int> flat_buf;
  for (int j = 0; j < g.ny; ++j) {
    auto rs = g.rows[j];
    for (int i = rs.begin; i < rs.end; ++i) {
      int flat = g.index(i, j);
      Region reg;
      if (!in_subregion(fa, sub, flat, t, &reg)) continue;
      NodeValues nv = node_values(fa, cx, flat, level, reg);
      lhs_buf.push_back(nv.lhs);
      rhs_buf.push_back(nv.rhs);
      flat_buf.push_back(flat);
    }
  }
  lr.checked = lhs_buf.size();
  if (lhs_buf.empty()) return lr;

  lr.min_slack = kernels::min_diff(rhs_buf.data(), lhs_buf.data(),
                                   lhs_buf.size());
  rhs_clamped = rhs_buf;
  for (double& r : rhs_clamped)
    if (!(r > 0)) r = DBL_MIN;  // zero RHS: pass iff LHS == 0
  lr.max_ratio = kernels::max_ratio(lhs_buf.data(), rhs_clamped.data(),
                                    lhs_buf.size());

  // deterministic first-index argmax and violation collection
  std::size_t best_idx = 0;
  for (std::size_t q = 0; q < lhs_buf.size(); ++q) {
    double ratio = lhs_buf[q] / rhs_clamped[q];
    if (ratio == lr.max_ratio) {
      best_idx = q;
      break;
    }
  }
  auto fill = [&](std::size_t q, Violation& v) {
    int flat = flat_buf[q];
    int i = flat % g.nx, j = flat / g.nx;
    v.x = g.point(i, j);
    v.t = t;
    v.lhs = lhs_buf[q];
    v.rhs = rhs_buf[q];
  };
  fill(best_idx, lr.best);
  lr.has_best = true;
  for (std::size_t q = 0; q < lhs_buf.size(); ++q) {
    if (lhs_buf[q] > rhs_buf[q]) {
      if (lr.violations.size() >= kViolationCap) break;
      Violation v;
      fill(q, v);
      lr.violations.push_back(std::move(v));
    }
  }
  return lr;
}

BoundReport merge_levels(const FieldAssessment& fa, const EstimateSpec& spec,
                         double C, Subregion sub,
                         std::vector<LevelResult>& levels) {
  BoundReport rep;
  rep.estimate_id = spec.label();
  rep.field_id = fa.field_id;
  rep.C_used = C;
  rep.subregion = subregion_name(sub);
  Violation best;
  double best_ratio = -std::numeric_limits<double>::infinity();
  for (auto& lr : levels) {
    rep.checked_nodes += lr.checked;
    rep.min_slack = std::min(rep.min_slack, lr.min_slack);
    if (lr.has_best && lr.max_ratio > best_ratio) {
      best_ratio = lr.max_ratio;
      best = lr.best;
    }
    for (auto& v : lr.violations) {
      if (rep.violations.size() >= kViolationCap) break;
      rep.violations.push_back(std::move(v));
    }
  }
  rep.max_ratio = best_ratio;
  return rep;
}

std::vector<LevelResult> run_levels(const FieldAssessment& fa,
                                    const RhsContext& cx, Subregion sub,
                                    int threads) {
  const int nl = static_cast<int>(fa.field->u.size());
  std::vector<LevelResult> out(nl);
  threads = std::max(1, std::min(threads, nl));
  if (threads == 1) {
    for (int m = 0; m < nl; ++m) out[m] = scan_level(fa, cx, sub, m);
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < threads; ++w)
      pool.emplace_back([&, w] {
        for (int m = w; m < nl; m += threads)
          out[m] = scan_level(fa, cx, sub, m);
      });
    for (auto& th : pool) th.join();
  }
  return out;
}

}  // namespace

const char* subregion_name(Subregion s) {
  switch (s) {
    case Subregion::Full: return "full";
    case Subregion::Half: return "half";
    case Subregion::InteriorZone: return "interior";
  }
  return "?";
}

std::string EstimateSpec::label() const {
  std::string base;
  switch (type) {
    case Type::TheoremB: base = "theorem"; break;
    case Type::RegionalW: base = "regional_w"; break;
    case Type::Corollary: base = corollary_name(kind); break;
  }
  if (use_unknown_traces) base += "(unknown-traces)";
  return base;
}

EstimateSpec estimate_from_id(const std::string& id) {
  EstimateSpec spec;
  std::string name = id;
  const std::string suffix = ":unknown";
  if (name.size() > suffix.size() &&
      name.compare(name.size() - suffix.size(), suffix.size(), suffix) == 0) {
    spec.use_unknown_traces = true;
    name = name.substr(0, name.size() - suffix.size());
  }
  if (name == "theorem") {
    spec.type = EstimateSpec::Type::TheoremB;
    return spec;
  }
  if (name == "regional_w") {
    spec.type = EstimateSpec::Type::RegionalW;
    return spec;
  }
  spec.type = EstimateSpec::Type::Corollary;
  for (CorollaryKind k :
       {CorollaryKind::SZHeat, CorollaryKind::MaZengZ1, CorollaryKind::MaZengZ2,
        CorollaryKind::MaZengZ3, CorollaryKind::SemilinearP,
        CorollaryKind::USquared, CorollaryKind::InteriorGeneral,
        CorollaryKind::BoundaryAware}) {
    if (name == corollary_name(k)) {
      spec.kind = k;
      return spec;
    }
  }
  throw InvalidArgument("unknown estimate id '" + id + "'");
}

FieldAssessment assess_field(const SolutionField& f, const SourceSpec& src,
                             GridResolution res,
                             std::optional<double> m_override) {
  FieldAssessment fa;
  fa.field = &f;
  fa.source = src;
  fa.derived = derived_fields(f);
  fa.traces = boundary_traces(f, fa.derived);
  const double k = f.metric.ricci_lower_bound();
  fa.m = m_override.value_or(f.min_u);
  fa.analysis = analyze_source(src, f.domain, f.metric, k, f.M, fa.m, res);
  fa.constants = EstimateConstants::from(fa.analysis, f.domain, k);
  fa.field_id = f.id;
  fa.node_distance.assign(f.grid.size(),
                          std::numeric_limits<double>::quiet_NaN());
  for (int j = 0; j < f.grid.ny; ++j)
    for (int i = 0; i < f.grid.nx; ++i) {
      int id = f.grid.index(i, j);
      if (f.grid.cls[id] == NodeClass::Exterior) continue;
      if (f.grid.mode == GridMode::Radial1D) {
        fa.node_distance[id] = i * f.grid.h;  // radial coordinate
        continue;
      }
      auto p = f.grid.point(i, j);
      if (f.metric.contains(p))
        fa.node_distance[id] = geodesic_distance(f.metric, p, f.domain.x0);
    }
  return fa;
}

BoundReport check_estimate(const FieldAssessment& fa, const EstimateSpec& spec,
                           double C, Subregion sub, int threads) {
  if (spec.type == EstimateSpec::Type::Corollary) sub = Subregion::Half;
  RhsContext cx = make_context(fa, spec, C);
  auto levels = run_levels(fa, cx, sub, threads);
  return merge_levels(fa, spec, C, sub, levels);
}

void per_node_table(
    const FieldAssessment& fa, const EstimateSpec& spec, double C,
    Subregion sub,
    const std::function<void(std::span<const double>, double, double, double,
                             Region)>& emit) {
  if (spec.type == EstimateSpec::Type::Corollary) sub = Subregion::Half;
  RhsContext cx = make_context(fa, spec, C);
  const SolutionField& f = *fa.field;
  const LatticeGrid& g = f.grid;
  for (std::size_t m = 0; m < f.u.size(); ++m)
    for (int j = 0; j < g.ny; ++j) {
      auto rs = g.rows[j];
      for (int i = rs.begin; i < rs.end; ++i) {
        int flat = g.index(i, j);
        Region reg;
        if (!in_subregion(fa, sub, flat, f.times[m], &reg)) continue;
        NodeValues nv =
            node_values(fa, cx, flat, static_cast<int>(m), reg);
        auto p = g.point(i, j);
        emit(p, f.times[m], nv.lhs, nv.rhs, reg);
      }
    }
}

Calibration calibrate_C(std::span<const CalibrationTask> tasks, double rel_tol,
                        int threads) {
  if (tasks.empty()) throw InvalidArgument("calibrate_C: no tasks");
  if (!(rel_tol > 0)) throw InvalidArgument("calibrate_C: bad tolerance");

  auto passes = [&](double C) {
    for (const auto& t : tasks) {
      auto rep = check_estimate(*t.assessment, t.spec, C, t.subregion, threads);
      if (!rep.passed()) return false;
    }
    return true;
  };

  const double lo_bound = std::ldexp(1.0, -20), hi_bound = std::ldexp(1.0, 20);
  Calibration cal;
  if (!passes(hi_bound)) {
    cal.feasible = false;
    cal.C_star = hi_bound;
    return cal;
  }
  cal.feasible = true;
  double lo = lo_bound, hi = hi_bound;
  if (passes(lo_bound)) {
    hi = lo_bound;  // even the lower search bound passes
  } else {
    while (hi / lo > 1.0 + rel_tol) {
      double mid = std::sqrt(lo * hi);
      if (passes(mid))
        hi = mid;
      else
        lo = mid;
    }
  }
  cal.C_star = hi;

  // witness: binding node across tasks at C*
  double best_ratio = -std::numeric_limits<double>::infinity();
  for (const auto& t : tasks) {
    auto rep = check_estimate(*t.assessment, t.spec, cal.C_star, t.subregion,
                              threads);
    if (rep.max_ratio > best_ratio) {
      best_ratio = rep.max_ratio;
      cal.witness_field = rep.field_id;
      // reconstruct the argmax node: rerun scan via per_node_table
      Violation w;
      double best = -std::numeric_limits<double>::infinity();
      per_node_table(*t.assessment, t.spec, cal.C_star, t.subregion,
                     [&](std::span<const double> x, double tt, double lhs,
                         double rhs, Region) {
                       double den = rhs > 0 ? rhs : DBL_MIN;
                       double ratio = lhs / den;
                       if (ratio > best) {
                         best = ratio;
                         w.x.assign(x.begin(), x.end());
                         w.t = tt;
                         w.lhs = lhs;
                         w.rhs = rhs;
                       }
                     });
      cal.witness = w;
    }
  }
  return cal;
}

LemmaResidual lemma_pi_residual(const FieldAssessment& fa) {
  const SolutionField& f = *fa.field;
  const LatticeGrid& g = f.grid;
  if (g.mode != GridMode::Full2D)
    throw InvalidArgument("lemma_pi_residual: full 2-D lattices only");
  if (f.u.size() < 3)
    throw InvalidArgument("lemma_pi_residual: need at least 3 time levels");
  const DerivedFields& d = fa.derived;
  const double gamma = fa.analysis.gamma, mu = fa.analysis.mu;

  // 2h collar: keep nodes whose Chebyshev-2 neighborhood is interior
  auto deep_interior = [&](int i, int j) {
    for (int dj = -2; dj <= 2; ++dj)
      for (int di = -2; di <= 2; ++di) {
        int ii = i + di, jj = j + dj;
        if (ii < 0 || jj < 0 || ii >= g.nx || jj >= g.ny) return false;
        if (g.cls[g.index(ii, jj)] != NodeClass::Interior) return false;
      }
    return true;
  };

  LemmaResidual out;
  double max_w = 0;
  for (std::size_t m = 1; m + 1 < f.u.size(); ++m)
    for (int j = 0; j < g.ny; ++j) {
      auto rs = g.rows[j];
      for (int i = rs.begin; i < rs.end; ++i) {
        if (!deep_interior(i, j)) continue;
        int id = g.index(i, j);
        double w = d.w[m][id];
        max_w = std::max(max_w, w);
        double lap_w = lattice_laplacian(g, d.w[m], i, j);
        double w_t = (d.w[m + 1][id] - d.w[m - 1][id]) / (2.0 * f.dt);
        auto gw = lattice_gradient(g, d.w[m], i, j);
        double ip = (gw[0] * d.gx[m][id] + gw[1] * d.gy[m][id]) *
                    g.inv_phi[id];
        double v = d.v[m][id];
        double omv = 1.0 - v;
        double rhs = omv * w * w + v * ip / omv -
                     gamma * d.grad_v[m][id] / (omv * omv) - mu * w;
        double res = 0.5 * (lap_w - w_t) - rhs;
        out.min_residual = std::min(out.min_residual, res);
        ++out.checked_nodes;
      }
    }
  if (out.checked_nodes == 0)
    throw InvalidArgument("lemma_pi_residual: grid too coarse for the collar");
  out.tolerance = 10.0 * g.h * g.h * (1.0 + max_w) * (1.0 + max_w);
  return out;
}

CompareTable compare_bounds(const FieldAssessment& fa,
                            std::span<const CompareEntry> entries,
                            Subregion sub) {
  if (entries.empty()) throw InvalidArgument("compare_bounds: no estimates");
  CompareTable table;
  for (const auto& e : entries) {
    RhsContext cx = make_context(fa, e.spec, e.C);
    Subregion esub =
        e.spec.type == EstimateSpec::Type::Corollary ? Subregion::Half : sub;
    double sup = 0;
    const SolutionField& f = *fa.field;
    for (std::size_t m = 0; m < f.u.size(); ++m)
      for (int j = 0; j < f.grid.ny; ++j) {
        auto rs = f.grid.rows[j];
        for (int i = rs.begin; i < rs.end; ++i) {
          int flat = f.grid.index(i, j);
          Region reg;
          if (!in_subregion(fa, esub, flat, f.times[m], &reg)) continue;
          sup = std::max(
              sup, node_values(fa, cx, flat, static_cast<int>(m), reg).rhs);
        }
      }
    table.rows.push_back({e.spec.label(), sup});
  }
  std::stable_sort(table.rows.begin(), table.rows.end(),
                   [](const CompareRow& a, const CompareRow& b) {
                     return a.sup_rhs < b.sup_rhs;
                   });
  table.winner = table.rows.front().estimate_id;
  return table;
}

}  // namespace gradlab
