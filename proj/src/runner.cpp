#include "gradlab/runner.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "gradlab/field_io.hpp"
#include "gradlab/kernels.hpp"
#include "json.hpp"

namespace gradlab {
namespace {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

[[noreturn]] void bad(const std::string& where, const std::string& what) {
  throw ConfigError("[" + where + "]: " + what);
}

Subregion subregion_from_str(const std::string& s, const std::string& where) {
  if (s == "full") return Subregion::Full;
  if (s == "half") return Subregion::Half;
  if (s == "interior") return Subregion::InteriorZone;
  bad(where, "subregion must be full|half|interior, got '" + s + "'");
}

struct CheckConfig {
  std::string name;
  EstimateSpec spec;
  bool calibrate = false;
  double C = 1.0;
  Subregion subregion = Subregion::Full;
};

std::vector<CheckConfig> checks_from_config(const Config& cfg) {
  std::vector<CheckConfig> out;
  for (const auto& sec : cfg.sections_with_prefix("check.")) {
    CheckConfig cc;
    cc.name = sec.substr(6);
    if (cc.name.empty()) bad(sec, "check section needs a name");
    try {
      cc.spec = estimate_from_id(cfg.str(sec, "estimate"));
    } catch (const InvalidArgument& e) {
      bad(sec, e.what());
    }
    const auto& cval = cfg.raw(sec, "C");
    if (cval.kind == ConfigValue::Kind::String) {
      if (cval.str != "calibrate")
        bad(sec, "C must be a positive number or \"calibrate\"");
      cc.calibrate = true;
    } else if (cval.kind == ConfigValue::Kind::Number && cval.num > 0) {
      cc.C = cval.num;
    } else {
      bad(sec, "C must be a positive number or \"calibrate\"");
    }
    cc.subregion = subregion_from_str(cfg.str_or(sec, "subregion", "full"), sec);
    out.push_back(std::move(cc));
  }
  return out;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open '" + path + "' for writing");
  f << text;
  if (!f) throw IoError("write failure on '" + path + "'");
}

json violation_json(const Violation& v) {
  json j;
  j["x"] = v.x;
  j["t"] = v.t;
  j["lhs"] = v.lhs;
  j["rhs"] = v.rhs;
  return j;
}

json report_json(const BoundReport& rep, bool calibrated, bool feasible) {
  json j;
  j["schema"] = 1;
  j["estimate"] = rep.estimate_id;
  j["field"] = rep.field_id;
  j["C"] = rep.C_used;
  j["C_mode"] = calibrated ? "calibrated" : "fixed";
  if (calibrated) j["feasible"] = feasible;
  j["subregion"] = rep.subregion;
  j["checked_nodes"] = rep.checked_nodes;
  j["min_slack"] = rep.min_slack;
  j["max_ratio"] = rep.max_ratio;
  j["passed"] = rep.passed();
  json viols = json::array();
  for (const auto& v : rep.violations) viols.push_back(violation_json(v));
  j["violations"] = viols;
  return j;
}

void write_per_node_csv(const std::string& path, const FieldAssessment& fa,
                        const EstimateSpec& spec, double C, Subregion sub) {
  std::string csv;
  const bool radial = fa.field->grid.mode == GridMode::Radial1D;
  csv += radial ? "x1,t,lhs,rhs,region\n" : "x1,x2,t,lhs,rhs,region\n";
  char buf[256];
  per_node_table(fa, spec, C, sub,
                 [&](std::span<const double> x, double t, double lhs,
                     double rhs, Region reg) {
                   if (radial)
                     std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%s\n",
                                   x[0], t, lhs, rhs, region_name(reg));
                   else
                     std::snprintf(buf, sizeof buf,
                                   "%.17g,%.17g,%.17g,%.17g,%.17g,%s\n", x[0],
                                   x[1], t, lhs, rhs, region_name(reg));
                   csv += buf;
                 });
  write_text(path, csv);
}

double parse_sampler_param(const std::string& id, const std::string& dflt) {
  auto pos = id.find(':');
  std::string tok = pos == std::string::npos ? dflt : id.substr(pos + 1);
  char* end = nullptr;
  double v = std::strtod(tok.c_str(), &end);
  if (end == tok.c_str())
    throw ConfigError("sampler '" + id + "': bad parameter");
  return v;
}

}  // namespace

MetricSpec metric_from_config(const Config& cfg) {
  if (!cfg.has_section("metric")) bad("metric", "section missing");
  std::string kind = cfg.str("metric", "kind");
  MetricSpec m = MetricSpec::euclidean(2);
  if (kind == "euclidean") {
    double n = cfg.number_or("metric", "dimension", 2);
    if (n < 2 || n != std::floor(n))
      bad("metric", "dimension must be an integer >= 2");
    m = MetricSpec::euclidean(static_cast<int>(n));
  } else if (kind == "poincare") {
    double lambda = cfg.number_or("metric", "lambda", 1.0);
    if (!(lambda > 0)) bad("metric", "lambda must be positive");
    m = MetricSpec::poincare_disk(lambda);
  } else {
    bad("metric", "kind must be euclidean|poincare, got '" + kind + "'");
  }
  if (cfg.has_key("metric", "k")) {
    double k = cfg.number("metric", "k");
    if (std::fabs(k - m.ricci_lower_bound()) >
        1e-12 * (1 + std::fabs(k)))
      bad("metric", "k inconsistent with the metric (expected " +
                        std::to_string(m.ricci_lower_bound()) + ")");
  }
  return m;
}

DomainSpec domain_from_config(const Config& cfg) {
  if (!cfg.has_section("domain")) bad("domain", "section missing");
  DomainSpec d;
  d.x0 = cfg.numbers("domain", "x0");
  d.R = cfg.number("domain", "radius");
  d.t0 = cfg.number("domain", "t0");
  d.T = cfg.number("domain", "duration");
  d.rho = cfg.number_or("domain", "rho", d.R / 2);
  d.delta = cfg.number_or("domain", "delta", d.T / 2);
  if (d.x0.empty()) bad("domain", "x0 must be a nonempty array");
  if (!(d.R > 0)) bad("domain", "radius must be positive");
  if (!(d.T > 0)) bad("domain", "duration must be positive");
  if (!(d.rho > 0 && d.rho < d.R)) bad("domain", "rho must satisfy 0 < rho < radius");
  if (!(d.delta > 0 && d.delta < d.T))
    bad("domain", "delta must satisfy 0 < delta < duration");
  return d;
}

SourceSpec source_from_config(const Config& cfg) {
  if (!cfg.has_section("source")) return SourceSpec::zero();
  std::string kind = cfg.str_or("source", "kind", "zero");
  if (kind == "zero") return SourceSpec::zero();
  if (kind == "power")
    return SourceSpec::power(cfg.number("source", "lambda"),
                             cfg.number("source", "alpha"));
  if (kind == "semilinear") return SourceSpec::semilinear(cfg.number("source", "p"));
  if (kind == "custom") {
    try {
      return SourceSpec::custom(cfg.str("source", "id"));
    } catch (const InvalidArgument& e) {
      bad("source", e.what());
    }
  }
  bad("source", "kind must be zero|power|semilinear|custom, got '" + kind + "'");
}

SpaceTimeSampler sampler_from_id(const std::string& id, const DomainSpec& dom) {
  if (id.rfind("constant", 0) == 0) {
    double c = parse_sampler_param(id, "1");
    if (!(c > 0)) throw ConfigError("sampler '" + id + "': needs a positive value");
    return [c](std::span<const double>, double) { return c; };
  }
  if (id.rfind("gauss_kernel", 0) == 0) {
    return [](std::span<const double> x, double t) {
      double r2 = 0;
      for (double c : x) r2 += c * c;
      double n = static_cast<double>(x.size());
      return std::pow(4.0 * M_PI * t, -0.5 * n) * std::exp(-r2 / (4.0 * t));
    };
  }
  if (id.rfind("exp_example", 0) == 0) {
    double eps = parse_sampler_param(id, "0.01");
    return [eps](std::span<const double> x, double t) {
      return 10.0 + eps * std::exp(x[0] + t);
    };
  }
  if (id.rfind("exp_growth", 0) == 0) {
    double c = parse_sampler_param(id, "1");
    double t_start = dom.t_start();
    return [c, t_start](std::span<const double>, double t) {
      return c * std::exp(t - t_start);
    };
  }
  if (id == "poincare_harmonic")
    return [](std::span<const double> x, double) { return x[0] + 2.0; };
  throw ConfigError("unknown sampler id '" + id + "'");
}

SolutionField solution_from_config(const Config& cfg, double grid_scale) {
  if (!cfg.has_section("solution")) bad("solution", "section missing");
  DomainSpec dom = domain_from_config(cfg);
  std::string type = cfg.str("solution", "type");
  const double h = cfg.number_or("solution", "h", 0.05) / grid_scale;
  const double dt = cfg.number_or("solution", "dt", 0.05) / grid_scale;
  std::optional<double> M_override;
  if (cfg.has_key("solution", "M")) M_override = cfg.number("solution", "M");

  if (type == "load") {
    return load_field(cfg.str("solution", "path"));
  }

  if (type == "analytic") {
    std::string kind = cfg.str("solution", "kind");
    AnalyticSpec spec;
    if (kind == "gauss_kernel") {
      spec.kind = AnalyticSpec::Kind::GaussKernel;
      spec.n = static_cast<int>(cfg.number_or("solution", "n", 2));
    } else if (kind == "exp_example") {
      spec.kind = AnalyticSpec::Kind::ExpExample;
      spec.epsilon = cfg.number_or("solution", "epsilon", 0.01);
    } else if (kind == "poincare_harmonic") {
      spec.kind = AnalyticSpec::Kind::PoincareHarmonic;
      spec.lambda = cfg.number_or("solution", "lambda", 1.0);
    } else {
      bad("solution",
          "kind must be gauss_kernel|exp_example|poincare_harmonic");
    }
    auto f = analytic_solution(spec, dom, h, dt, M_override);
    if (cfg.has_section("metric")) {
      auto m = metric_from_config(cfg);
      if (m.kind() != f.metric.kind() ||
          m.dimension() != f.metric.dimension() ||
          std::fabs(m.ricci_lower_bound() - f.metric.ricci_lower_bound()) >
              1e-12)
        bad("metric", "inconsistent with the analytic solution kind");
    }
    return f;
  }

  if (type == "solve") {
    MetricSpec metric = metric_from_config(cfg);
    SourceSpec src = source_from_config(cfg);
    SolveOptions opt;
    opt.h = h;
    opt.dt = dt;
    opt.M_override = M_override;
    std::string scheme = cfg.str_or("solution", "scheme", "crank_nicolson");
    if (scheme == "explicit")
      opt.scheme = Scheme::Explicit;
    else if (scheme == "crank_nicolson")
      opt.scheme = Scheme::CrankNicolson;
    else
      bad("solution", "scheme must be explicit|crank_nicolson");
    std::string mode = cfg.str_or("solution", "mode", "full");
    if (mode == "radial")
      opt.mode = GridMode::Radial1D;
    else if (mode != "full")
      bad("solution", "mode must be full|radial");
    auto initial = sampler_from_id(cfg.str("solution", "initial"), dom);
    auto boundary = sampler_from_id(cfg.str("solution", "boundary"), dom);
    return solve_parabolic(dom, metric, src, initial, boundary, opt);
  }

  bad("solution", "type must be analytic|solve|load, got '" + type + "'");
}

CutoffParams cutoff_from_config(const Config& cfg) {
  DomainSpec dom = domain_from_config(cfg);
  CutoffParams p;
  p.a = cfg.number_or("cutoff", "a", 0.5);
  p.R = dom.R;
  p.rho = dom.rho;
  p.t0 = dom.t0;
  p.T = dom.T;
  p.delta = dom.delta;
  if (!(p.a > 0 && p.a < 1)) bad("cutoff", "a must lie in (0,1)");
  return p;
}

namespace {

int run_experiment_impl(const Config& cfg, const RunOptions& opt) {
  auto checks = checks_from_config(cfg);
  SourceSpec src = source_from_config(cfg);
  std::optional<double> m_override;
  if (cfg.has_key("source", "m")) {
    m_override = cfg.number("source", "m");
    if (!(*m_override > 0)) bad("source", "m must be positive");
  }
  SolutionField field = solution_from_config(cfg);
  FieldAssessment fa = assess_field(field, src, {}, m_override);
  fs::create_directories(opt.out_dir);

  json summary;
  summary["schema"] = 1;
  summary["field"] = field.id;
  summary["traces"] = {{"initial", fa.traces.initial_trace},
                       {"lateral", fa.traces.lateral_trace}};
  summary["gamma"] = fa.analysis.gamma;
  summary["mu"] = fa.analysis.mu;

  bool all_pass = true;
  json check_arr = json::array();
  const bool want_csv = cfg.boolean_or("output", "per_node_csv", false);
  for (const auto& cc : checks) {
    if (opt.calibrations_only && !cc.calibrate) continue;
    double C = cc.C;
    bool feasible = true;
    Calibration cal;
    if (cc.calibrate) {
      CalibrationTask task{&fa, cc.spec, cc.subregion};
      cal = calibrate_C({&task, 1}, 1e-3, opt.threads);
      feasible = cal.feasible;
      C = cal.C_star;
    }
    BoundReport rep = check_estimate(fa, cc.spec, C, cc.subregion, opt.threads);
    json rj = report_json(rep, cc.calibrate, feasible);
    if (cc.calibrate && feasible) {
      json w;
      w["field"] = cal.witness_field;
      w["node"] = violation_json(cal.witness);
      rj["witness"] = w;
    }
    write_text(opt.out_dir + "/" + cc.name + ".report.json", rj.dump(2) + "\n");
    if (want_csv)
      write_per_node_csv(opt.out_dir + "/" + cc.name + ".nodes.csv", fa,
                         cc.spec, C, cc.subregion);
    json entry;
    entry["name"] = cc.name;
    entry["estimate"] = rep.estimate_id;
    entry["C"] = C;
    entry["calibrated"] = cc.calibrate;
    entry["passed"] = rep.passed();
    entry["min_slack"] = rep.min_slack;
    entry["max_ratio"] = rep.max_ratio;
    check_arr.push_back(entry);
    if (!cc.calibrate && !rep.passed()) all_pass = false;
    if (cc.calibrate && !feasible) all_pass = false;
  }
  summary["checks"] = check_arr;

  // optional comparison study
  if (cfg.has_section("compare") && !opt.checks_only &&
      !opt.calibrations_only) {
    auto ids = cfg.strings("compare", "estimates");
    double C = 1.0;
    const auto& cval = cfg.raw("compare", "C");
    if (cval.kind == ConfigValue::Kind::String) {
      const std::string prefix = "calibrate:";
      if (cval.str.rfind(prefix, 0) != 0)
        bad("compare", "C must be a number or \"calibrate:<estimate>\"");
      CalibrationTask task{&fa, estimate_from_id(cval.str.substr(prefix.size())),
                           Subregion::Half};
      auto cal = calibrate_C({&task, 1}, 1e-3, opt.threads);
      if (!cal.feasible) bad("compare", "calibration infeasible");
      C = cal.C_star;
    } else {
      C = cval.num;
    }
    std::vector<CompareEntry> entries;
    for (const auto& id : ids) entries.push_back({estimate_from_id(id), C});
    Subregion sub = subregion_from_str(
        cfg.str_or("compare", "subregion", "half"), "compare");
    auto table = compare_bounds(fa, entries, sub);
    json cj;
    cj["C"] = C;
    cj["winner"] = table.winner;
    json rows = json::array();
    for (const auto& r : table.rows)
      rows.push_back({{"estimate", r.estimate_id}, {"sup_rhs", r.sup_rhs}});
    cj["rows"] = rows;
    write_text(opt.out_dir + "/compare.json", cj.dump(2) + "\n");
    summary["compare"] = cj;
  }

  // refinement study: halve h and dt `refine` times, track the pde residual
  if (opt.refine > 0) {
    json study = json::array();
    double prev = -1;
    for (int l = 0; l <= opt.refine; ++l) {
      const SolutionField* f = &field;
      SolutionField refined;
      if (l > 0) {
        refined = solution_from_config(cfg, std::ldexp(1.0, l));
        f = &refined;
      }
      json row;
      row["level"] = l;
      row["h"] = f->grid.h;
      row["dt"] = f->dt;
      if (f->u.size() >= 3) {
        double res = pde_residual(*f, src);
        row["pde_residual"] = res;
        if (prev > 0 && res > 0) row["order"] = std::log2(prev / res);
        prev = res;
      }
      study.push_back(row);
    }
    summary["refinement"] = study;
  } else if (field.u.size() >= 3) {
    summary["pde_residual"] = pde_residual(field, src);
  }

  summary["config_hash"] = cfg.hash();
  summary["config_normalized"] = cfg.normalized();
  write_text(opt.out_dir + "/summary.json", summary.dump(2) + "\n");

  // timestamps and machine facts stay out of the hashed payloads
  {
    auto now = std::chrono::system_clock::now();
    auto tt = std::chrono::system_clock::to_time_t(now);
    char buf[128];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&tt));
    std::string meta = std::string("timestamp: ") + buf + "\n" +
                       "backend: " + kernels::backend_name() + "\n" +
                       "threads: " + std::to_string(opt.threads) + "\n";
    write_text(opt.out_dir + "/meta.txt", meta);
  }
  return all_pass ? kExitOk : kExitViolation;
}

}  // namespace

int run_experiment(const Config& cfg, const RunOptions& opt) {
  try {
    return run_experiment_impl(cfg, opt);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitConfig;
  } catch (const IoError& e) {
    std::fprintf(stderr, "io error: %s\n", e.what());
    return kExitIo;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "build error: %s\n", e.what());
    return kExitBuild;
  }
}

int run_cutoff_check(const Config& cfg, const RunOptions& opt) {
  try {
    fs::create_directories(opt.out_dir);
    CutoffParams p = cutoff_from_config(cfg);
    int n = static_cast<int>(cfg.number_or("cutoff", "grid_points", 10000));
    auto consts = measure_cutoff_constants(p, n);

    std::string csv = "r,psi,d1,d2,ratio\n";
    char buf[256];
    for (int i = 0; i <= n; ++i) {
      double r = p.R * i / n;
      double psi = psi_bar(r, p);
      double d1 = psi_bar_d1(r, p);
      double d2 = psi_bar_d2(r, p);
      double ratio = 0;
      if (psi >= 1e-300)
        ratio = (p.rho * std::fabs(d1) + p.rho * p.rho * std::fabs(d2)) /
                std::pow(psi, p.a);
      std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%.17g\n", r, psi,
                    d1, d2, ratio);
      csv += buf;
    }
    std::snprintf(buf, sizeof buf,
                  "# C_space=%.17g C_time=%.17g bridge_max_space=%.17g "
                  "bridge_max_time=%.17g\n",
                  consts.C_space, consts.C_time, consts.bridge_max_space,
                  consts.bridge_max_time);
    csv += buf;
    write_text(opt.out_dir + "/cutoff.csv", csv);
    std::printf("C_space=%.17g C_time=%.17g bridge_max_space=%.17g\n",
                consts.C_space, consts.C_time, consts.bridge_max_space);
    if (opt.refine > 0) {
      for (int l = 1; l <= opt.refine; ++l) {
        auto c = measure_cutoff_constants(p, n << l);
        std::printf("refine %d: C_space=%.17g C_time=%.17g\n", l, c.C_space,
                    c.C_time);
      }
    }
    return kExitOk;
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitConfig;
  } catch (const IoError& e) {
    std::fprintf(stderr, "io error: %s\n", e.what());
    return kExitIo;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitBuild;
  }
}

int run_solve(const Config& cfg, const RunOptions& opt) {
  try {
    fs::create_directories(opt.out_dir);
    SourceSpec src = source_from_config(cfg);
    SolutionField field = solution_from_config(cfg);
    std::string path = cfg.str_or("solution", "path", opt.out_dir + "/field.dat");
    save_field(field, path);
    std::printf("field: %s\n", field.id.c_str());
    std::printf("saved: %s (%zu levels, h=%.17g, dt=%.17g, M=%.17g)\n",
                path.c_str(), field.u.size(), field.grid.h, field.dt, field.M);
    if (field.u.size() >= 3)
      std::printf("pde_residual: %.17g\n", pde_residual(field, src));
    return kExitOk;
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitConfig;
  } catch (const IoError& e) {
    std::fprintf(stderr, "io error: %s\n", e.what());
    return kExitIo;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "build error: %s\n", e.what());
    return kExitBuild;
  }
}

int run_compare(const Config& cfg, const RunOptions& opt) {
  if (!cfg.has_section("compare")) {
    std::fprintf(stderr, "config error: [compare] section missing\n");
    return kExitConfig;
  }
  RunOptions o = opt;
  o.checks_only = false;
  // run_experiment with zero checks still performs the compare study
  return run_experiment(cfg, o);
}

}  // namespace gradlab
