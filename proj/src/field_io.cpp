#include "gradlab/field_io.hpp"

#include <cinttypes>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstring>
#include <limits>
#include <memory>
#include <string>

#include "gradlab/solver.hpp"

namespace gradlab {
namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

void w(std::FILE* f, const char* fmt, ...) {
  va_list ap;
  va_start(ap, fmt);
  std::vfprintf(f, fmt, ap);
  va_end(ap);
}

std::string read_line(std::FILE* f) {
  std::string line;
  int c;
  while ((c = std::fgetc(f)) != EOF && c != '\n') line.push_back(char(c));
  if (line.empty() && c == EOF) throw IoError("field file: unexpected EOF");
  return line;
}

double parse_d(const std::string& tok) {
  char* end = nullptr;
  double v = std::strtod(tok.c_str(), &end);
  if (end == tok.c_str()) throw IoError("field file: bad number '" + tok + "'");
  return v;
}

std::vector<std::string> split(const std::string& s) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && s[i] == ' ') ++i;
    std::size_t b = i;
    while (i < s.size() && s[i] != ' ') ++i;
    if (i > b) out.push_back(s.substr(b, i - b));
  }
  return out;
}

}  // namespace

void save_field(const SolutionField& f, const std::string& path) {
  FilePtr fp(std::fopen(path.c_str(), "w"));
  if (!fp) throw IoError("cannot open '" + path + "' for writing");
  std::FILE* out = fp.get();

  w(out, "gradlab-field 1\n");
  if (f.metric.kind() == MetricKind::Euclidean) {
    w(out, "metric euclidean %d\n", f.metric.dimension());
  } else if (f.metric.is_poincare()) {
    w(out, "metric poincare %.17g\n", f.metric.poincare_lambda());
  } else {
    throw IoError("save_field: custom conformal factors are not serializable");
  }
  w(out, "mode %s %d\n", f.grid.mode == GridMode::Radial1D ? "radial" : "full",
    f.grid.radial_dim);
  w(out, "domain %zu", f.domain.x0.size());
  for (double c : f.domain.x0) w(out, " %.17g", c);
  w(out, " %.17g %.17g %.17g %.17g %.17g\n", f.domain.R, f.domain.t0,
    f.domain.T, f.domain.rho, f.domain.delta);
  w(out, "grid %.17g\n", f.grid.h);
  w(out, "time %.17g %zu\n", f.dt, f.u.size());
  w(out, "M %.17g\n", f.M);
  w(out, "min_u %.17g\n", f.min_u);
  if (f.provenance == Provenance::Analytic)
    w(out, "provenance analytic %s %.17g\n", f.analytic_kind.c_str(),
      f.analytic_param);
  else
    w(out, "provenance fdsolve %s\n", f.scheme.c_str());
  w(out, "id %s\n", f.id.c_str());

  std::size_t count = 0;
  for (std::size_t id = 0; id < f.grid.size(); ++id)
    if (f.grid.cls[id] != NodeClass::Exterior) ++count;
  w(out, "rows %zu\n", count * f.u.size());

  for (std::size_t m = 0; m < f.u.size(); ++m)
    for (int j = 0; j < f.grid.ny; ++j)
      for (int i = 0; i < f.grid.nx; ++i) {
        int id = f.grid.index(i, j);
        if (f.grid.cls[id] == NodeClass::Exterior) continue;
        auto p = f.grid.point(i, j);
        if (p.size() == 1)
          w(out, "%.17g %.17g %.17g\n", f.times[m], p[0], f.u[m][id]);
        else
          w(out, "%.17g %.17g %.17g %.17g\n", f.times[m], p[0], p[1],
            f.u[m][id]);
      }
  if (std::ferror(out)) throw IoError("write failure on '" + path + "'");
}

SolutionField load_field(const std::string& path) {
  FilePtr fp(std::fopen(path.c_str(), "r"));
  if (!fp) throw IoError("cannot open '" + path + "' for reading");
  std::FILE* in = fp.get();

  if (read_line(in) != "gradlab-field 1")
    throw IoError("field file: bad magic");

  SolutionField f;
  auto metric_toks = split(read_line(in));
  if (metric_toks.size() < 3 || metric_toks[0] != "metric")
    throw IoError("field file: bad metric line");
  if (metric_toks[1] == "euclidean")
    f.metric = MetricSpec::euclidean(std::stoi(metric_toks[2]));
  else if (metric_toks[1] == "poincare")
    f.metric = MetricSpec::poincare_disk(parse_d(metric_toks[2]));
  else
    throw IoError("field file: unknown metric kind");

  auto mode_toks = split(read_line(in));
  GridMode mode =
      mode_toks.at(1) == "radial" ? GridMode::Radial1D : GridMode::Full2D;

  auto dom_toks = split(read_line(in));
  if (dom_toks.at(0) != "domain") throw IoError("field file: bad domain line");
  std::size_t dim = std::stoul(dom_toks.at(1));
  DomainSpec dom;
  dom.x0.resize(dim);
  for (std::size_t q = 0; q < dim; ++q) dom.x0[q] = parse_d(dom_toks.at(2 + q));
  dom.R = parse_d(dom_toks.at(2 + dim));
  dom.t0 = parse_d(dom_toks.at(3 + dim));
  dom.T = parse_d(dom_toks.at(4 + dim));
  dom.rho = parse_d(dom_toks.at(5 + dim));
  dom.delta = parse_d(dom_toks.at(6 + dim));
  f.domain = dom;

  double h = parse_d(split(read_line(in)).at(1));
  auto time_toks = split(read_line(in));
  f.dt = parse_d(time_toks.at(1));
  std::size_t nlevels = std::stoul(time_toks.at(2));
  f.M = parse_d(split(read_line(in)).at(1));
  f.min_u = parse_d(split(read_line(in)).at(1));

  auto prov_toks = split(read_line(in));
  if (prov_toks.at(1) == "analytic") {
    f.provenance = Provenance::Analytic;
    f.analytic_kind = prov_toks.at(2);
    f.analytic_param = parse_d(prov_toks.at(3));
  } else {
    f.provenance = Provenance::FDSolve;
    f.scheme = prov_toks.at(2);
  }
  auto id_line = read_line(in);
  f.id = id_line.substr(id_line.find(' ') + 1);

  f.grid = build_lattice(dom, f.metric, h, mode);

  std::size_t rows = std::stoul(split(read_line(in)).at(1));
  f.times.resize(nlevels);
  f.u.assign(nlevels, std::vector<double>(
                          f.grid.size(), std::numeric_limits<double>::quiet_NaN()));

  std::size_t seen = 0;
  for (std::size_t m = 0; m < nlevels; ++m) {
    double t_level = dom.t_start() + m * f.dt;
    f.times[m] = t_level;
    for (int j = 0; j < f.grid.ny; ++j)
      for (int i = 0; i < f.grid.nx; ++i) {
        int id = f.grid.index(i, j);
        if (f.grid.cls[id] == NodeClass::Exterior) continue;
        auto toks = split(read_line(in));
        std::size_t want = f.grid.mode == GridMode::Radial1D ? 3 : 4;
        if (toks.size() != want) throw IoError("field file: malformed row");
        double t = parse_d(toks[0]);
        auto p = f.grid.point(i, j);
        if (std::fabs(t - t_level) > 1e-9 * (1 + std::fabs(t_level)) ||
            std::fabs(parse_d(toks[1]) - p[0]) > 1e-9)
          throw IoError("field file: row order mismatch");
        if (want == 4 && std::fabs(parse_d(toks[2]) - p[1]) > 1e-9)
          throw IoError("field file: row order mismatch");
        f.u[m][id] = parse_d(toks[want - 1]);
        ++seen;
      }
  }
  if (seen != rows) throw IoError("field file: row count mismatch");

  if (f.provenance == Provenance::Analytic) attach_analytic_forms(f);
  return f;
}

}  // namespace gradlab
