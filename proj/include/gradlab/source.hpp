#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "gradlab/domain.hpp"
#include "gradlab/errors.hpp"
#include "gradlab/geometry.hpp"

namespace gradlab {

enum class SourceKind { Zero, Power, SemilinearP, Custom };

// The nonlinearity S(x, t, u) of u_t = Lap u + S.
struct SourceSpec {
  SourceKind kind = SourceKind::Zero;
  double lambda = 0.0;     // Power: S = lambda * u^alpha
  double alpha_exp = 0.0;
  double p = 0.0;          // SemilinearP: S = u^p
  std::string custom_id;
  std::function<double(std::span<const double>, double, double)> S;
  std::function<std::vector<double>(std::span<const double>, double, double)>
      grad_x_S;
  std::function<double(std::span<const double>, double, double)> dS_du;

  static SourceSpec zero();
  static SourceSpec power(double lambda, double alpha_exp);
  static SourceSpec semilinear(double p);
  static SourceSpec custom(std::string id);  // from the registry
  static SourceSpec custom(
      std::string id,
      std::function<double(std::span<const double>, double, double)> S,
      std::function<std::vector<double>(std::span<const double>, double, double)>
          grad_x_S,
      std::function<double(std::span<const double>, double, double)> dS_du);

  bool x_independent() const { return kind != SourceKind::Custom; }
  std::string describe() const;
};

// Registers a custom source under an id usable from experiment configs.
void register_custom_source(
    std::string id,
    std::function<double(std::span<const double>, double, double)> S,
    std::function<std::vector<double>(std::span<const double>, double, double)>
        grad_x_S,
    std::function<double(std::span<const double>, double, double)> dS_du);

double eval_S(const SourceSpec& s, std::span<const double> x, double t,
              double u);
double eval_dS_du(const SourceSpec& s, std::span<const double> x, double t,
                  double u);

enum class AnalysisMethod { ClosedForm, GridSup };

// gamma = sup |grad_x S| / u and mu = sup (k + dS/du - S/u + S/(u(1-v)))_+,
// the two constants feeding the estimate machinery.
struct SourceAnalysis {
  double gamma = 0.0;
  double mu = 0.0;
  AnalysisMethod gamma_method = AnalysisMethod::ClosedForm;
  AnalysisMethod mu_method = AnalysisMethod::ClosedForm;
};

struct GridResolution {
  int space = 17;  // points per spatial axis
  int time = 9;
  int u_samples = 33;  // log-spaced in u
};

// sup over Q_{R,T} x (0, M] of |grad_x S|/u. Returns 0 in closed form for
// x-independent sources; otherwise a grid sup (one refinement included).
// Reports +inf when the sup blows up as u -> 0 on the sampled grid.
double compute_gamma(const SourceSpec& s, const DomainSpec& dom,
                     const MetricSpec& metric, double M,
                     GridResolution res = {}, AnalysisMethod* method = nullptr);

// sup of (k + dS/du - S/u + S/(u(1-v)))_+ with u in [m, M] and
// v in [ln(m/M), 0] treated independently (a conservative upper bound).
// Closed forms cover Zero, the power regimes and S = u^p; everything else
// falls back to the grid sup.
double compute_mu(const SourceSpec& s, const DomainSpec& dom,
                  const MetricSpec& metric, double k, double M, double m,
                  GridResolution res = {}, AnalysisMethod* method = nullptr);

// Grid-sup path only (the oracle the closed forms must dominate).
double compute_mu_gridsup(const SourceSpec& s, const DomainSpec& dom,
                          const MetricSpec& metric, double k, double M,
                          double m, GridResolution res = {});

// Field-coupled exact mode: sup of the same integrand along an actual
// solution field, with v = ln(u/M) tied to u node by node. Never exceeds
// the decoupled rectangle sup; serves tightness studies.
struct SolutionField;
double compute_mu_on_field(const SourceSpec& s, const SolutionField& f,
                           double k);

SourceAnalysis analyze_source(const SourceSpec& s, const DomainSpec& dom,
                              const MetricSpec& metric, double k, double M,
                              double m, GridResolution res = {});

// theta(p): the u-value maximizing p*u^{p-1} over (0, M], per regime.
double theta_for_p(double p, double M, double m);

}  // namespace gradlab
