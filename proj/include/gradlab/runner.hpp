#pragma once

#include <string>

#include "gradlab/config.hpp"
#include "gradlab/cutoff.hpp"
#include "gradlab/solver.hpp"
#include "gradlab/verify.hpp"

namespace gradlab {

// Exit codes shared by the CLI: 0 all checks pass, 1 check violation,
// 2 config error, 3 build failure, 4 I/O failure.
enum ExitCode {
  kExitOk = 0,
  kExitViolation = 1,
  kExitConfig = 2,
  kExitBuild = 3,
  kExitIo = 4,
};

struct RunOptions {
  std::string out_dir = "out";
  int threads = 1;
  int refine = 0;        // extra dyadic refinement levels for the study mode
  bool checks_only = false;        // `verify`
  bool calibrations_only = false;  // `calibrate`
};

// Declarative experiment: build metric/domain/source/solution from the
// config, run the [check.*] sections in lexicographic order, write one
// report per check plus a summary embedding the normalized config.
// Timestamps go to a sidecar so identical configs produce byte-identical
// payloads.
int run_experiment(const Config& cfg, const RunOptions& opt);

int run_cutoff_check(const Config& cfg, const RunOptions& opt);
int run_solve(const Config& cfg, const RunOptions& opt);
int run_compare(const Config& cfg, const RunOptions& opt);

// Config -> domain objects (invariants re-validated with ConfigError
// diagnostics naming the section and key).
MetricSpec metric_from_config(const Config& cfg);
DomainSpec domain_from_config(const Config& cfg);
SourceSpec source_from_config(const Config& cfg);
SolutionField solution_from_config(const Config& cfg, double grid_scale = 1.0);
SpaceTimeSampler sampler_from_id(const std::string& id, const DomainSpec& dom);
CutoffParams cutoff_from_config(const Config& cfg);

}  // namespace gradlab
