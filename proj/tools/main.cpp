#include <cstdio>
#include <string>

#include "CLI11.hpp"
#include "gradlab/config.hpp"
#include "gradlab/kernels.hpp"
#include "gradlab/runner.hpp"

namespace {

struct CommonArgs {
  std::string config_path;
  std::string out_dir = "out";
  int threads = 1;
  int refine = 0;
};

void add_common(CLI::App* sub, CommonArgs* args) {
  sub->add_option("--config", args->config_path, "experiment config file")
      ->required();
  sub->add_option("--out", args->out_dir, "output directory (default: out)");
  sub->add_option("--threads", args->threads, "worker threads for the checks")
      ->check(CLI::PositiveNumber);
  sub->add_option("--refine", args->refine,
                  "dyadic refinement study levels (halve h and dt N times)")
      ->check(CLI::NonNegativeNumber);
}

int dispatch(const CommonArgs& args,
             int (*fn)(const gradlab::Config&, const gradlab::RunOptions&),
             bool checks_only = false, bool calibrations_only = false) {
  gradlab::Config cfg;
  try {
    cfg = gradlab::Config::parse_file(args.config_path);
  } catch (const gradlab::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return gradlab::kExitConfig;
  }
  gradlab::RunOptions opt;
  opt.out_dir = args.out_dir;
  opt.threads = args.threads;
  opt.refine = args.refine;
  opt.checks_only = checks_only;
  opt.calibrations_only = calibrations_only;
  return fn(cfg, opt);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "gradlab - numerical laboratory for global logarithmic gradient "
      "estimates of nonlinear parabolic equations.\n"
      "Per-node CSV columns: x1[,x2],t,lhs,rhs,region.\n"
      "Cutoff CSV columns: r,psi,d1,d2,ratio (+ summary comment line).\n"
      "Exit codes: 0 ok, 1 check violation, 2 config error, 3 build "
      "failure, 4 I/O error."};
  app.require_subcommand(1);

  CommonArgs run_args, verify_args, cal_args, cmp_args, solve_args, cut_args;
  auto* run = app.add_subcommand(
      "run", "build the solution, run every check, write reports");
  add_common(run, &run_args);
  auto* verify = app.add_subcommand(
      "verify", "run only the [check.*] sections against the solution");
  add_common(verify, &verify_args);
  auto* calibrate = app.add_subcommand(
      "calibrate", "run only the checks with C = \"calibrate\"");
  add_common(calibrate, &cal_args);
  auto* compare = app.add_subcommand(
      "compare", "evaluate the [compare] estimate table");
  add_common(compare, &cmp_args);
  auto* solve = app.add_subcommand(
      "solve", "build the solution field and persist it");
  add_common(solve, &solve_args);
  auto* cutoff = app.add_subcommand(
      "cutoff-check", "emit the cut-off profile CSV and measured constants");
  add_common(cutoff, &cut_args);

  CLI11_PARSE(app, argc, argv);

  if (run->parsed()) return dispatch(run_args, gradlab::run_experiment);
  if (verify->parsed())
    return dispatch(verify_args, gradlab::run_experiment, true);
  if (calibrate->parsed())
    return dispatch(cal_args, gradlab::run_experiment, false, true);
  if (compare->parsed()) return dispatch(cmp_args, gradlab::run_compare);
  if (solve->parsed()) return dispatch(solve_args, gradlab::run_solve);
  if (cutoff->parsed()) return dispatch(cut_args, gradlab::run_cutoff_check);
  return gradlab::kExitConfig;
}
