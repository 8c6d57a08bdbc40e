// SPDX-License-Identifier: Apache-2.0

#include <ostream>
#include <string>

#include <CLI11.hpp>

#include "eot/cli.hpp"

namespace eot::cli {

namespace {

void add_solver_flags(CLI::App& sub, RunSpec& spec) {
  sub.add_option("--lambda", spec.lambda, "Entropy regularisation weight")->capture_default_str();
  sub.add_option("--max-iters", spec.max_iters, "Iteration cap")->capture_default_str();
  sub.add_option("--tol", spec.tolerance, "L-inf marginal residual target; 0 runs every iteration");
  sub.add_option("--check-interval", spec.check_interval, "Iterations between residual checks")
      ->capture_default_str();
  sub.add_option("--workers", spec.workers, "Worker threads (0 = hardware)")->capture_default_str();
  sub.add_option("--out", spec.out_path, "Write the JSON report here instead of stdout");
}

void add_instance_flags(CLI::App& sub, RunSpec& spec) {
  sub.add_option("--mu", spec.mu_path, "Source histograms (CSV rows or JSON document)");
  sub.add_option("--nu", spec.nu_path, "Target histograms (CSV rows or JSON document)");
  sub.add_option("--cost", spec.cost_path, "Cost matrix (CSV rows or JSON document)");
  sub.add_option("--grid-metric", spec.grid_metric, "Generate c_ij = |i-j|^p / (d-1)^p");
  sub.add_option("--random", spec.random_dim, "Generate seeded random histograms of this size");
  sub.add_option("--seed", spec.seed, "Seed for --random")->capture_default_str();
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  RunSpec spec;
  CLI::App app{"Batched entropic optimal transport loss"};
  app.require_subcommand(1);

  auto* compute = app.add_subcommand("compute", "Per-lane transport cost of histogram batches");
  add_solver_flags(*compute, spec);
  add_instance_flags(*compute, spec);
  compute->add_option("--batch", spec.batch, "Lanes generated by --random")->capture_default_str();
  compute->add_flag("--emit-plan", spec.emit_plan, "Include transport plans");
  compute->add_flag("--emit-gradients", spec.emit_gradients, "Include gradients");

  auto* gradcheck = app.add_subcommand("gradcheck", "Analytic vs finite-difference gradients");
  add_solver_flags(*gradcheck, spec);
  add_instance_flags(*gradcheck, spec);
  gradcheck->add_option("--eps", spec.eps, "Finite-difference step")->capture_default_str();
  gradcheck->add_option("--fd-target", spec.fd_target, "regularized | primal")
      ->capture_default_str();

  auto* bench = app.add_subcommand("bench", "Time forward and backward passes");
  add_solver_flags(*bench, spec);
  bench->add_option("--batch", spec.batch, "Batch size")->capture_default_str();
  bench->add_option("--random", spec.random_dim, "Histogram size (default 100)");
  bench->add_option("--grid-metric", spec.grid_metric, "Ground metric exponent (default 2)");
  bench->add_option("--seed", spec.seed, "Instance seed")->capture_default_str();
  bench->add_option("--warmup", spec.warmup, "Untimed repetitions (>= 5)")->capture_default_str();
  bench->add_option("--reps", spec.reps, "Timed repetitions (>= 20)")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kValidation;
  }

  try {
    if (compute->parsed()) {
      spec.subcommand = "compute";
      return cmd_compute(spec, out, err);
    }
    if (gradcheck->parsed()) {
      spec.subcommand = "gradcheck";
      return cmd_gradcheck(spec, out, err);
    }
    spec.subcommand = "bench";
    return cmd_bench(spec, out, err);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kValidation;
  }
}

}  // namespace eot::cli
