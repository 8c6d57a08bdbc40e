// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <optional>
#include <ostream>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "eot/batch_engine.hpp"
#include "eot/cli.hpp"
#include "eot/instances.hpp"
#include "eot/oracle.hpp"
#include "eot/ot_core.hpp"

namespace eot::cli {

namespace {

using nlohmann::json;

constexpr int kSchemaVersion = 1;
constexpr double kGradcheckRtol = 1e-3;
constexpr double kGradcheckAtol = 1e-5;
// Random gradcheck/bench lanes keep every bin above floor / d.
constexpr double kRandomMassFloor = 0.01;

bool is_json_path(const std::string& path) {
  return path.size() >= 5 && path.compare(path.size() - 5, 5, ".json") == 0;
}

HistogramBatch to_batch(const Matrix& rows, const std::string& source) {
  for (std::size_t b = 0; b < rows.rows(); ++b) {
    const std::string at = source + ": row " + std::to_string(b + 1);
    try {
      validate_histogram({rows.row(b).begin(), rows.row(b).end()});
    } catch (const NegativeMass& e) {
      throw InputError(at + ", column " + std::to_string(e.index() + 1) + ": negative mass");
    } catch (const NonFinite& e) {
      throw InputError(at + ", column " + std::to_string(e.index() + 1) + ": non-finite mass");
    } catch (const Error& e) {
      throw InputError(at + ": " + e.what());
    }
  }
  return HistogramBatch::validate(rows);
}

CostMatrix to_cost(Matrix m, const std::string& source) {
  try {
    return CostMatrix(std::move(m));
  } catch (const Error& e) {
    throw InputError(source + ": " + e.what());
  }
}

struct Instance {
  HistogramBatch mu;
  HistogramBatch nu;
  CostMatrix cost;
};

Instance random_instance(const RunSpec& spec, double floor) {
  const std::size_t d = *spec.random_dim;
  if (d == 0) throw InputError("--random: dimension must be positive");
  if (!spec.cost_path.empty()) throw InputError("--cost cannot be combined with --random");
  std::mt19937_64 rng(spec.seed);
  std::vector<Histogram> mu;
  std::vector<Histogram> nu;
  for (std::size_t b = 0; b < spec.batch; ++b) {
    mu.push_back(random_histogram(d, rng, floor));
    nu.push_back(random_histogram(d, rng, floor));
  }
  return {HistogramBatch::from(mu), HistogramBatch::from(nu),
          grid_metric_cost(d, d, spec.grid_metric.value_or(2.0))};
}

Instance file_instance(const RunSpec& spec) {
  if (spec.mu_path.empty()) throw InputError("--mu is required (or --random <d>)");

  std::optional<Matrix> mu;
  std::optional<Matrix> nu;
  std::vector<std::pair<std::string, Matrix>> costs;
  std::string nu_source;

  if (is_json_path(spec.mu_path)) {
    auto doc = read_json_document(spec.mu_path);
    if (!doc.mu) throw InputError(spec.mu_path + ": missing \"mu\"");
    mu = std::move(doc.mu);
    if (doc.nu) {
      nu = std::move(doc.nu);
      nu_source = spec.mu_path;
    }
    if (doc.cost) costs.emplace_back(spec.mu_path, std::move(*doc.cost));
  } else {
    mu = read_csv_matrix(spec.mu_path);
  }

  if (!spec.nu_path.empty()) {
    if (nu) throw InputError("--nu given but " + spec.mu_path + " already contains \"nu\"");
    nu_source = spec.nu_path;
    if (is_json_path(spec.nu_path)) {
      auto doc = read_json_document(spec.nu_path);
      if (!doc.nu) throw InputError(spec.nu_path + ": missing \"nu\"");
      nu = std::move(doc.nu);
      if (doc.cost) costs.emplace_back(spec.nu_path, std::move(*doc.cost));
    } else {
      nu = read_csv_matrix(spec.nu_path);
    }
  }
  if (!nu) throw InputError("--nu is required unless the --mu document contains \"nu\"");

  if (!spec.cost_path.empty()) {
    if (is_json_path(spec.cost_path)) {
      auto doc = read_json_document(spec.cost_path);
      if (!doc.cost) throw InputError(spec.cost_path + ": missing \"cost\"");
      costs.emplace_back(spec.cost_path, std::move(*doc.cost));
    } else {
      costs.emplace_back(spec.cost_path, read_csv_matrix(spec.cost_path));
    }
  }
  const std::size_t sources = costs.size() + (spec.grid_metric ? 1 : 0);
  if (sources != 1) {
    throw InputError("exactly one cost source is required (--cost, --grid-metric or a \"cost\" "
                     "field); got " + std::to_string(sources));
  }

  if (mu->rows() != nu->rows()) {
    throw InputError("row count mismatch: " + spec.mu_path + " has " +
                     std::to_string(mu->rows()) + " histograms, " + nu_source + " has " +
                     std::to_string(nu->rows()));
  }

  auto mu_batch = to_batch(*mu, spec.mu_path);
  auto nu_batch = to_batch(*nu, nu_source);
  std::optional<CostMatrix> cost;
  std::string cost_source;
  if (spec.grid_metric) {
    const double p = *spec.grid_metric;
    if (p != 1.0 && p != 2.0) throw InputError("--grid-metric: exponent must be 1 or 2");
    if (mu_batch.dim() != nu_batch.dim()) {
      throw InputError("--grid-metric needs equal histogram dimensions, got " +
                       std::to_string(mu_batch.dim()) + " and " + std::to_string(nu_batch.dim()));
    }
    cost = grid_metric_cost(mu_batch.dim(), nu_batch.dim(), p);
    cost_source = "--grid-metric";
  } else {
    cost_source = costs.front().first;
    cost = to_cost(std::move(costs.front().second), cost_source);
  }
  if (cost->rows() != mu_batch.dim() || cost->cols() != nu_batch.dim()) {
    throw InputError(cost_source + ": cost matrix is " + std::to_string(cost->rows()) + "x" +
                     std::to_string(cost->cols()) + " but histograms have dimensions " +
                     std::to_string(mu_batch.dim()) + " and " + std::to_string(nu_batch.dim()));
  }
  return {std::move(mu_batch), std::move(nu_batch), std::move(*cost)};
}

SinkhornConfig solver_config(const RunSpec& spec, double default_tolerance) {
  SinkhornConfig config;
  config.lambda = spec.lambda;
  config.max_iters = spec.max_iters;
  config.tolerance = spec.tolerance.value_or(default_tolerance);
  config.check_interval = spec.check_interval;
  try {
    config.validate();
  } catch (const Error& e) {
    throw InputError(std::string("invalid solver flags: ") + e.what());
  }
  return config;
}

void emit(const json& report, const RunSpec& spec, std::ostream& out) {
  if (spec.out_path.empty()) {
    out << report.dump(2) << '\n';
    return;
  }
  std::ofstream file(spec.out_path);
  if (!file) throw InputError("--out: cannot write " + spec.out_path);
  file << report.dump(2) << '\n';
}

json matrix_json(const Matrix& m) { return m.to_rows(); }

// Quantile by linear interpolation over sorted samples.
double quantile(std::vector<double> xs, double q) {
  std::sort(xs.begin(), xs.end());
  const double pos = q * static_cast<double>(xs.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, xs.size() - 1);
  return xs[lo] + (pos - static_cast<double>(lo)) * (xs[hi] - xs[lo]);
}

json timing_json(const std::vector<double>& seconds) {
  return {{"median_s", quantile(seconds, 0.5)},
          {"iqr_s", quantile(seconds, 0.75) - quantile(seconds, 0.25)}};
}

json errors_json(double max_abs, double max_rel) {
  json j{{"max_abs", max_abs}};
  if (std::isfinite(max_rel)) {
    j["max_rel"] = max_rel;
  } else {
    j["max_rel"] = nullptr;
  }
  return j;
}

}  // namespace

int cmd_compute(const RunSpec& spec, std::ostream& out, std::ostream& /*err*/) {
  const SinkhornConfig solver = solver_config(spec, 1e-9);
  Instance inst = spec.random_dim ? random_instance(spec, 0.0) : file_instance(spec);

  BatchConfig config{solver, ReductionOptions{spec.workers, 64}};
  const BatchLossResult result = batch_forward(inst.mu, inst.nu, inst.cost, config);

  json report{{"schema", kSchemaVersion},
              {"command", "compute"},
              {"lambda", solver.lambda},
              {"max_iters", solver.max_iters},
              {"tolerance", solver.tolerance},
              {"batch", result.batch_size()},
              {"d1", inst.cost.rows()},
              {"d2", inst.cost.cols()},
              {"iterations_run", result.iterations_run},
              {"converged", result.converged},
              {"cost_e0", result.cost_e0},
              {"residuals", result.residuals}};

  if (spec.emit_plan) {
    json plans = json::array();
    for (std::size_t b = 0; b < result.batch_size(); ++b)
      plans.push_back(matrix_json(transport_plan(result.lane_potentials(b), inst.cost).p));
    report["plans"] = std::move(plans);
  }
  if (spec.emit_gradients) {
    const std::vector<double> upstream(result.batch_size(), 1.0);
    BatchGradients grads;
    try {
      grads = batch_backward(result, upstream);
    } catch (const ZeroMassGradient& e) {
      throw InputError(std::string("--emit-gradients: ") + e.what());
    }
    report["gradients"] = {{"mu", matrix_json(grads.grad_mu)},
                           {"nu", matrix_json(grads.grad_nu)}};
  }
  emit(report, spec, out);
  return solver.tolerance > 0.0 && !result.converged ? kNotConverged : kOk;
}

int cmd_gradcheck(const RunSpec& spec, std::ostream& out, std::ostream& /*err*/) {
  const SinkhornConfig solver = solver_config(spec, 0.0);
  oracle::FdTarget target;
  if (spec.fd_target == "regularized") {
    target = oracle::FdTarget::kRegularized;
  } else if (spec.fd_target == "primal") {
    target = oracle::FdTarget::kPrimal;
  } else {
    throw InputError("--fd-target must be 'regularized' or 'primal'");
  }
  if (!(spec.eps > 0.0)) throw InputError("--eps must be positive");

  RunSpec single = spec;
  single.batch = 1;
  Instance inst = spec.random_dim ? random_instance(single, kRandomMassFloor) : file_instance(spec);
  if (inst.mu.batch_size() != 1) {
    throw InputError("gradcheck takes exactly one histogram pair, got " +
                     std::to_string(inst.mu.batch_size()));
  }
  const Histogram mu = inst.mu.lane(0);
  const Histogram nu = inst.nu.lane(0);

  const SinkhornResult solved = run_sinkhorn(mu, nu, inst.cost, solver);
  GradientPair analytic;
  GradientPair numeric;
  try {
    analytic = gradients(solved.potentials);
    numeric = oracle::finite_difference_gradient(mu, nu, inst.cost, solver, spec.eps, target,
                                                 resolve_workers(spec.workers));
  } catch (const ZeroMassGradient& e) {
    throw InputError(e.what());
  } catch (const MassTooSmall& e) {
    throw InputError(e.what());
  }
  const auto report = oracle::compare_gradients(analytic, numeric, kGradcheckRtol, kGradcheckAtol);

  emit(json{{"schema", kSchemaVersion},
            {"command", "gradcheck"},
            {"d1", mu.size()},
            {"d2", nu.size()},
            {"lambda", solver.lambda},
            {"max_iters", solver.max_iters},
            {"iterations_run", solved.iterations_run},
            {"final_residual", solved.final_residual},
            {"fd_target", spec.fd_target},
            {"eps", spec.eps},
            {"rtol", kGradcheckRtol},
            {"atol", kGradcheckAtol},
            {"mu", errors_json(report.max_abs_mu, report.max_rel_mu)},
            {"nu", errors_json(report.max_abs_nu, report.max_rel_nu)},
            {"passed", report.passed}},
       spec, out);
  return report.passed ? kOk : kGradcheckFailed;
}

int cmd_bench(const RunSpec& spec, std::ostream& out, std::ostream& /*err*/) {
  if (spec.warmup < 5) throw InputError("--warmup must be at least 5");
  if (spec.reps < 20) throw InputError("--reps must be at least 20");
  const SinkhornConfig solver = solver_config(spec, 0.0);
  RunSpec sized = spec;
  if (!sized.random_dim) sized.random_dim = 100;
  const Instance inst = random_instance(sized, kRandomMassFloor);
  const BatchConfig config{solver, ReductionOptions{spec.workers, 64}};
  const std::vector<double> upstream(inst.mu.batch_size(), 1.0);

  using clock = std::chrono::steady_clock;
  std::vector<double> forward_s;
  std::vector<double> backward_s;
  BatchLossResult result;
  for (int rep = 0; rep < spec.warmup + spec.reps; ++rep) {
    const auto t0 = clock::now();
    result = batch_forward(inst.mu, inst.nu, inst.cost, config);
    const auto t1 = clock::now();
    [[maybe_unused]] const auto grads = batch_backward(result, upstream);
    const auto t2 = clock::now();
    if (rep < spec.warmup) continue;
    forward_s.push_back(std::chrono::duration<double>(t1 - t0).count());
    backward_s.push_back(std::chrono::duration<double>(t2 - t1).count());
  }
  const json forward = timing_json(forward_s);
  const json backward = timing_json(backward_s);
  emit(json{{"schema", kSchemaVersion},
            {"command", "bench"},
            {"batch", inst.mu.batch_size()},
            {"d1", inst.cost.rows()},
            {"d2", inst.cost.cols()},
            {"iterations", result.iterations_run},
            {"lambda", solver.lambda},
            {"workers", resolve_workers(spec.workers)},
            {"warmup", spec.warmup},
            {"reps", spec.reps},
            {"cost_e0", result.cost_e0},
            {"forward", forward},
            {"backward", backward},
            {"backward_forward_ratio",
             backward["median_s"].get<double>() / forward["median_s"].get<double>()}},
       spec, out);
  return kOk;
}

}  // namespace eot::cli
