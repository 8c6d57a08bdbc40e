// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>

#include "eot/errors.hpp"
#include "eot/matrix.hpp"

namespace eot::cli {

enum ExitCode : int {
  kOk = 0,
  kValidation = 1,
  kNotConverged = 2,
  kGradcheckFailed = 3,
};

struct RunSpec {
  std::string subcommand;
  double lambda = 0.05;
  int max_iters = 1000;
  std::optional<double> tolerance;  // per-command default when unset
  int check_interval = 10;
  int workers = 0;
  std::optional<double> grid_metric;
  std::string cost_path;
  std::string mu_path;
  std::string nu_path;
  std::string out_path;
  bool emit_plan = false;
  bool emit_gradients = false;
  std::optional<std::size_t> random_dim;
  std::size_t batch = 1;
  std::uint64_t seed = 0;
  // gradcheck
  double eps = 1e-6;
  std::string fd_target = "regularized";
  // bench
  int warmup = 5;
  int reps = 20;
};

/// Malformed or invalid input; what() names the file (or flag) and position.
class InputError : public Error {
 public:
  using Error::Error;
};

/// Reads a comma-separated matrix of decimals, one row per line. Blank lines are skipped.
Matrix read_csv_matrix(const std::string& path);

struct InputDocument {
  std::optional<Matrix> mu;
  std::optional<Matrix> nu;
  std::optional<Matrix> cost;
};

/// Reads {"mu": [[...]], "nu": [[...]], "cost": [[...]]}; every field optional.
InputDocument read_json_document(const std::string& path);

int cmd_compute(const RunSpec& spec, std::ostream& out, std::ostream& err);
int cmd_gradcheck(const RunSpec& spec, std::ostream& out, std::ostream& err);
int cmd_bench(const RunSpec& spec, std::ostream& out, std::ostream& err);

/// Parses argv and dispatches. Reports are written to --out or to `out`.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace eot::cli
