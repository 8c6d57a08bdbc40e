// SPDX-License-Identifier: Apache-2.0

#include "eot/batch_engine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <thread>

#include "eot/errors.hpp"
#include "eot/logsumexp.hpp"
#include "log_kernel.hpp"

namespace eot {

namespace {

std::string shape(const Matrix& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

// out(b, k) = offset(b, k) - lse_m(kernel(k, m) + potential(b, m)), or just the
// lse when offset is null. Cells whose offset is -inf are -inf without reducing.
void reduce_cells(const Matrix& kernel, const Matrix& potential, const Matrix* offset,
                  Matrix& out, const ReductionOptions& options) {
  const std::size_t batch = potential.rows();
  const std::size_t n_out = kernel.rows();
  const std::size_t n_in = kernel.cols();
  const std::size_t chunk = std::max<std::size_t>(1, options.chunk_size);
  const auto cells = static_cast<long long>(batch * n_out);
  const int workers = resolve_workers(options.workers);

#pragma omp parallel for num_threads(workers) schedule(static)
  for (long long cell = 0; cell < cells; ++cell) {
    const auto b = static_cast<std::size_t>(cell) / n_out;
    const auto k = static_cast<std::size_t>(cell) % n_out;
    if (offset != nullptr && (*offset)(b, k) == kNegInf) {
      out(b, k) = kNegInf;
      continue;
    }
    const double* krow = kernel.row(k).data();
    const double* prow = potential.row(b).data();
    OnlineLse total;
    for (std::size_t start = 0; start < n_in; start += chunk) {
      const std::size_t stop = std::min(n_in, start + chunk);
      OnlineLse part;
      for (std::size_t m = start; m < stop; ++m) part.push(krow[m] + prow[m]);
      total = OnlineLse::merge(total, part);
    }
    const double lse = total.finalise();
    out(b, k) = offset != nullptr ? (*offset)(b, k) - lse : lse;
  }
}

void require_valid(const Matrix& m, const char* what) {
  for (double x : m.data()) {
    if (std::isnan(x) || x == std::numeric_limits<double>::infinity()) {
      throw NaNProduced(std::string(what) + " became non-finite");
    }
  }
}

Matrix log_of(const Matrix& mass) {
  Matrix out(mass.rows(), mass.cols());
  for (std::size_t k = 0; k < mass.data().size(); ++k) {
    const double m = mass.data()[k];
    out.data()[k] = m > 0.0 ? std::log(m) : kNegInf;
  }
  return out;
}

// Per-lane max of |P 1 - mu| and |P^T 1 - nu|. lse_rows / lse_cols are scratch.
void lane_residuals(const detail::LogKernel& kernel, const Matrix& log_u, const Matrix& log_v,
                    const Matrix& mu, const Matrix& nu, Matrix& lse_rows, Matrix& lse_cols,
                    std::vector<double>& residuals, const ReductionOptions& options) {
  reduce_cells(kernel.by_row, log_v, nullptr, lse_rows, options);
  reduce_cells(kernel.by_col, log_u, nullptr, lse_cols, options);
  for (std::size_t b = 0; b < log_u.rows(); ++b) {
    double r = 0.0;
    for (std::size_t i = 0; i < log_u.cols(); ++i) {
      const double sum = log_u(b, i) == kNegInf ? 0.0 : std::exp(log_u(b, i) + lse_rows(b, i));
      r = std::max(r, std::abs(sum - mu(b, i)));
    }
    for (std::size_t j = 0; j < log_v.cols(); ++j) {
      const double sum = log_v(b, j) == kNegInf ? 0.0 : std::exp(log_v(b, j) + lse_cols(b, j));
      r = std::max(r, std::abs(sum - nu(b, j)));
    }
    residuals[b] = r;
  }
}

}  // namespace

HistogramBatch HistogramBatch::validate(Matrix mass) {
  for (std::size_t b = 0; b < mass.rows(); ++b) {
    try {
      validate_histogram({mass.row(b).begin(), mass.row(b).end()});
    } catch (const Error& e) {
      throw InvalidLane(b, e.what());
    }
  }
  return HistogramBatch(std::move(mass));
}

HistogramBatch HistogramBatch::from(std::span<const Histogram> lanes) {
  if (lanes.empty()) return HistogramBatch(Matrix());
  Matrix mass(lanes.size(), lanes.front().size());
  for (std::size_t b = 0; b < lanes.size(); ++b) {
    if (lanes[b].size() != mass.cols()) {
      throw ShapeMismatch("lane " + std::to_string(b) + " has dimension " +
                          std::to_string(lanes[b].size()) + ", expected " +
                          std::to_string(mass.cols()));
    }
    std::copy(lanes[b].mass().begin(), lanes[b].mass().end(), mass.row(b).begin());
  }
  return HistogramBatch(std::move(mass));
}

Histogram HistogramBatch::lane(std::size_t b) const {
  return validate_histogram({mass_.row(b).begin(), mass_.row(b).end()});
}

int resolve_workers(int requested) noexcept {
  if (requested > 0) return requested;
  return static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
}

Matrix fused_log_reduction(const Matrix& log_u, const CostMatrix& c, double lambda,
                           const Matrix& log_nu, const ReductionOptions& options) {
  if (log_u.cols() != c.rows() || log_nu.cols() != c.cols() || log_u.rows() != log_nu.rows()) {
    throw ShapeMismatch("fused reduction: log_u " + shape(log_u) + ", cost " +
                        shape(c.matrix()) + ", log_nu " + shape(log_nu));
  }
  if (!(lambda > 0.0)) throw InvalidConfig("lambda must be positive");
  const auto kernel = detail::LogKernel::gibbs(c, lambda);
  Matrix out(log_nu.rows(), log_nu.cols());
  reduce_cells(kernel.by_col, log_u, &log_nu, out, options);
  require_valid(out, "log_v");
  return out;
}

Matrix fused_log_reduction_transposed(const Matrix& log_v, const CostMatrix& c, double lambda,
                                      const Matrix& log_mu, const ReductionOptions& options) {
  if (log_v.cols() != c.cols() || log_mu.cols() != c.rows() || log_v.rows() != log_mu.rows()) {
    throw ShapeMismatch("fused reduction: log_v " + shape(log_v) + ", cost " +
                        shape(c.matrix()) + ", log_mu " + shape(log_mu));
  }
  if (!(lambda > 0.0)) throw InvalidConfig("lambda must be positive");
  const auto kernel = detail::LogKernel::gibbs(c, lambda);
  Matrix out(log_mu.rows(), log_mu.cols());
  reduce_cells(kernel.by_row, log_v, &log_mu, out, options);
  require_valid(out, "log_u");
  return out;
}

DualPotentials BatchLossResult::lane_potentials(std::size_t b) const {
  return {{log_u.row(b).begin(), log_u.row(b).end()},
          {log_v.row(b).begin(), log_v.row(b).end()},
          lambda};
}

BatchLossResult batch_forward(const HistogramBatch& mu, const HistogramBatch& nu,
                              const CostMatrix& c, const BatchConfig& config) {
  const SinkhornConfig& solver = config.solver;
  solver.validate();
  if (mu.batch_size() != nu.batch_size()) {
    throw ShapeMismatch("batch sizes differ: mu has " + std::to_string(mu.batch_size()) +
                        " lanes, nu has " + std::to_string(nu.batch_size()));
  }
  BatchLossResult result;
  result.lambda = solver.lambda;
  const std::size_t batch = mu.batch_size();
  if (batch == 0) {
    result.converged = true;
    return result;
  }
  if (mu.dim() != c.rows() || nu.dim() != c.cols()) {
    throw ShapeMismatch("histogram dimensions " + std::to_string(mu.dim()) + " and " +
                        std::to_string(nu.dim()) + " do not match cost matrix " +
                        shape(c.matrix()));
  }

  const auto kernel = detail::LogKernel::gibbs(c, solver.lambda);
  const Matrix log_mu = log_of(mu.mass());
  const Matrix log_nu = log_of(nu.mass());

  result.log_u = Matrix(batch, c.rows());
  result.log_v = Matrix(batch, c.cols());
  for (std::size_t k = 0; k < log_mu.data().size(); ++k)
    result.log_u.data()[k] = log_mu.data()[k] == kNegInf ? kNegInf : 0.0;

  Matrix lse_rows(batch, c.rows());
  Matrix lse_cols(batch, c.cols());
  result.residuals.assign(batch, std::numeric_limits<double>::infinity());

  for (int k = 1; k <= solver.max_iters; ++k) {
    reduce_cells(kernel.by_col, result.log_u, &log_nu, result.log_v, config.reduction);
    reduce_cells(kernel.by_row, result.log_v, &log_mu, result.log_u, config.reduction);
    result.iterations_run = k;

    const bool scheduled = solver.tolerance > 0.0 && k % solver.check_interval == 0;
    if (scheduled || k == solver.max_iters) {
      lane_residuals(kernel, result.log_u, result.log_v, mu.mass(), nu.mass(), lse_rows,
                     lse_cols, result.residuals, config.reduction);
      const double worst = *std::max_element(result.residuals.begin(), result.residuals.end());
      if (worst <= solver.tolerance) {
        result.converged = true;
        break;
      }
    }
  }
  require_valid(result.log_v, "log_v");
  require_valid(result.log_u, "log_u");

  // E0 per lane: exp(lse_j(log v_j + lse_i(-c_ij / lambda + log c_ij + log u_i))).
  const auto weighted = detail::LogKernel::weighted_cost(c, solver.lambda);
  reduce_cells(weighted.by_col, result.log_u, nullptr, lse_cols, config.reduction);
  result.cost_e0.resize(batch);
  for (std::size_t b = 0; b < batch; ++b) {
    OnlineLse acc;
    for (std::size_t j = 0; j < c.cols(); ++j) acc.push(result.log_v(b, j) + lse_cols(b, j));
    result.cost_e0[b] = std::exp(acc.finalise());
  }
  return result;
}

BatchGradients batch_backward(const BatchLossResult& result, std::span<const double> upstream) {
  const std::size_t batch = result.batch_size();
  if (upstream.size() != batch) {
    throw ShapeMismatch("upstream has " + std::to_string(upstream.size()) +
                        " entries for a batch of " + std::to_string(batch));
  }
  BatchGradients out{Matrix(batch, result.log_u.cols()), Matrix(batch, result.log_v.cols())};
  auto project = [&](const Matrix& log_scaling, Matrix& grad, std::size_t b) {
    const auto row = log_scaling.row(b);
    double mean = 0.0;
    for (std::size_t k = 0; k < row.size(); ++k) {
      if (row[k] == kNegInf) throw ZeroMassGradient(b, k);
      mean += row[k];
    }
    mean /= static_cast<double>(row.size());
    const double scale = upstream[b] * result.lambda;
    for (std::size_t k = 0; k < row.size(); ++k) grad(b, k) = scale * (row[k] - mean);
  };
  for (std::size_t b = 0; b < batch; ++b) {
    project(result.log_u, out.grad_mu, b);
    project(result.log_v, out.grad_nu, b);
  }
  return out;
}

}  // namespace eot
