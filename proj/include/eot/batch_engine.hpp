// SPDX-License-Identifier: Apache-2.0

// Batched log-domain Sinkhorn over many histogram pairs that share one cost
// matrix.
//
// Every update has the shape of a matrix product: out[b][j] combines row b of
// the potentials with column j of the log-kernel through a logsumexp instead
// of a dot product. Cells (b, j) are independent and are spread over workers.
// Each cell's reduction is cut into fixed-size contiguous chunks, each chunk is
// folded with an OnlineLse, and the chunk accumulators are merged in ascending
// order. Chunk boundaries do not depend on the worker count, so results are
// identical for any number of workers.
//
// Only O(B * (d1 + d2)) state is kept per solve; no B x d1 x d2 tensor exists.

#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "eot/matrix.hpp"
#include "eot/types.hpp"

namespace eot {

/// B histograms of equal dimension, one per row.
class HistogramBatch {
 public:
  /// Validates every row as a Histogram; throws InvalidLane naming the first bad row.
  static HistogramBatch validate(Matrix mass);
  static HistogramBatch from(std::span<const Histogram> lanes);

  std::size_t batch_size() const noexcept { return mass_.rows(); }
  std::size_t dim() const noexcept { return mass_.cols(); }
  const Matrix& mass() const noexcept { return mass_; }
  Histogram lane(std::size_t b) const;

 private:
  explicit HistogramBatch(Matrix mass) : mass_(std::move(mass)) {}
  Matrix mass_;
};

struct ReductionOptions {
  /// 0 selects the hardware parallelism.
  int workers = 0;
  /// Length of each contiguous slice of the inner reduction.
  std::size_t chunk_size = 64;
};

struct BatchConfig {
  SinkhornConfig solver;
  ReductionOptions reduction;
};

int resolve_workers(int requested) noexcept;

/// out[b][j] = log_nu[b][j] - lse_i(-c_ij / lambda + log_u[b][i]).
/// Shapes: log_u is B x d1, log_nu is B x d2, result is B x d2.
Matrix fused_log_reduction(const Matrix& log_u, const CostMatrix& c, double lambda,
                           const Matrix& log_nu, const ReductionOptions& options = {});

/// The same reduction over j: out[b][i] = log_mu[b][i] - lse_j(-c_ij / lambda + log_v[b][j]).
Matrix fused_log_reduction_transposed(const Matrix& log_v, const CostMatrix& c, double lambda,
                                      const Matrix& log_mu, const ReductionOptions& options = {});

struct BatchLossResult {
  std::vector<double> cost_e0;
  Matrix log_u;  // B x d1
  Matrix log_v;  // B x d2
  double lambda = 1.0;
  int iterations_run = 0;
  std::vector<double> residuals;
  /// Every lane reached the tolerance.
  bool converged = false;

  std::size_t batch_size() const noexcept { return cost_e0.size(); }
  DualPotentials lane_potentials(std::size_t b) const;
};

/// All lanes iterate in lockstep until the worst residual is within tolerance
/// or max_iters is reached.
BatchLossResult batch_forward(const HistogramBatch& mu, const HistogramBatch& nu,
                              const CostMatrix& c, const BatchConfig& config);

struct BatchGradients {
  Matrix grad_mu;  // B x d1
  Matrix grad_nu;  // B x d2
};

/// upstream[b] * lambda * (log_u[b] - mean(log_u[b])), likewise for nu.
/// Reads only the final potentials. Throws ZeroMassGradient(lane, index).
BatchGradients batch_backward(const BatchLossResult& result, std::span<const double> upstream);

}  // namespace eot
