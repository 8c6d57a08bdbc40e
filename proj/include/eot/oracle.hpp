// SPDX-License-Identifier: Apache-2.0

// Reference computations that check the solver from outside: the closed-form
// 1-D Wasserstein-1 distance, finite-difference gradients of the solve, and a
// slow high-accuracy solve.

#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "eot/types.hpp"

namespace eot::oracle {

/// Strictly increasing support locations on the line.
class Grid1D {
 public:
  /// Throws InvalidConfig unless positions are finite and strictly increasing.
  static Grid1D validate(std::vector<double> positions);
  /// d points spread evenly over [0, 1].
  static Grid1D uniform(std::size_t d);

  std::size_t size() const noexcept { return positions_.size(); }
  const std::vector<double>& positions() const noexcept { return positions_; }

  /// c_ij = |x_i - x_j|^p
  CostMatrix distance_cost(double p) const;

 private:
  explicit Grid1D(std::vector<double> positions) : positions_(std::move(positions)) {}
  std::vector<double> positions_;
};

/// sum_k |F_mu(k) - F_nu(k)| * (x_{k+1} - x_k): exact W1 under c_ij = |x_i - x_j|.
double w1_1d_exact(const Histogram& mu, const Histogram& nu, const Grid1D& grid);

/// Which scalar the finite differences are taken of.
enum class FdTarget {
  /// sum p c - lambda h(P), the functional whose multipliers give the analytic gradient.
  kRegularized,
  /// sum p c alone.
  kPrimal,
};

using Objective = std::function<double(const Histogram& mu, const Histogram& nu)>;

/// Central differences of `objective` along e_i - 1/d for every bin of both
/// marginals, giving the mean-zero projected gradient. Probes are spread over
/// `workers` threads; the result does not depend on probe order.
/// Throws MassTooSmall(index) if a bin holds no more than eps.
GradientPair finite_difference_gradient(const Histogram& mu, const Histogram& nu,
                                        const Objective& objective, double eps = 1e-6,
                                        int workers = 1);

/// Finite differences of solve-then-evaluate with run_sinkhorn under `config`.
GradientPair finite_difference_gradient(const Histogram& mu, const Histogram& nu,
                                        const CostMatrix& c, const SinkhornConfig& config,
                                        double eps = 1e-6,
                                        FdTarget target = FdTarget::kRegularized,
                                        int workers = 1);

struct GradcheckReport {
  double max_abs_mu = 0.0;
  double max_rel_mu = 0.0;
  double max_abs_nu = 0.0;
  double max_rel_nu = 0.0;
  /// Every component satisfies |analytic - numeric| <= atol + rtol * |numeric|.
  bool passed = false;
};

GradcheckReport compare_gradients(const GradientPair& analytic, const GradientPair& numeric,
                                  double rtol = 1e-3, double atol = 1e-5);

inline constexpr double kReferenceResidual = 1e-13;
inline constexpr int kReferenceMaxIters = 100 * 1000;

/// Log iteration to residual <= 1e-13 or 100000 iterations. If the floor is not
/// reached the result has converged == false and carries the achieved residual.
/// Throws MassTooSmall for a zero-mass bin.
SinkhornResult reference_solve(const Histogram& mu, const Histogram& nu, const CostMatrix& c,
                               double lambda);

}  // namespace eot::oracle
