// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "eot/matrix.hpp"

namespace eot {

inline constexpr double kMassTolerance = 1e-6;

/// A discrete probability measure: nonnegative entries summing to one within
/// kMassTolerance. Zero entries are allowed. Only obtainable through
/// validate_histogram, so a Histogram in hand is always valid.
class Histogram {
 public:
  std::size_t size() const noexcept { return mass_.size(); }
  double operator[](std::size_t i) const noexcept { return mass_[i]; }
  std::span<const double> mass() const noexcept { return mass_; }
  bool has_zero_mass() const noexcept;

 private:
  explicit Histogram(std::vector<double> mass) : mass_(std::move(mass)) {}
  friend Histogram validate_histogram(std::vector<double> raw);

  std::vector<double> mass_;
};

/// Checks entries in index order for NaN/inf (NonFinite) and sign (NegativeMass),
/// then the total (NotNormalised). Never renormalises.
Histogram validate_histogram(std::vector<double> raw);

/// Elementwise log with log(0) = -inf.
std::vector<double> log_mass(const Histogram& h);

/// Ground cost between the supports of two histograms; finite and nonnegative.
class CostMatrix {
 public:
  /// Throws InvalidCost on negative or non-finite entries, or an empty matrix.
  explicit CostMatrix(Matrix cost);

  std::size_t rows() const noexcept { return cost_.rows(); }
  std::size_t cols() const noexcept { return cost_.cols(); }
  double operator()(std::size_t i, std::size_t j) const noexcept { return cost_(i, j); }
  const Matrix& matrix() const noexcept { return cost_; }
  double max() const noexcept;

 private:
  Matrix cost_;
};

struct SinkhornConfig {
  double lambda = 1.0;
  int max_iters = 1000;
  /// L-inf marginal residual at which the solver stops. 0 runs exactly max_iters.
  double tolerance = 1e-9;
  int check_interval = 10;

  /// Throws InvalidConfig.
  void validate() const;
};

/// Log-domain scaling vectors. Entries are -inf exactly on zero-mass bins.
struct DualPotentials {
  std::vector<double> log_u;
  std::vector<double> log_v;
  double lambda = 1.0;

  /// Lagrange multipliers, alpha = -lambda * log_u - lambda / 2 (likewise beta).
  std::vector<double> alpha() const;
  std::vector<double> beta() const;
};

struct TransportPlan {
  Matrix p;

  std::vector<double> row_sums() const;
  std::vector<double> col_sums() const;
};

struct SinkhornResult {
  DualPotentials potentials;
  double cost_e0 = 0.0;
  double cost_elambda = 0.0;
  int iterations_run = 0;
  double final_residual = 0.0;
  bool converged = false;
};

/// Mean-zero gradients of the loss with respect to both marginals.
struct GradientPair {
  std::vector<double> grad_mu;
  std::vector<double> grad_nu;
};

}  // namespace eot
