// SPDX-License-Identifier: Apache-2.0

// Single-pair entropic optimal transport.
//
// The coupling minimising  sum p_ij c_ij - lambda * h(P)  over the transport
// polytope factors as P = diag(u) K diag(v) with K = exp(-C / lambda). The
// scalings are found by alternately matching the column and row marginals
// (v first, then u). The solver runs that iteration in log space so that
// K never has to be formed; kernel_matrix and plain_sinkhorn_step exist as
// the linear-domain reference.

#pragma once

#include <span>
#include <vector>

#include "eot/matrix.hpp"
#include "eot/types.hpp"

namespace eot {

/// K_ij = exp(-c_ij / lambda). Entries may underflow to 0.
Matrix kernel_matrix(const CostMatrix& c, double lambda);

struct PlainStep {
  std::vector<double> v;
  std::vector<double> u;
};

/// v_j = nu_j / (K^T u)_j, then u_i = mu_i / (K v)_i. Zero-mass bins get 0.
/// Throws DivisionUnderflow when a denominator is exactly 0 against positive mass.
PlainStep plain_sinkhorn_step(std::span<const double> u, const Matrix& kernel,
                              const Histogram& mu, const Histogram& nu);

struct LogStep {
  std::vector<double> log_v;
  std::vector<double> log_u;
};

/// log v_j = log nu_j - lse_i(-c_ij / lambda + log u_i), then the same over j for log u.
/// Zero-mass bins are -inf exactly. Throws NaNProduced if anything comes out NaN.
LogStep log_sinkhorn_step(std::span<const double> log_u, const CostMatrix& c, double lambda,
                          std::span<const double> log_mu, std::span<const double> log_nu);

SinkhornResult run_sinkhorn(const Histogram& mu, const Histogram& nu, const CostMatrix& c,
                            const SinkhornConfig& config);

/// p_ij = exp(log u_i - c_ij / lambda + log v_j).
TransportPlan transport_plan(const DualPotentials& pot, const CostMatrix& c);

/// h(P) = -sum p log p with 0 log 0 = 0.
double entropy(const TransportPlan& plan);

/// sum_ij p_ij c_ij evaluated as exp(lse_ij(log u_i - c_ij / lambda + log c_ij + log v_j)).
double primal_cost(const DualPotentials& pot, const CostMatrix& c);

/// sum p c - lambda * h(P) over a materialised plan.
double regularized_cost(const TransportPlan& plan, const CostMatrix& c, double lambda);

/// grad_mu = lambda * (log u - mean(log u)), likewise for nu.
/// Throws ZeroMassGradient if any potential is -inf.
GradientPair gradients(const DualPotentials& pot);

/// Row and column sums of the implied plan, computed in log space.
struct Marginals {
  std::vector<double> rows;
  std::vector<double> cols;
};
Marginals plan_marginals(const DualPotentials& pot, const CostMatrix& c);

/// max(|P 1 - mu|_inf, |P^T 1 - nu|_inf) without materialising P.
double marginal_residual(const DualPotentials& pot, const CostMatrix& c, const Histogram& mu,
                         const Histogram& nu);

}  // namespace eot
