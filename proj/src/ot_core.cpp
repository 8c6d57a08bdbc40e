// SPDX-License-Identifier: Apache-2.0

#include "eot/ot_core.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "eot/errors.hpp"
#include "eot/logsumexp.hpp"
#include "log_kernel.hpp"

namespace eot {

namespace {

void require_shape(const CostMatrix& c, std::size_t d1, std::size_t d2) {
  if (c.rows() != d1 || c.cols() != d2) {
    throw DimensionMismatch("cost matrix is " + std::to_string(c.rows()) + "x" +
                            std::to_string(c.cols()) + ", marginals are " + std::to_string(d1) +
                            " and " + std::to_string(d2));
  }
}

void require_finite_or_neg_inf(std::span<const double> xs, const char* what) {
  for (std::size_t k = 0; k < xs.size(); ++k) {
    if (std::isnan(xs[k]) || xs[k] == std::numeric_limits<double>::infinity()) {
      throw NaNProduced(std::string(what) + " became non-finite at index " + std::to_string(k));
    }
  }
}

// One v-then-u update against a prebuilt kernel.
void log_step(const detail::LogKernel& kernel, std::span<const double> log_u,
              std::span<const double> log_mu, std::span<const double> log_nu,
              std::vector<double>& log_v_out, std::vector<double>& log_u_out) {
  log_v_out.resize(kernel.cols());
  log_u_out.resize(kernel.rows());
  for (std::size_t j = 0; j < kernel.cols(); ++j) {
    log_v_out[j] =
        log_nu[j] == kNegInf ? kNegInf : log_nu[j] - detail::lse_dot(kernel.by_col.row(j), log_u);
  }
  for (std::size_t i = 0; i < kernel.rows(); ++i) {
    log_u_out[i] = log_mu[i] == kNegInf
                       ? kNegInf
                       : log_mu[i] - detail::lse_dot(kernel.by_row.row(i), log_v_out);
  }
  require_finite_or_neg_inf(log_v_out, "log_v");
  require_finite_or_neg_inf(log_u_out, "log_u");
}

Marginals marginals_with(const detail::LogKernel& kernel, const DualPotentials& pot) {
  Marginals m{std::vector<double>(kernel.rows(), 0.0), std::vector<double>(kernel.cols(), 0.0)};
  for (std::size_t i = 0; i < kernel.rows(); ++i) {
    if (pot.log_u[i] == kNegInf) continue;
    m.rows[i] = std::exp(pot.log_u[i] + detail::lse_dot(kernel.by_row.row(i), pot.log_v));
  }
  for (std::size_t j = 0; j < kernel.cols(); ++j) {
    if (pot.log_v[j] == kNegInf) continue;
    m.cols[j] = std::exp(pot.log_v[j] + detail::lse_dot(kernel.by_col.row(j), pot.log_u));
  }
  return m;
}

double residual_of(const Marginals& m, const Histogram& mu, const Histogram& nu) {
  double r = 0.0;
  for (std::size_t i = 0; i < m.rows.size(); ++i) r = std::max(r, std::abs(m.rows[i] - mu[i]));
  for (std::size_t j = 0; j < m.cols.size(); ++j) r = std::max(r, std::abs(m.cols[j] - nu[j]));
  return r;
}

// E^lambda = lambda * (sum_i r_i log u_i + sum_j s_j log v_j), where r, s are the
// plan's marginals; follows from log p_ij = log u_i - c_ij / lambda + log v_j.
double regularized_from_duals(const Marginals& m, const DualPotentials& pot) {
  double acc = 0.0;
  for (std::size_t i = 0; i < m.rows.size(); ++i)
    if (m.rows[i] > 0.0) acc += m.rows[i] * pot.log_u[i];
  for (std::size_t j = 0; j < m.cols.size(); ++j)
    if (m.cols[j] > 0.0) acc += m.cols[j] * pot.log_v[j];
  return pot.lambda * acc;
}

}  // namespace

Matrix kernel_matrix(const CostMatrix& c, double lambda) {
  if (!(lambda > 0.0)) throw InvalidConfig("lambda must be positive");
  Matrix k(c.rows(), c.cols());
  for (std::size_t i = 0; i < c.rows(); ++i)
    for (std::size_t j = 0; j < c.cols(); ++j) k(i, j) = std::exp(-c(i, j) / lambda);
  return k;
}

PlainStep plain_sinkhorn_step(std::span<const double> u, const Matrix& kernel,
                              const Histogram& mu, const Histogram& nu) {
  const std::size_t d1 = mu.size();
  const std::size_t d2 = nu.size();
  if (kernel.rows() != d1 || kernel.cols() != d2 || u.size() != d1) {
    throw DimensionMismatch("plain step: kernel, u and marginal sizes disagree");
  }
  PlainStep out{std::vector<double>(d2, 0.0), std::vector<double>(d1, 0.0)};
  for (std::size_t j = 0; j < d2; ++j) {
    if (nu[j] == 0.0) continue;
    double denom = 0.0;
    for (std::size_t i = 0; i < d1; ++i) denom += kernel(i, j) * u[i];
    if (denom == 0.0) throw DivisionUnderflow(j);
    out.v[j] = nu[j] / denom;
  }
  for (std::size_t i = 0; i < d1; ++i) {
    if (mu[i] == 0.0) continue;
    double denom = 0.0;
    for (std::size_t j = 0; j < d2; ++j) denom += kernel(i, j) * out.v[j];
    if (denom == 0.0) throw DivisionUnderflow(i);
    out.u[i] = mu[i] / denom;
  }
  return out;
}

LogStep log_sinkhorn_step(std::span<const double> log_u, const CostMatrix& c, double lambda,
                          std::span<const double> log_mu, std::span<const double> log_nu) {
  if (log_u.size() != c.rows() || log_mu.size() != c.rows() || log_nu.size() != c.cols()) {
    throw DimensionMismatch("log step: potential, marginal and cost sizes disagree");
  }
  const auto kernel = detail::LogKernel::gibbs(c, lambda);
  LogStep out;
  log_step(kernel, log_u, log_mu, log_nu, out.log_v, out.log_u);
  return out;
}

SinkhornResult run_sinkhorn(const Histogram& mu, const Histogram& nu, const CostMatrix& c,
                            const SinkhornConfig& config) {
  config.validate();
  require_shape(c, mu.size(), nu.size());

  const auto kernel = detail::LogKernel::gibbs(c, config.lambda);
  const auto log_mu = log_mass(mu);
  const auto log_nu = log_mass(nu);

  SinkhornResult result;
  DualPotentials& pot = result.potentials;
  pot.lambda = config.lambda;
  pot.log_u.resize(mu.size());
  for (std::size_t i = 0; i < mu.size(); ++i) pot.log_u[i] = mu[i] > 0.0 ? 0.0 : kNegInf;

  std::vector<double> next_u;
  Marginals marginals;
  for (int k = 1; k <= config.max_iters; ++k) {
    log_step(kernel, pot.log_u, log_mu, log_nu, pot.log_v, next_u);
    pot.log_u.swap(next_u);
    result.iterations_run = k;

    const bool scheduled = config.tolerance > 0.0 && k % config.check_interval == 0;
    if (scheduled || k == config.max_iters) {
      marginals = marginals_with(kernel, pot);
      result.final_residual = residual_of(marginals, mu, nu);
      if (result.final_residual <= config.tolerance) {
        result.converged = true;
        break;
      }
    }
  }

  result.cost_e0 = primal_cost(pot, c);
  result.cost_elambda = regularized_from_duals(marginals, pot);
  return result;
}

TransportPlan transport_plan(const DualPotentials& pot, const CostMatrix& c) {
  require_shape(c, pot.log_u.size(), pot.log_v.size());
  TransportPlan plan{Matrix(c.rows(), c.cols())};
  for (std::size_t i = 0; i < c.rows(); ++i) {
    for (std::size_t j = 0; j < c.cols(); ++j) {
      const double e = pot.log_u[i] - c(i, j) / pot.lambda + pot.log_v[j];
      plan.p(i, j) = e == kNegInf ? 0.0 : std::exp(e);
    }
  }
  return plan;
}

double entropy(const TransportPlan& plan) {
  double h = 0.0;
  for (double p : plan.p.data())
    if (p > 0.0) h -= p * std::log(p);
  return h;
}

double primal_cost(const DualPotentials& pot, const CostMatrix& c) {
  require_shape(c, pot.log_u.size(), pot.log_v.size());
  OnlineLse acc;
  for (std::size_t i = 0; i < c.rows(); ++i) {
    if (pot.log_u[i] == kNegInf) continue;
    for (std::size_t j = 0; j < c.cols(); ++j) {
      const double cij = c(i, j);
      if (cij == 0.0) continue;
      acc.push(pot.log_u[i] - cij / pot.lambda + std::log(cij) + pot.log_v[j]);
    }
  }
  return std::exp(acc.finalise());
}

double regularized_cost(const TransportPlan& plan, const CostMatrix& c, double lambda) {
  double transport = 0.0;
  for (std::size_t i = 0; i < plan.p.rows(); ++i)
    for (std::size_t j = 0; j < plan.p.cols(); ++j) transport += plan.p(i, j) * c(i, j);
  return transport - lambda * entropy(plan);
}

GradientPair gradients(const DualPotentials& pot) {
  auto project = [&](const std::vector<double>& log_scaling) {
    double mean = 0.0;
    for (std::size_t k = 0; k < log_scaling.size(); ++k) {
      if (log_scaling[k] == kNegInf) throw ZeroMassGradient(0, k);
      mean += log_scaling[k];
    }
    mean /= static_cast<double>(log_scaling.size());
    std::vector<double> g(log_scaling.size());
    for (std::size_t k = 0; k < g.size(); ++k) g[k] = pot.lambda * (log_scaling[k] - mean);
    return g;
  };
  return {project(pot.log_u), project(pot.log_v)};
}

Marginals plan_marginals(const DualPotentials& pot, const CostMatrix& c) {
  require_shape(c, pot.log_u.size(), pot.log_v.size());
  return marginals_with(detail::LogKernel::gibbs(c, pot.lambda), pot);
}

double marginal_residual(const DualPotentials& pot, const CostMatrix& c, const Histogram& mu,
                         const Histogram& nu) {
  require_shape(c, mu.size(), nu.size());
  require_shape(c, pot.log_u.size(), pot.log_v.size());
  return residual_of(plan_marginals(pot, c), mu, nu);
}

}  // namespace eot
