// SPDX-License-Identifier: Apache-2.0

#include "eot/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <string>
#include <thread>

#include "eot/errors.hpp"
#include "eot/ot_core.hpp"

namespace eot::oracle {

Grid1D Grid1D::validate(std::vector<double> positions) {
  if (positions.empty()) throw InvalidConfig("grid must have at least one point");
  for (std::size_t k = 0; k < positions.size(); ++k) {
    if (!std::isfinite(positions[k])) throw NonFinite(k);
    if (k > 0 && !(positions[k] > positions[k - 1])) {
      throw InvalidConfig("grid positions must be strictly increasing (index " +
                          std::to_string(k) + ")");
    }
  }
  return Grid1D(std::move(positions));
}

Grid1D Grid1D::uniform(std::size_t d) {
  std::vector<double> x(d, 0.0);
  for (std::size_t k = 0; k < d && d > 1; ++k)
    x[k] = static_cast<double>(k) / static_cast<double>(d - 1);
  return validate(std::move(x));
}

CostMatrix Grid1D::distance_cost(double p) const {
  Matrix c(size(), size());
  for (std::size_t i = 0; i < size(); ++i)
    for (std::size_t j = 0; j < size(); ++j)
      c(i, j) = std::pow(std::abs(positions_[i] - positions_[j]), p);
  return CostMatrix(std::move(c));
}

double w1_1d_exact(const Histogram& mu, const Histogram& nu, const Grid1D& grid) {
  if (mu.size() != grid.size() || nu.size() != grid.size()) {
    throw DimensionMismatch("w1: histograms and grid must share one dimension");
  }
  const auto& x = grid.positions();
  double cdf_gap = 0.0;
  double total = 0.0;
  for (std::size_t k = 0; k + 1 < x.size(); ++k) {
    cdf_gap += mu[k] - nu[k];
    total += std::abs(cdf_gap) * (x[k + 1] - x[k]);
  }
  return total;
}

namespace {

// Mass-preserving shift of h along e_index - 1/d.
Histogram shifted(const Histogram& h, std::size_t index, double step) {
  const double spread = step / static_cast<double>(h.size());
  std::vector<double> mass(h.mass().begin(), h.mass().end());
  for (double& m : mass) m -= spread;
  mass[index] += step;
  return validate_histogram(std::move(mass));
}

void subtract_mean(std::vector<double>& g) {
  if (g.empty()) return;
  double mean = 0.0;
  for (double x : g) mean += x;
  mean /= static_cast<double>(g.size());
  for (double& x : g) x -= mean;
}

}  // namespace

GradientPair finite_difference_gradient(const Histogram& mu, const Histogram& nu,
                                        const Objective& objective, double eps, int workers) {
  if (!(eps > 0.0)) throw InvalidConfig("eps must be positive");
  for (std::size_t i = 0; i < mu.size(); ++i)
    if (mu[i] <= eps) throw MassTooSmall(i);
  for (std::size_t j = 0; j < nu.size(); ++j)
    if (nu[j] <= eps) throw MassTooSmall(mu.size() + j);

  const std::size_t d1 = mu.size();
  const std::size_t probes = d1 + nu.size();
  std::vector<double> slope(probes, 0.0);

  auto probe = [&](std::size_t k) {
    double plus = 0.0;
    double minus = 0.0;
    if (k < d1) {
      plus = objective(shifted(mu, k, eps), nu);
      minus = objective(shifted(mu, k, -eps), nu);
    } else {
      plus = objective(mu, shifted(nu, k - d1, eps));
      minus = objective(mu, shifted(nu, k - d1, -eps));
    }
    slope[k] = (plus - minus) / (2.0 * eps);
  };

  const auto n_threads = static_cast<std::size_t>(std::max(1, workers));
  if (n_threads == 1) {
    for (std::size_t k = 0; k < probes; ++k) probe(k);
  } else {
    std::vector<std::exception_ptr> failures(n_threads);
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < n_threads; ++t) {
      pool.emplace_back([&, t] {
        try {
          for (std::size_t k = t; k < probes; k += n_threads) probe(k);
        } catch (...) {
          failures[t] = std::current_exception();
        }
      });
    }
    for (auto& th : pool) th.join();
    for (auto& f : failures)
      if (f) std::rethrow_exception(f);
  }

  GradientPair out{{slope.begin(), slope.begin() + static_cast<std::ptrdiff_t>(d1)},
                   {slope.begin() + static_cast<std::ptrdiff_t>(d1), slope.end()}};
  subtract_mean(out.grad_mu);
  subtract_mean(out.grad_nu);
  return out;
}

GradientPair finite_difference_gradient(const Histogram& mu, const Histogram& nu,
                                        const CostMatrix& c, const SinkhornConfig& config,
                                        double eps, FdTarget target, int workers) {
  config.validate();
  Objective objective = [&](const Histogram& m, const Histogram& n) {
    const auto solved = run_sinkhorn(m, n, c, config);
    const auto plan = transport_plan(solved.potentials, c);
    if (target == FdTarget::kRegularized) return regularized_cost(plan, c, config.lambda);
    return regularized_cost(plan, c, 0.0);
  };
  return finite_difference_gradient(mu, nu, objective, eps, workers);
}

GradcheckReport compare_gradients(const GradientPair& analytic, const GradientPair& numeric,
                                  double rtol, double atol) {
  if (analytic.grad_mu.size() != numeric.grad_mu.size() ||
      analytic.grad_nu.size() != numeric.grad_nu.size()) {
    throw DimensionMismatch("gradient pairs have different shapes");
  }
  GradcheckReport report;
  report.passed = true;
  auto scan = [&](const std::vector<double>& a, const std::vector<double>& n, double& max_abs,
                  double& max_rel) {
    for (std::size_t k = 0; k < a.size(); ++k) {
      const double diff = std::abs(a[k] - n[k]);
      const double scale = std::abs(n[k]);
      max_abs = std::max(max_abs, diff);
      const double rel =
          scale > 0.0 ? diff / scale : (diff > 0.0 ? std::numeric_limits<double>::infinity() : 0.0);
      max_rel = std::max(max_rel, rel);
      if (!(diff <= atol + rtol * scale)) report.passed = false;
    }
  };
  scan(analytic.grad_mu, numeric.grad_mu, report.max_abs_mu, report.max_rel_mu);
  scan(analytic.grad_nu, numeric.grad_nu, report.max_abs_nu, report.max_rel_nu);
  return report;
}

SinkhornResult reference_solve(const Histogram& mu, const Histogram& nu, const CostMatrix& c,
                               double lambda) {
  for (std::size_t i = 0; i < mu.size(); ++i)
    if (mu[i] <= 0.0) throw MassTooSmall(i);
  for (std::size_t j = 0; j < nu.size(); ++j)
    if (nu[j] <= 0.0) throw MassTooSmall(mu.size() + j);
  SinkhornConfig config;
  config.lambda = lambda;
  config.tolerance = kReferenceResidual;
  config.max_iters = kReferenceMaxIters;
  config.check_interval = 10;
  return run_sinkhorn(mu, nu, c, config);
}

}  // namespace eot::oracle
