// SPDX-License-Identifier: Apache-2.0

#include "eot/types.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "eot/errors.hpp"
#include "eot/logsumexp.hpp"

namespace eot {

bool Histogram::has_zero_mass() const noexcept {
  return std::any_of(mass_.begin(), mass_.end(), [](double m) { return m == 0.0; });
}

Histogram validate_histogram(std::vector<double> raw) {
  if (raw.empty()) throw NotNormalised(0.0);
  double sum = 0.0;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    if (!std::isfinite(raw[i])) throw NonFinite(i);
    if (raw[i] < 0.0) throw NegativeMass(i);
    sum += raw[i];
  }
  if (std::abs(sum - 1.0) > kMassTolerance) throw NotNormalised(sum);
  return Histogram(std::move(raw));
}

std::vector<double> log_mass(const Histogram& h) {
  std::vector<double> out(h.size());
  for (std::size_t i = 0; i < h.size(); ++i) out[i] = h[i] > 0.0 ? std::log(h[i]) : kNegInf;
  return out;
}

CostMatrix::CostMatrix(Matrix cost) : cost_(std::move(cost)) {
  if (cost_.empty()) throw InvalidCost("cost matrix is empty");
  for (std::size_t i = 0; i < cost_.rows(); ++i) {
    for (std::size_t j = 0; j < cost_.cols(); ++j) {
      const double c = cost_(i, j);
      if (!std::isfinite(c) || c < 0.0) {
        throw InvalidCost("cost entry (" + std::to_string(i) + ", " + std::to_string(j) +
                          ") must be finite and nonnegative");
      }
    }
  }
}

double CostMatrix::max() const noexcept {
  const auto d = cost_.data();
  return *std::max_element(d.begin(), d.end());
}

void SinkhornConfig::validate() const {
  if (!(lambda > 0.0) || !std::isfinite(lambda)) throw InvalidConfig("lambda must be positive");
  if (max_iters < 1) throw InvalidConfig("max_iters must be at least 1");
  if (!(tolerance >= 0.0)) throw InvalidConfig("tolerance must be nonnegative");
  if (check_interval < 1) throw InvalidConfig("check_interval must be at least 1");
}

namespace {
std::vector<double> multipliers(const std::vector<double>& log_scaling, double lambda) {
  std::vector<double> out(log_scaling.size());
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = -lambda * log_scaling[i] - 0.5 * lambda;
  return out;
}
}  // namespace

std::vector<double> DualPotentials::alpha() const { return multipliers(log_u, lambda); }
std::vector<double> DualPotentials::beta() const { return multipliers(log_v, lambda); }

std::vector<double> TransportPlan::row_sums() const {
  std::vector<double> out(p.rows(), 0.0);
  for (std::size_t i = 0; i < p.rows(); ++i)
    for (double x : p.row(i)) out[i] += x;
  return out;
}

std::vector<double> TransportPlan::col_sums() const {
  std::vector<double> out(p.cols(), 0.0);
  for (std::size_t i = 0; i < p.rows(); ++i)
    for (std::size_t j = 0; j < p.cols(); ++j) out[j] += p(i, j);
  return out;
}

}  // namespace eot
