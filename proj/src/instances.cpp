// SPDX-License-Identifier: Apache-2.0

#include "eot/instances.hpp"

#include <cmath>
#include <vector>

#include "eot/errors.hpp"

namespace eot {

Histogram random_histogram(std::size_t d, std::mt19937_64& rng, double floor) {
  if (d == 0) throw InvalidConfig("histogram dimension must be positive");
  if (!(floor >= 0.0 && floor < 1.0)) throw InvalidConfig("floor must lie in [0, 1)");
  std::exponential_distribution<double> unit_gamma(1.0);
  std::vector<double> mass(d);
  double total = 0.0;
  for (double& m : mass) {
    do {
      m = unit_gamma(rng);
    } while (m == 0.0);
    total += m;
  }
  const double base = floor / static_cast<double>(d);
  for (double& m : mass) m = (1.0 - floor) * (m / total) + base;
  return validate_histogram(std::move(mass));
}

CostMatrix grid_metric_cost(std::size_t d1, std::size_t d2, double p) {
  if (d1 == 0 || d2 == 0) throw InvalidConfig("grid dimensions must be positive");
  if (!(p > 0.0)) throw InvalidConfig("grid metric exponent must be positive");
  auto position = [](std::size_t k, std::size_t d) {
    return d > 1 ? static_cast<double>(k) / static_cast<double>(d - 1) : 0.0;
  };
  Matrix c(d1, d2);
  for (std::size_t i = 0; i < d1; ++i)
    for (std::size_t j = 0; j < d2; ++j)
      c(i, j) = std::pow(std::abs(position(i, d1) - position(j, d2)), p);
  return CostMatrix(std::move(c));
}

CostMatrix random_cost(std::size_t d1, std::size_t d2, std::mt19937_64& rng, double lo,
                       double hi) {
  std::uniform_real_distribution<double> entry(lo, hi);
  Matrix c(d1, d2);
  for (double& x : c.data()) x = entry(rng);
  return CostMatrix(std::move(c));
}

}  // namespace eot
