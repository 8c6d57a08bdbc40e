// SPDX-License-Identifier: Apache-2.0

// Seeded test-instance families shared by the CLI, tests and benchmarks.

#pragma once

#include <cstddef>
#include <cstdint>
#include <random>

#include "eot/types.hpp"

namespace eot {

/// Draws from (1 - floor) * Dirichlet(1, ..., 1) + floor / d. A positive floor
/// bounds every bin below by floor / d.
Histogram random_histogram(std::size_t d, std::mt19937_64& rng, double floor = 0.0);

/// c_ij = |x_i - y_j|^p with x, y spread evenly over [0, 1]. For d1 == d2 == d
/// this is |i - j|^p / (d - 1)^p.
CostMatrix grid_metric_cost(std::size_t d1, std::size_t d2, double p);

/// Independent uniform entries in [lo, hi).
CostMatrix random_cost(std::size_t d1, std::size_t d2, std::mt19937_64& rng, double lo = 0.0,
                       double hi = 1.0);

}  // namespace eot
