// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>

#include "eot/logsumexp.hpp"
#include "eot/matrix.hpp"
#include "eot/types.hpp"

namespace eot::detail {

/// A d1 x d2 log-kernel stored in both orientations so that reductions over
/// i and over j both walk contiguous memory.
struct LogKernel {
  Matrix by_row;  // (i, j)
  Matrix by_col;  // (j, i)

  std::size_t rows() const noexcept { return by_row.rows(); }
  std::size_t cols() const noexcept { return by_row.cols(); }

  /// -c_ij / lambda
  static LogKernel gibbs(const CostMatrix& c, double lambda) {
    LogKernel k{Matrix(c.rows(), c.cols()), {}};
    for (std::size_t i = 0; i < c.rows(); ++i)
      for (std::size_t j = 0; j < c.cols(); ++j) k.by_row(i, j) = -c(i, j) / lambda;
    k.by_col = k.by_row.transposed();
    return k;
  }

  /// -c_ij / lambda + log c_ij, with -inf where c_ij = 0.
  static LogKernel weighted_cost(const CostMatrix& c, double lambda) {
    LogKernel k{Matrix(c.rows(), c.cols()), {}};
    for (std::size_t i = 0; i < c.rows(); ++i) {
      for (std::size_t j = 0; j < c.cols(); ++j) {
        const double cij = c(i, j);
        k.by_row(i, j) = cij > 0.0 ? -cij / lambda + std::log(cij) : kNegInf;
      }
    }
    k.by_col = k.by_row.transposed();
    return k;
  }
};

/// lse_m(kernel_row[m] + potential[m])
inline double lse_dot(std::span<const double> kernel_row, std::span<const double> potential) {
  OnlineLse acc;
  for (std::size_t m = 0; m < kernel_row.size(); ++m) acc.push(kernel_row[m] + potential[m]);
  return acc.finalise();
}

}  // namespace eot::detail
