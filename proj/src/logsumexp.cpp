// SPDX-License-Identifier: Apache-2.0

#include "eot/logsumexp.hpp"

#include "eot/errors.hpp"

namespace eot {

double logsumexp_online(std::span<const double> xs) {
  OnlineLse acc;
  for (double x : xs) {
    if (std::isnan(x)) throw NaNInput();
    acc.push(x);
  }
  return acc.finalise();
}

}  // namespace eot
