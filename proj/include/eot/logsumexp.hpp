// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <span>

namespace eot {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

/// Single-pass logsumexp state: a running maximum and the sum of exp(x - max)
/// over everything consumed so far. When the maximum grows the sum is rescaled.
/// Two accumulators over disjoint element sets merge associatively, which is
/// what lets a reduction be split into chunks and recombined.
class OnlineLse {
 public:
  OnlineLse() = default;

  void push(double x) noexcept {
    ++count_;
    if (x > max_) {
      sum_ = sum_ * std::exp(max_ - x) + 1.0;
      max_ = x;
    } else if (x != kNegInf) {
      sum_ += std::exp(x - max_);
    }
  }

  /// -inf for an empty accumulator or one that has only seen -inf.
  double finalise() const noexcept { return max_ == kNegInf ? kNegInf : max_ + std::log(sum_); }

  static OnlineLse merge(const OnlineLse& a, const OnlineLse& b) noexcept;

  double running_max() const noexcept { return max_; }
  double running_sum() const noexcept { return sum_; }
  std::size_t count() const noexcept { return count_; }

 private:
  double max_ = kNegInf;
  double sum_ = 0.0;
  std::size_t count_ = 0;
};

inline OnlineLse OnlineLse::merge(const OnlineLse& a, const OnlineLse& b) noexcept {
  OnlineLse out;
  out.count_ = a.count_ + b.count_;
  if (a.max_ == kNegInf) {
    out.max_ = b.max_;
    out.sum_ = b.sum_;
  } else if (b.max_ == kNegInf) {
    out.max_ = a.max_;
    out.sum_ = a.sum_;
  } else if (a.max_ >= b.max_) {
    out.max_ = a.max_;
    out.sum_ = a.sum_ + b.sum_ * std::exp(b.max_ - a.max_);
  } else {
    out.max_ = b.max_;
    out.sum_ = b.sum_ + a.sum_ * std::exp(a.max_ - b.max_);
  }
  return out;
}

/// log(sum(exp(xs))) in one pass. Empty and all -inf inputs give -inf.
/// Throws NaNInput if any entry is NaN.
double logsumexp_online(std::span<const double> xs);

}  // namespace eot
