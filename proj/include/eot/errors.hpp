// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace eot {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NegativeMass : public Error {
 public:
  explicit NegativeMass(std::size_t index)
      : Error("negative mass at index " + std::to_string(index)), index_(index) {}
  std::size_t index() const noexcept { return index_; }

 private:
  std::size_t index_;
};

class NotNormalised : public Error {
 public:
  explicit NotNormalised(double sum)
      : Error("histogram not normalised (sum " + std::to_string(sum) + ")"), sum_(sum) {}
  double sum() const noexcept { return sum_; }

 private:
  double sum_;
};

class NonFinite : public Error {
 public:
  explicit NonFinite(std::size_t index)
      : Error("non-finite value at index " + std::to_string(index)), index_(index) {}
  std::size_t index() const noexcept { return index_; }

 private:
  std::size_t index_;
};

class InvalidCost : public Error {
 public:
  using Error::Error;
};

class InvalidConfig : public Error {
 public:
  using Error::Error;
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

/// Batch-level shape errors.
class ShapeMismatch : public DimensionMismatch {
 public:
  using DimensionMismatch::DimensionMismatch;
};

/// A batch row failed histogram validation; what() carries the underlying reason.
class InvalidLane : public Error {
 public:
  InvalidLane(std::size_t lane, const std::string& reason)
      : Error("lane " + std::to_string(lane) + ": " + reason), lane_(lane) {}
  std::size_t lane() const noexcept { return lane_; }

 private:
  std::size_t lane_;
};

class NaNInput : public Error {
 public:
  NaNInput() : Error("NaN input to logsumexp") {}
};

/// A log-domain update produced NaN. Unreachable for valid inputs.
class NaNProduced : public Error {
 public:
  using Error::Error;
};

/// The linear-domain iteration hit an exactly-zero denominator against positive mass.
class DivisionUnderflow : public Error {
 public:
  explicit DivisionUnderflow(std::size_t index)
      : Error("kernel denominator underflowed to 0 at index " + std::to_string(index)),
        index_(index) {}
  std::size_t index() const noexcept { return index_; }

 private:
  std::size_t index_;
};

class ZeroMassGradient : public Error {
 public:
  ZeroMassGradient(std::size_t lane, std::size_t index)
      : Error("gradient undefined: zero-mass bin " + std::to_string(index) + " in lane " +
              std::to_string(lane)),
        lane_(lane),
        index_(index) {}
  std::size_t lane() const noexcept { return lane_; }
  std::size_t index() const noexcept { return index_; }

 private:
  std::size_t lane_;
  std::size_t index_;
};

class MassTooSmall : public Error {
 public:
  explicit MassTooSmall(std::size_t index)
      : Error("mass at index " + std::to_string(index) + " too small for perturbation"),
        index_(index) {}
  std::size_t index() const noexcept { return index_; }

 private:
  std::size_t index_;
};

}  // namespace eot
