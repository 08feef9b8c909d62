#pragma once

#include <cmath>

namespace ineq {

/// Neumaier-compensated running sum.
///
/// Unlike plain Kahan summation this stays accurate when an addend is larger
/// than the running total, which happens routinely when two partial buffers
/// of very different size are merged.
class compensated_sum {
 public:
  constexpr compensated_sum() = default;

  void add(double value) noexcept {
    const double t = sum_ + value;
    if (std::abs(sum_) >= std::abs(value)) {
      comp_ += (sum_ - t) + value;
    } else {
      comp_ += (value - t) + sum_;
    }
    sum_ = t;
  }

  compensated_sum& operator+=(double value) noexcept {
    add(value);
    return *this;
  }

  compensated_sum& operator+=(const compensated_sum& other) noexcept {
    add(other.sum_);
    comp_ += other.comp_;
    return *this;
  }

  double value() const noexcept { return sum_ + comp_; }

  friend bool operator==(const compensated_sum&, const compensated_sum&) = default;

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

}  // namespace ineq
