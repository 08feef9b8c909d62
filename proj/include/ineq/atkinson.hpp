#pragma once

#include <algorithm>
#include <cmath>
#include <compare>
#include <cstdint>
#include <limits>
#include <span>
#include <sstream>
#include <string>

#include "ineq/compensated_sum.hpp"
#include "ineq/error.hpp"

namespace ineq {

/// Inequality aversion, restricted to the open interval (0, 1).
///
/// Values at or above one make a zero metric value singular, and zero values
/// are common in engagement data, so anything outside (0, 1) is rejected here
/// rather than at each use site.
class AversionParam {
 public:
  explicit AversionParam(double epsilon) : value_(epsilon) {
    if (!(epsilon > 0.0 && epsilon < 1.0)) {
      std::ostringstream msg;
      msg << "epsilon must lie strictly inside (0, 1), got " << epsilon;
      throw validation_error(errc::out_of_domain, msg.str());
    }
  }

  double value() const noexcept { return value_; }
  /// The exponent 1 - epsilon applied to metric values.
  double power() const noexcept { return 1.0 - value_; }

  friend auto operator<=>(const AversionParam&, const AversionParam&) = default;

 private:
  double value_;
};

namespace detail {

inline void check_value(double x) {
  if (!std::isfinite(x)) {
    throw validation_error(errc::non_finite_value, "metric values must be finite");
  }
  if (x < 0.0) {
    std::ostringstream msg;
    msg << "metric values must be non-negative, got " << x;
    throw validation_error(errc::negative_value, msg.str());
  }
}

/// x^(1-eps) with 0^(1-eps) = 0.
inline double pow_or_zero(double x, double exponent) noexcept {
  return x == 0.0 ? 0.0 : std::pow(x, exponent);
}

/// Delta-method variance of the index for the plug-in means and covariance terms.
///
/// `mean_pow` is the mean of x^(1-eps), `mean` the mean of x. The three
/// covariance terms are the plug-in estimates for (x^(1-eps), x).
inline double delta_sigma2(double epsilon, double mean_pow, double mean, double cov_pow_pow,
                           double cov_pow_x, double cov_x_x) noexcept {
  const double one_minus = 1.0 - epsilon;
  const double term_pp = cov_pow_pow * std::pow(mean_pow, 2.0 * epsilon / one_minus) /
                         (one_minus * one_minus * mean * mean);
  const double term_px = 2.0 * cov_pow_x * std::pow(mean_pow, (1.0 + epsilon) / one_minus) /
                         (one_minus * mean * mean * mean);
  const double term_xx = cov_x_x * std::pow(mean_pow, 2.0 / one_minus) / (mean * mean * mean * mean);
  return term_pp - term_px + term_xx;
}

/// 1 - mean_pow^(1/(1-eps)) / mean, clamped into [0, 1).
inline double index_from_means(double epsilon, double mean_pow, double mean) noexcept {
  const double ede = std::pow(mean_pow, 1.0 / (1.0 - epsilon));
  return std::clamp(1.0 - ede / mean, 0.0, std::nextafter(1.0, 0.0));
}

}  // namespace detail

/// Checks that `xs` is a usable metric sample: non-empty, finite,
/// non-negative, and with at least one strictly positive value.
inline void validate_metric_vector(std::span<const double> xs) {
  if (xs.empty()) {
    throw validation_error(errc::empty_input, "metric sample is empty");
  }
  bool any_positive = false;
  for (double x : xs) {
    detail::check_value(x);
    any_positive = any_positive || x > 0.0;
  }
  if (!any_positive) {
    throw validation_error(errc::zero_total, "metric sample has zero mean");
  }
}

/// Atkinson index of `xs` evaluated directly from its definition.
inline double atkinson(std::span<const double> xs, AversionParam eps) {
  validate_metric_vector(xs);
  const auto [lo, hi] = std::minmax_element(xs.begin(), xs.end());
  if (*lo == *hi) {
    return 0.0;
  }
  compensated_sum total;
  compensated_sum total_pow;
  for (double x : xs) {
    total += x;
    total_pow += detail::pow_or_zero(x, eps.power());
  }
  const auto n = static_cast<double>(xs.size());
  return detail::index_from_means(eps.value(), total_pow.value() / n, total.value() / n);
}

/// Mergeable buffer of the power sums that determine an Atkinson index and its
/// asymptotic variance at one epsilon.
///
/// Sums are unnormalized; divide by n to get the sample means used by the
/// covariance plug-ins. The sample minimum and maximum ride along so that an
/// all-equal sample finalizes to exactly zero.
class MomentSums {
 public:
  explicit MomentSums(AversionParam eps) : eps_(eps) {}

  void add(double x) {
    detail::check_value(x);
    const double p = detail::pow_or_zero(x, eps_.power());
    ++n_;
    s1_ += x;
    s_pow_ += p;
    s2_ += x * x;
    s_pow2_ += p * p;
    s_cross_ += x * p;
    min_ = std::min(min_, x);
    max_ = std::max(max_, x);
  }

  /// Adds `count` members whose value is zero. Only n changes.
  void add_zeros(std::uint64_t count) noexcept {
    if (count == 0) return;
    n_ += count;
    min_ = std::min(min_, 0.0);
    max_ = std::max(max_, 0.0);
  }

  MomentSums& merge(const MomentSums& other) {
    if (other.eps_ != eps_) {
      std::ostringstream msg;
      msg << "cannot merge buffers built at epsilon " << eps_.value() << " and "
          << other.eps_.value();
      throw validation_error(errc::epsilon_mismatch, msg.str());
    }
    n_ += other.n_;
    s1_ += other.s1_;
    s_pow_ += other.s_pow_;
    s2_ += other.s2_;
    s_pow2_ += other.s_pow2_;
    s_cross_ += other.s_cross_;
    min_ = std::min(min_, other.min_);
    max_ = std::max(max_, other.max_);
    return *this;
  }

  AversionParam epsilon() const noexcept { return eps_; }
  std::uint64_t n() const noexcept { return n_; }
  /// Sum of x.
  double s1() const noexcept { return s1_.value(); }
  /// Sum of x^(1-eps).
  double s_pow() const noexcept { return s_pow_.value(); }
  /// Sum of x^2.
  double s2() const noexcept { return s2_.value(); }
  /// Sum of x^(2-2eps).
  double s_pow2() const noexcept { return s_pow2_.value(); }
  /// Sum of x^(2-eps).
  double s_cross() const noexcept { return s_cross_.value(); }
  /// Smallest value seen, +inf when empty.
  double min() const noexcept { return min_; }
  /// Largest value seen, -inf when empty.
  double max() const noexcept { return max_; }
  bool all_equal() const noexcept { return n_ > 0 && min_ == max_; }

 private:
  AversionParam eps_;
  std::uint64_t n_ = 0;
  compensated_sum s1_;
  compensated_sum s_pow_;
  compensated_sum s2_;
  compensated_sum s_pow2_;
  compensated_sum s_cross_;
  double min_ = std::numeric_limits<double>::infinity();
  double max_ = -std::numeric_limits<double>::infinity();
};

inline MomentSums moment_sums(std::span<const double> xs, AversionParam eps) {
  MomentSums ms(eps);
  for (double x : xs) ms.add(x);
  return ms;
}

inline MomentSums merge(MomentSums a, const MomentSums& b) {
  a.merge(b);
  return a;
}

/// Index, asymptotic variance and sample size at one epsilon.
///
/// `sigma2` is the variance of sqrt(n) * index; the variance of the index
/// itself is `variance() == sigma2 / n`.
struct AtkinsonEstimate {
  double index = 0.0;
  double sigma2 = 0.0;
  std::uint64_t n = 0;
  AversionParam epsilon{0.5};
  /// Set when a small negative sigma2 from cancellation was clamped to zero.
  bool sigma2_clamped = false;

  double variance() const noexcept { return n == 0 ? 0.0 : sigma2 / static_cast<double>(n); }
};

/// Finalizes a buffer into an index and its delta-method variance.
inline AtkinsonEstimate estimate_from_sums(const MomentSums& ms) {
  if (ms.n() < 2) {
    throw validation_error(errc::insufficient_sample,
                           "at least two observations are needed for a variance");
  }
  if (!(ms.s1() > 0.0)) {
    throw validation_error(errc::zero_total, "metric total is zero");
  }
  AtkinsonEstimate est;
  est.n = ms.n();
  est.epsilon = ms.epsilon();
  if (ms.all_equal()) {
    return est;
  }

  const double n = static_cast<double>(ms.n());
  const double eps = ms.epsilon().value();
  const double mean = ms.s1() / n;
  const double mean_pow = ms.s_pow() / n;
  const double cov_pp = ms.s_pow2() / n - mean_pow * mean_pow;
  const double cov_px = ms.s_cross() / n - mean * mean_pow;
  const double cov_xx = ms.s2() / n - mean * mean;

  est.index = detail::index_from_means(eps, mean_pow, mean);
  const double sigma2 = detail::delta_sigma2(eps, mean_pow, mean, cov_pp, cov_px, cov_xx);
  if (sigma2 < 0.0) {
    est.sigma2 = 0.0;
    est.sigma2_clamped = true;
  } else {
    est.sigma2 = sigma2;
  }
  return est;
}

/// Equally distributed equivalent total: total * (1 - index).
inline double utility(double total, double index) {
  if (!(index >= 0.0 && index < 1.0)) {
    throw validation_error(errc::out_of_domain, "index must lie in [0, 1)");
  }
  if (!(total >= 0.0) || !std::isfinite(total)) {
    throw validation_error(errc::out_of_domain, "total must be finite and non-negative");
  }
  return total * (1.0 - index);
}

/// Atkinson index of a two-person population in which the richer member holds
/// `share` of `total`. Independent of `total`.
inline double atkinson_share(double total, double share, AversionParam eps) {
  if (!(total > 0.0) || !std::isfinite(total)) {
    throw validation_error(errc::out_of_domain, "total must be positive");
  }
  if (!(share >= 0.5 && share < 1.0)) {
    throw validation_error(errc::out_of_domain, "richest share must lie in [0.5, 1)");
  }
  if (share == 0.5) {
    return 0.0;
  }
  const double p = eps.power();
  const double mean_pow = 0.5 * (std::pow(share, p) + std::pow(1.0 - share, p));
  // Shares have mean 1/2.
  return detail::index_from_means(eps.value(), mean_pow, 0.5);
}

}  // namespace ineq
