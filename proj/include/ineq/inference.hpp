#pragma once

#include <cmath>
#include <numbers>
#include <string_view>

#include "ineq/atkinson.hpp"
#include "ineq/error.hpp"

namespace ineq {

/// Two-sided standard normal tail probability 2 * (1 - Phi(|t|)).
inline double normal_two_sided_p(double t) {
  if (!std::isfinite(t)) {
    throw validation_error(errc::non_finite_value, "test statistic must be finite");
  }
  return std::erfc(std::abs(t) / std::numbers::sqrt2);
}

/// Alternative hypothesis for `compare`.
enum class Sidedness {
  two_sided,
  greater,  ///< treatment index above control
  less,     ///< treatment index below control
};

enum class Direction { inequality_increasing, inequality_decreasing, none };

inline std::string_view to_string(Direction d) noexcept {
  switch (d) {
    case Direction::inequality_increasing: return "inequality-increasing";
    case Direction::inequality_decreasing: return "inequality-decreasing";
    case Direction::none: return "none";
  }
  return "none";
}

inline std::string_view to_string(Sidedness s) noexcept {
  switch (s) {
    case Sidedness::two_sided: return "two-sided";
    case Sidedness::greater: return "greater";
    case Sidedness::less: return "less";
  }
  return "two-sided";
}

struct ComparisonResult {
  double delta = 0.0;
  double var_delta = 0.0;
  double t_stat = 0.0;
  double p_value = 1.0;
  double alpha = 0.05;
  bool significant = false;
  /// Sign of delta for significant results, `none` otherwise.
  Direction direction = Direction::none;
  Sidedness sidedness = Sidedness::two_sided;
};

namespace detail {

inline double p_value_for(double t, Sidedness side) {
  switch (side) {
    case Sidedness::two_sided: return normal_two_sided_p(t);
    case Sidedness::greater: return 0.5 * std::erfc(t / std::numbers::sqrt2);
    case Sidedness::less: return 0.5 * std::erfc(-t / std::numbers::sqrt2);
  }
  return normal_two_sided_p(t);
}

inline void check_alpha(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw validation_error(errc::out_of_domain, "alpha must lie in (0, 1)");
  }
}

}  // namespace detail

/// Normal test of an index difference given its variance.
///
/// The statistic is delta / sqrt(var_delta). Shared by the in-experiment and
/// site-wide comparisons.
inline ComparisonResult test_difference(double delta, double var_delta, double alpha,
                                        Sidedness side = Sidedness::two_sided) {
  detail::check_alpha(alpha);
  if (!std::isfinite(delta) || !std::isfinite(var_delta) || var_delta < 0.0) {
    throw validation_error(errc::non_finite_value, "delta and its variance must be finite");
  }
  ComparisonResult r;
  r.delta = delta;
  r.var_delta = var_delta;
  r.alpha = alpha;
  r.sidedness = side;
  if (var_delta == 0.0) {
    if (delta != 0.0) {
      throw validation_error(errc::degenerate_variance,
                             "variance of the difference is zero but the difference is not");
    }
    r.t_stat = 0.0;
    r.p_value = 1.0;
    return r;
  }
  r.t_stat = delta / std::sqrt(var_delta);
  r.p_value = detail::p_value_for(r.t_stat, side);
  r.significant = r.p_value < alpha;
  if (r.significant && delta != 0.0) {
    r.direction = delta > 0.0 ? Direction::inequality_increasing : Direction::inequality_decreasing;
  }
  return r;
}

/// Treatment-vs-control test of equal Atkinson indices.
inline ComparisonResult compare(const AtkinsonEstimate& treatment, const AtkinsonEstimate& control,
                                double alpha = 0.05, Sidedness side = Sidedness::two_sided) {
  if (treatment.epsilon != control.epsilon) {
    throw validation_error(errc::epsilon_mismatch,
                           "treatment and control estimates use different epsilons");
  }
  if (treatment.n < 2 || control.n < 2) {
    throw validation_error(errc::insufficient_sample, "each arm needs at least two members");
  }
  return test_difference(treatment.index - control.index, treatment.variance() + control.variance(),
                         alpha, side);
}

}  // namespace ineq
