#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <string>

#include <boost/math/special_functions/gamma.hpp>

#include "ineq/error.hpp"

namespace ineq {

/// Outcome of a sample ratio mismatch check. A failed verdict marks every
/// comparison of the segment as untrustworthy; the comparisons are still
/// reported.
struct SrmVerdict {
  double statistic = 0.0;
  double p_value = 1.0;
  int degrees_of_freedom = 0;
  double alpha = 0.001;
  bool pass = true;
};

inline constexpr double default_srm_alpha = 0.001;

/// Pearson chi-squared goodness of fit of observed arm sizes to the designed
/// split.
///
/// Variants absent from `observed` count as zero. A variant observed with a
/// designed fraction of zero (or missing from the design) is an error.
inline SrmVerdict srm_check(const std::map<std::string, std::uint64_t>& observed,
                            const std::map<std::string, double>& designed,
                            double alpha = default_srm_alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw validation_error(errc::out_of_domain, "alpha must lie in (0, 1)");
  }
  double fraction_sum = 0.0;
  for (const auto& [variant, f] : designed) {
    if (!(f >= 0.0) || !std::isfinite(f)) {
      throw validation_error(errc::bad_config, "designed fraction of '" + variant + "' is invalid");
    }
    fraction_sum += f;
  }
  if (std::abs(fraction_sum - 1.0) > 1e-9) {
    throw validation_error(errc::bad_config, "designed fractions do not sum to one");
  }

  std::uint64_t total = 0;
  for (const auto& [variant, count] : observed) {
    auto it = designed.find(variant);
    if (count > 0 && (it == designed.end() || it->second == 0.0)) {
      throw validation_error(errc::data_error,
                             "variant '" + variant + "' observed but not in the designed split");
    }
    total += count;
  }
  if (total == 0) {
    throw validation_error(errc::empty_input, "no observations for the SRM check");
  }

  SrmVerdict v;
  v.alpha = alpha;
  const double n = static_cast<double>(total);
  int cells = 0;
  for (const auto& [variant, f] : designed) {
    if (f == 0.0) continue;
    ++cells;
    auto it = observed.find(variant);
    const double o = it == observed.end() ? 0.0 : static_cast<double>(it->second);
    const double e = n * f;
    v.statistic += (o - e) * (o - e) / e;
  }
  v.degrees_of_freedom = cells - 1;
  if (v.degrees_of_freedom <= 0) {
    v.p_value = 1.0;
  } else {
    v.p_value = boost::math::gamma_q(0.5 * v.degrees_of_freedom, 0.5 * v.statistic);
  }
  v.pass = !(v.p_value < alpha);
  return v;
}

}  // namespace ineq
