#pragma once

#include <algorithm>
#include <cstdint>
#include <string>
#include <vector>

#include "ineq/atkinson.hpp"
#include "ineq/error.hpp"
#include "ineq/inference.hpp"

namespace ineq {

/// In-experiment buffer of one variant of a targeted segment.
struct VariantSample {
  std::string variant;
  MomentSums moments;

  double x_total() const noexcept { return moments.s1(); }
  double y_total() const noexcept { return moments.s_pow(); }
  std::uint64_t n() const noexcept { return moments.n(); }
};

/// Everything needed to extrapolate a segment-level experiment to the whole
/// member base under a 100% ramp of each variant.
///
/// `x_rest` and `y_rest` are the totals of x and x^(1-eps) over members
/// outside the segment. They are observed, not sampled, and contribute no
/// variance.
struct SitewideInputs {
  AversionParam epsilon;
  double x_rest = 0.0;
  double y_rest = 0.0;
  std::uint64_t n_all = 0;
  std::uint64_t n_seg = 0;
  std::vector<VariantSample> variants;

  const VariantSample& variant(const std::string& name) const {
    auto it = std::find_if(variants.begin(), variants.end(),
                           [&](const VariantSample& v) { return v.variant == name; });
    if (it == variants.end()) {
      throw validation_error(errc::missing_variant, "variant '" + name + "' is not present");
    }
    return *it;
  }

  void validate() const {
    if (n_all == 0) {
      throw validation_error(errc::out_of_domain, "n_all must be positive");
    }
    if (n_seg > n_all) {
      throw validation_error(errc::out_of_domain, "segment is larger than the population");
    }
    if (!(x_rest >= 0.0) || !(y_rest >= 0.0) || !std::isfinite(x_rest) || !std::isfinite(y_rest)) {
      throw validation_error(errc::out_of_domain, "rest totals must be finite and non-negative");
    }
    if (n_seg == n_all && (x_rest != 0.0 || y_rest != 0.0)) {
      throw validation_error(errc::out_of_domain,
                             "segment covers the population but rest totals are non-zero");
    }
    for (const auto& v : variants) {
      if (v.moments.epsilon() != epsilon) {
        throw validation_error(errc::epsilon_mismatch,
                               "variant '" + v.variant + "' was accumulated at another epsilon");
      }
      if (v.n() == 0) {
        throw validation_error(errc::insufficient_sample,
                               "variant '" + v.variant + "' has no members");
      }
    }
  }
};

/// Site-wide index of the universe where `variant` is ramped to the whole
/// segment. `sigma2` carries the (n_seg/n_all)^2 scale; divide by the variant
/// size (as `variance()` does) for the variance of the index.
inline AtkinsonEstimate extrapolate(const SitewideInputs& in, const std::string& variant) {
  in.validate();
  const VariantSample& v = in.variant(variant);
  const double n_all = static_cast<double>(in.n_all);
  const double n_v = static_cast<double>(v.n());
  const double scale = static_cast<double>(in.n_seg) / n_v;
  const double x_sw = in.x_rest + scale * v.x_total();
  const double y_sw = in.y_rest + scale * v.y_total();
  if (!(x_sw > 0.0)) {
    throw validation_error(errc::zero_total, "extrapolated site-wide total is zero");
  }

  AtkinsonEstimate est;
  est.n = v.n();
  est.epsilon = in.epsilon;
  const double eps = in.epsilon.value();
  const double mean = x_sw / n_all;
  const double mean_pow = y_sw / n_all;
  est.index = detail::index_from_means(eps, mean_pow, mean);

  // Covariance of (x^(1-eps), x) comes from the in-segment sample only.
  const double seg_mean = v.moments.s1() / n_v;
  const double seg_mean_pow = v.moments.s_pow() / n_v;
  const double cov_pp = v.moments.s_pow2() / n_v - seg_mean_pow * seg_mean_pow;
  const double cov_px = v.moments.s_cross() / n_v - seg_mean * seg_mean_pow;
  const double cov_xx = v.moments.s2() / n_v - seg_mean * seg_mean;
  const double frac = static_cast<double>(in.n_seg) / n_all;
  double sigma2 = v.moments.all_equal()
                      ? 0.0
                      : frac * frac * detail::delta_sigma2(eps, mean_pow, mean, cov_pp, cov_px, cov_xx);
  if (sigma2 < 0.0) {
    sigma2 = 0.0;
    est.sigma2_clamped = true;
  }
  est.sigma2 = sigma2;
  return est;
}

/// Compares the treatment and control universes. Their variances are added as
/// independent.
inline ComparisonResult sitewide_compare(const SitewideInputs& in, const std::string& treatment,
                                         const std::string& control, double alpha = 0.05,
                                         Sidedness side = Sidedness::two_sided) {
  const AtkinsonEstimate t = extrapolate(in, treatment);
  const AtkinsonEstimate c = extrapolate(in, control);
  return test_difference(t.index - c.index, t.variance() + c.variance(), alpha, side);
}

}  // namespace ineq
