#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <exception>
#include <initializer_list>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "json.hpp"

#include "ineq/atkinson.hpp"
#include "ineq/error.hpp"

namespace ineq {

/// Name of the random stream construction, recorded in every ratio table.
inline constexpr std::string_view rng_algorithm =
    "mt19937_64 seeded per (seed, sample size, repeat, stream) via splitmix64; "
    "indices by 128-bit multiply-shift; std::lognormal_distribution (libstdc++)";

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Deterministic child seed for one unit of work.
inline std::uint64_t derive_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> path) noexcept {
  std::uint64_t s = splitmix64(seed);
  for (auto p : path) s = splitmix64(s ^ splitmix64(p + 0x632BE59BD9B4E019ULL));
  return s;
}

/// Uniform index in [0, n) from one 64-bit draw.
inline std::size_t bounded(std::mt19937_64& rng, std::size_t n) noexcept {
  __extension__ using wide = unsigned __int128;
  return static_cast<std::size_t>((static_cast<wide>(rng()) * n) >> 64);
}

inline double sample_variance(std::span<const double> v) {
  if (v.size() < 2) return 0.0;
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return ss / static_cast<double>(v.size() - 1);
}

/// Bootstrap variance of the index at several epsilons, sharing each resample
/// across epsilons.
inline std::vector<double> bootstrap_variances(std::span<const double> xs,
                                               std::span<const AversionParam> eps,
                                               std::uint32_t runs, std::uint64_t seed) {
  validate_metric_vector(xs);
  if (runs < 2) throw validation_error(errc::insufficient_sample, "need at least two bootstrap runs");
  const std::size_t n = xs.size();
  const std::size_t k = eps.size();
  const std::size_t stride = k + 1;
  // Row i holds x_i followed by x_i^(1-eps_j) for each epsilon.
  std::vector<double> table(n * stride);
  for (std::size_t i = 0; i < n; ++i) {
    table[i * stride] = xs[i];
    for (std::size_t j = 0; j < k; ++j) table[i * stride + 1 + j] = pow_or_zero(xs[i], eps[j].power());
  }

  std::mt19937_64 rng(seed);
  std::vector<std::vector<double>> indices(k, std::vector<double>(runs));
  std::vector<double> sums(stride);
  const double inv_n = 1.0 / static_cast<double>(n);
  for (std::uint32_t b = 0; b < runs; ++b) {
    std::fill(sums.begin(), sums.end(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      const double* row = &table[bounded(rng, n) * stride];
      for (std::size_t j = 0; j < stride; ++j) sums[j] += row[j];
    }
    const double mean = sums[0] * inv_n;
    for (std::size_t j = 0; j < k; ++j) {
      indices[j][b] = mean > 0.0 ? index_from_means(eps[j].value(), sums[j + 1] * inv_n, mean) : 0.0;
    }
  }
  std::vector<double> out(k);
  for (std::size_t j = 0; j < k; ++j) out[j] = sample_variance(indices[j]);
  return out;
}

/// Type-7 quantile of sorted data.
inline double quantile_sorted(std::span<const double> sorted, double q) {
  if (sorted.empty()) return 0.0;
  const double h = (static_cast<double>(sorted.size()) - 1.0) * q;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

}  // namespace detail

/// Variance of the index over `runs` resamples drawn with replacement.
/// Deterministic for a fixed seed. An all-equal sample gives 0.
inline double bootstrap_variance(std::span<const double> xs, AversionParam eps, std::uint32_t runs,
                                 std::uint64_t seed) {
  const AversionParam one[] = {eps};
  return detail::bootstrap_variances(xs, one, runs, seed)[0];
}

struct LognormalSpec {
  double mu = 0.0;
  double sigma = 1.0;
};

struct BootstrapConfig {
  std::vector<std::uint64_t> sample_sizes;
  std::vector<AversionParam> epsilons;
  std::uint32_t bootstrap_runs = 1000;
  std::uint32_t outer_repeats = 50;
  std::uint64_t rng_seed = 20210401;
  LognormalSpec distribution;
  /// Worker count; 0 means hardware concurrency. Does not affect results.
  unsigned threads = 0;

  void validate() const {
    auto fail = [](const std::string& what) { throw validation_error(errc::bad_config, what); };
    if (sample_sizes.empty()) fail("sample_sizes is empty");
    for (auto n : sample_sizes) {
      if (n < 2) fail("sample sizes must be at least 2");
    }
    if (epsilons.empty()) fail("epsilons is empty");
    if (bootstrap_runs < 100) fail("bootstrap_runs must be at least 100");
    if (outer_repeats < 1) fail("outer_repeats must be at least 1");
    if (!(distribution.sigma > 0.0) || !std::isfinite(distribution.mu)) {
      fail("lognormal sigma must be positive and mu finite");
    }
  }

  static BootstrapConfig from_json(const nlohmann::json& j) {
    BootstrapConfig cfg;
    try {
      cfg.sample_sizes = j.at("sample_sizes").get<std::vector<std::uint64_t>>();
      for (double e : j.at("epsilons").get<std::vector<double>>()) cfg.epsilons.emplace_back(e);
      cfg.bootstrap_runs = j.value("bootstrap_runs", cfg.bootstrap_runs);
      cfg.outer_repeats = j.value("outer_repeats", cfg.outer_repeats);
      cfg.rng_seed = j.value("rng_seed", cfg.rng_seed);
      if (j.contains("distribution")) {
        const auto& d = j["distribution"];
        if (d.value("type", std::string("lognormal")) != "lognormal") {
          throw validation_error(errc::bad_config, "only the lognormal distribution is supported");
        }
        cfg.distribution.mu = d.value("mu", 0.0);
        cfg.distribution.sigma = d.value("sigma", 1.0);
      }
    } catch (const nlohmann::json::exception& e) {
      throw validation_error(errc::bad_config, std::string("bootstrap config: ") + e.what());
    }
    cfg.validate();
    return cfg;
  }
};

/// Bootstrap-to-theoretical variance ratios of one (n, epsilon) cell.
struct RatioCell {
  std::uint64_t n = 0;
  double epsilon = 0.0;
  double mean_ratio = 0.0;
  double p10 = 0.0;
  double p90 = 0.0;
  double stddev = 0.0;
  std::uint32_t repeats = 0;
  std::uint32_t bootstrap_runs = 0;
  std::uint64_t seed = 0;
  /// Per-repeat ratios in repeat order.
  std::vector<double> ratios;
};

struct RatioTable {
  std::vector<RatioCell> cells;
  LognormalSpec distribution;
  std::string rng = std::string(rng_algorithm);

  const RatioCell* find(std::uint64_t n, double epsilon) const {
    for (const auto& c : cells) {
      if (c.n == n && c.epsilon == epsilon) return &c;
    }
    return nullptr;
  }
};

/// Draws a lognormal sample for one (sample size, repeat) unit.
inline std::vector<double> lognormal_sample(std::size_t n, const LognormalSpec& dist, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::lognormal_distribution<double> d(dist.mu, dist.sigma);
  std::vector<double> xs(n);
  for (auto& x : xs) x = d(rng);
  return xs;
}

/// For every (n, epsilon) cell, the mean over repeats of
/// bootstrap variance / (sigma2 / n), with its spread across repeats.
///
/// Each repeat draws one fresh sample per sample size, shared by all epsilons,
/// and resamples it once per bootstrap run. Work units are independent and
/// seeded from (seed, n, repeat), so the thread count does not change results.
inline RatioTable ratio_table(const BootstrapConfig& cfg) {
  cfg.validate();
  const std::size_t n_sizes = cfg.sample_sizes.size();
  const std::size_t n_eps = cfg.epsilons.size();
  const std::size_t units = n_sizes * cfg.outer_repeats;
  // ratios[size][eps][repeat]
  std::vector<std::vector<std::vector<double>>> ratios(
      n_sizes, std::vector<std::vector<double>>(n_eps, std::vector<double>(cfg.outer_repeats)));
  std::vector<std::exception_ptr> failures(units);

  auto run_unit = [&](std::size_t unit) {
    const std::size_t si = unit / cfg.outer_repeats;
    const std::size_t r = unit % cfg.outer_repeats;
    const std::uint64_t n = cfg.sample_sizes[si];
    const auto xs =
        lognormal_sample(n, cfg.distribution, detail::derive_seed(cfg.rng_seed, {n, r, 0}));
    const auto boot = detail::bootstrap_variances(xs, cfg.epsilons, cfg.bootstrap_runs,
                                                  detail::derive_seed(cfg.rng_seed, {n, r, 1}));
    for (std::size_t e = 0; e < n_eps; ++e) {
      const AtkinsonEstimate est = estimate_from_sums(moment_sums(xs, cfg.epsilons[e]));
      const double theory = est.variance();
      if (!(theory > 0.0)) {
        throw validation_error(errc::degenerate_variance, "theoretical variance is zero");
      }
      ratios[si][e][r] = boot[e] / theory;
    }
  };

  unsigned threads = cfg.threads == 0 ? std::max(1u, std::thread::hardware_concurrency()) : cfg.threads;
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, units));
  {
    std::vector<std::jthread> workers;
    for (unsigned w = 0; w < threads; ++w) {
      workers.emplace_back([&, w] {
        for (std::size_t u = w; u < units; u += threads) {
          try {
            run_unit(u);
          } catch (...) {
            failures[u] = std::current_exception();
          }
        }
      });
    }
  }
  for (const auto& f : failures) {
    if (f) std::rethrow_exception(f);
  }

  RatioTable table;
  table.distribution = cfg.distribution;
  for (std::size_t si = 0; si < n_sizes; ++si) {
    for (std::size_t e = 0; e < n_eps; ++e) {
      RatioCell cell;
      cell.n = cfg.sample_sizes[si];
      cell.epsilon = cfg.epsilons[e].value();
      cell.repeats = cfg.outer_repeats;
      cell.bootstrap_runs = cfg.bootstrap_runs;
      cell.seed = cfg.rng_seed;
      cell.ratios = ratios[si][e];
      double sum = 0.0;
      for (double x : cell.ratios) sum += x;
      cell.mean_ratio = sum / static_cast<double>(cell.ratios.size());
      cell.stddev = std::sqrt(detail::sample_variance(cell.ratios));
      auto sorted = cell.ratios;
      std::sort(sorted.begin(), sorted.end());
      cell.p10 = detail::quantile_sorted(sorted, 0.10);
      cell.p90 = detail::quantile_sorted(sorted, 0.90);
      table.cells.push_back(std::move(cell));
    }
  }
  return table;
}

}  // namespace ineq
