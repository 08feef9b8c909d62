#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"

#include "ineq/atkinson.hpp"
#include "ineq/error.hpp"

namespace ineq {

struct SegmentConfig {
  std::string segment_id;
  std::map<std::string, double> designed_fractions;
  /// Size of the targeted segment for site-wide extrapolation. Defaults to the
  /// number of members observed in the segment.
  std::optional<std::uint64_t> n_seg;
};

/// Totals of x and x^(1-eps) over the members outside the targeted segment.
struct RestTotal {
  std::string metric;
  double epsilon = 0.0;
  double x_rest = 0.0;
  double y_rest = 0.0;
  /// When set, applies to this segment only; otherwise to every segment.
  std::optional<std::string> segment_id;
};

struct PopulationConfig {
  std::uint64_t n_all = 0;
  std::vector<RestTotal> rest_totals;

  const RestTotal* find_rest(const std::string& metric, double epsilon,
                             const std::string& segment_id) const {
    const RestTotal* fallback = nullptr;
    for (const auto& r : rest_totals) {
      if (r.metric != metric || r.epsilon != epsilon) continue;
      if (r.segment_id) {
        if (*r.segment_id == segment_id) return &r;
      } else if (!fallback) {
        fallback = &r;
      }
    }
    return fallback;
  }
};

struct ExperimentConfig {
  std::string experiment_id;
  std::string control_variant;
  std::vector<SegmentConfig> segments;
  std::vector<std::string> metrics;
  std::vector<AversionParam> epsilons;
  std::optional<PopulationConfig> population;

  const SegmentConfig* find_segment(const std::string& id) const {
    for (const auto& s : segments) {
      if (s.segment_id == id) return &s;
    }
    return nullptr;
  }

  void validate() const {
    auto fail = [&](const std::string& what) {
      throw validation_error(errc::bad_config, "experiment '" + experiment_id + "': " + what);
    };
    if (experiment_id.empty()) fail("experiment_id is empty");
    if (control_variant.empty()) fail("control_variant is empty");
    if (segments.empty()) fail("no segments");
    if (metrics.empty()) fail("no metrics");
    if (epsilons.empty()) fail("no epsilons");
    std::set<std::string> seen_segments;
    for (const auto& s : segments) {
      if (s.segment_id.empty()) fail("empty segment_id");
      if (!seen_segments.insert(s.segment_id).second) fail("duplicate segment " + s.segment_id);
      double sum = 0.0;
      for (const auto& [variant, f] : s.designed_fractions) {
        if (variant.empty()) fail("empty variant name");
        if (!(f >= 0.0 && f <= 1.0)) fail("fraction of " + variant + " outside [0, 1]");
        sum += f;
      }
      if (std::abs(sum - 1.0) > 1e-9) fail("fractions of segment " + s.segment_id + " do not sum to 1");
      if (!s.designed_fractions.contains(control_variant)) {
        fail("control variant missing from segment " + s.segment_id);
      }
    }
    std::set<std::string> seen_metrics;
    for (const auto& m : metrics) {
      if (m.empty()) fail("empty metric name");
      if (!seen_metrics.insert(m).second) fail("duplicate metric " + m);
    }
    std::set<double> seen_eps;
    for (const auto& e : epsilons) {
      if (!seen_eps.insert(e.value()).second) fail("duplicate epsilon");
    }
    if (population) {
      if (population->n_all == 0) fail("population.n_all must be positive");
      for (const auto& r : population->rest_totals) {
        if (!(r.x_rest >= 0.0) || !(r.y_rest >= 0.0)) fail("rest totals must be non-negative");
      }
    }
  }
};

namespace detail {

template <typename T>
T required(const nlohmann::json& j, const char* key, const std::string& where) {
  if (!j.is_object() || !j.contains(key)) {
    throw validation_error(errc::bad_config, where + ": missing '" + key + "'");
  }
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw validation_error(errc::bad_config, where + ": bad '" + key + "': " + e.what());
  }
}

}  // namespace detail

inline std::vector<ExperimentConfig> parse_experiment_configs(const nlohmann::json& doc) {
  if (!doc.is_object() || !doc.contains("experiments") || !doc["experiments"].is_array()) {
    throw validation_error(errc::bad_config, "config: expected an 'experiments' array");
  }
  std::vector<ExperimentConfig> out;
  std::set<std::string> ids;
  for (const auto& e : doc["experiments"]) {
    ExperimentConfig cfg;
    cfg.experiment_id = detail::required<std::string>(e, "experiment_id", "experiment");
    const std::string where = "experiment '" + cfg.experiment_id + "'";
    cfg.control_variant = detail::required<std::string>(e, "control_variant", where);
    for (const auto& s : detail::required<nlohmann::json>(e, "segments", where)) {
      SegmentConfig seg;
      seg.segment_id = detail::required<std::string>(s, "segment_id", where);
      seg.designed_fractions =
          detail::required<std::map<std::string, double>>(s, "designed_fractions", where);
      if (s.contains("n_seg")) seg.n_seg = detail::required<std::uint64_t>(s, "n_seg", where);
      cfg.segments.push_back(std::move(seg));
    }
    cfg.metrics = detail::required<std::vector<std::string>>(e, "metrics", where);
    for (double eps : detail::required<std::vector<double>>(e, "epsilons", where)) {
      cfg.epsilons.emplace_back(eps);
    }
    if (e.contains("population") && !e["population"].is_null()) {
      const auto& p = e["population"];
      PopulationConfig pop;
      pop.n_all = detail::required<std::uint64_t>(p, "n_all", where + " population");
      if (p.contains("rest_totals")) {
        for (const auto& r : p["rest_totals"]) {
          RestTotal rt;
          rt.metric = detail::required<std::string>(r, "metric", where + " rest_totals");
          rt.epsilon = detail::required<double>(r, "epsilon", where + " rest_totals");
          rt.x_rest = detail::required<double>(r, "x_rest", where + " rest_totals");
          rt.y_rest = detail::required<double>(r, "y_rest", where + " rest_totals");
          if (r.contains("segment_id")) {
            rt.segment_id = detail::required<std::string>(r, "segment_id", where + " rest_totals");
          }
          pop.rest_totals.push_back(std::move(rt));
        }
      }
      cfg.population = std::move(pop);
    }
    cfg.validate();
    if (!ids.insert(cfg.experiment_id).second) {
      throw validation_error(errc::bad_config, "duplicate experiment " + cfg.experiment_id);
    }
    out.push_back(std::move(cfg));
  }
  return out;
}

inline std::vector<ExperimentConfig> load_experiment_configs(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw io_error("cannot open config " + path.string());
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::parse_error& e) {
    throw validation_error(errc::bad_config, path.string() + ": " + e.what());
  }
  return parse_experiment_configs(doc);
}

}  // namespace ineq
