#pragma once

#include <cstdio>
#include <ostream>
#include <string>

#include "json.hpp"

#include "ineq/aggregation.hpp"
#include "ineq/atkinson.hpp"
#include "ineq/bootstrap.hpp"
#include "ineq/csv.hpp"
#include "ineq/elicitation.hpp"
#include "ineq/inference.hpp"
#include "ineq/network.hpp"
#include "ineq/srm.hpp"

// JSON and CSV renderings of the library's results.

namespace ineq {

using json = nlohmann::ordered_json;

/// Reading of an index difference as a share of the metric a decision-maker
/// with this epsilon would forgo.
inline std::string ede_reading(double delta) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4g", 100.0 * delta);
  return std::string("equivalent to giving up ") + buf + "% of the metric";
}

inline json to_json(const AtkinsonEstimate& e) {
  json j;
  j["epsilon"] = e.epsilon.value();
  j["index"] = e.index;
  j["sigma2"] = e.sigma2;
  j["variance"] = e.variance();
  j["n"] = e.n;
  if (e.sigma2_clamped) j["sigma2_clamped"] = true;
  return j;
}

inline json to_json(const ComparisonResult& r) {
  json j;
  j["delta"] = r.delta;
  j["var_delta"] = r.var_delta;
  j["t"] = r.t_stat;
  j["p"] = r.p_value;
  j["alpha"] = r.alpha;
  j["significant"] = r.significant;
  j["direction"] = to_string(r.direction);
  j["test"] = to_string(r.sidedness);
  j["ede_reading"] = ede_reading(r.delta);
  return j;
}

inline json to_json(const SrmVerdict& v) {
  json j;
  j["statistic"] = v.statistic;
  j["p"] = v.p_value;
  j["df"] = v.degrees_of_freedom;
  j["alpha"] = v.alpha;
  j["pass"] = v.pass;
  return j;
}

inline json to_json(const InputCounters& c) {
  return json{{"rows_read", c.rows_read},
              {"rows_used", c.rows_used},
              {"rows_skipped", c.rows_skipped},
              {"rows_malformed", c.rows_malformed}};
}

inline json to_json(const ScanCounters& c) {
  json j;
  j["assignments"] = to_json(c.assignments);
  j["metrics"] = to_json(c.metrics);
  j["unknown_experiment_rows"] = c.unknown_experiment_rows;
  j["unknown_segment_rows"] = c.unknown_segment_rows;
  j["duplicate_assignment_rows"] = c.duplicate_assignment_rows;
  j["conflicting_assignment_rows"] = c.conflicting_assignment_rows;
  j["unassigned_metric_rows"] = c.unassigned_metric_rows;
  j["unconfigured_metric_rows"] = c.unconfigured_metric_rows;
  j["zero_filled"] = c.zero_filled;
  return j;
}

inline json to_json(const ComparisonEntry& c) {
  json j;
  j["experiment_id"] = c.experiment_id;
  j["segment_id"] = c.segment_id;
  j["metric"] = c.metric;
  j["epsilon"] = c.epsilon;
  j["treatment_variant"] = c.treatment_variant;
  j["control_variant"] = c.control_variant;
  j["treatment"] = c.treatment ? to_json(*c.treatment) : json(nullptr);
  j["control"] = c.control ? to_json(*c.control) : json(nullptr);
  if (c.result) {
    j["delta"] = c.result->delta;
    j["var_delta"] = c.result->var_delta;
    j["t"] = c.result->t_stat;
    j["p"] = c.result->p_value;
    j["significant"] = c.result->significant;
    j["direction"] = to_string(c.result->direction);
    j["ede_reading"] = ede_reading(c.result->delta);
  }
  json srm = to_json(c.srm);
  if (!c.srm_error.empty()) {
    srm["pass"] = false;
    srm["error"] = c.srm_error;
  }
  j["srm"] = srm;
  if (c.sitewide) {
    const auto& sw = *c.sitewide;
    j["sitewide"] = json{{"delta", sw.comparison.delta},
                         {"var_delta", sw.comparison.var_delta},
                         {"t", sw.comparison.t_stat},
                         {"p", sw.comparison.p_value},
                         {"significant", sw.comparison.significant},
                         {"direction", to_string(sw.comparison.direction)},
                         {"ede_reading", ede_reading(sw.comparison.delta)},
                         {"n_all", sw.n_all},
                         {"n_seg", sw.n_seg},
                         {"treatment", to_json(sw.treatment)},
                         {"control", to_json(sw.control)}};
  } else if (!c.sitewide_error.empty()) {
    j["sitewide_error"] = c.sitewide_error;
  }
  if (!c.error.empty()) j["error"] = c.error;
  return j;
}

inline json to_json(const ScanReport& r) {
  json j;
  j["alpha"] = r.alpha;
  j["srm_alpha"] = r.srm_alpha;
  j["zero_fill"] = r.zero_fill;
  j["partitions"] = r.partitions;
  j["comparison_count"] = r.comparison_count();
  json comparisons = json::array();
  for (const auto& c : r.comparisons) comparisons.push_back(to_json(c));
  j["comparisons"] = std::move(comparisons);
  json estimates = json::array();
  for (const auto& b : r.buffers) {
    json e{{"experiment_id", b.key.experiment_id},
           {"segment_id", b.key.segment_id},
           {"variant", b.key.variant},
           {"metric", b.key.metric},
           {"epsilon", b.key.epsilon},
           {"n", b.sums.n()}};
    if (b.estimate) {
      e["index"] = b.estimate->index;
      e["sigma2"] = b.estimate->sigma2;
      e["variance"] = b.estimate->variance();
    } else {
      e["error"] = b.error;
    }
    estimates.push_back(std::move(e));
  }
  j["estimates"] = std::move(estimates);
  json srm = json::array();
  for (const auto& s : r.srm) {
    json e{{"experiment_id", s.experiment_id}, {"segment_id", s.segment_id}, {"observed", s.observed},
           {"designed", s.designed}};
    e["verdict"] = to_json(s.verdict);
    if (!s.error.empty()) e["error"] = s.error;
    srm.push_back(std::move(e));
  }
  j["srm"] = std::move(srm);
  j["counters"] = to_json(r.counters);
  j["warnings"] = r.warnings;
  return j;
}

inline json to_json(const RatioTable& t) {
  json j;
  j["rng"] = t.rng;
  j["distribution"] = json{{"type", "lognormal"}, {"mu", t.distribution.mu}, {"sigma", t.distribution.sigma}};
  json cells = json::array();
  for (const auto& c : t.cells) {
    cells.push_back(json{{"n", c.n},
                         {"epsilon", c.epsilon},
                         {"mean_ratio", c.mean_ratio},
                         {"p10", c.p10},
                         {"p90", c.p90},
                         {"stddev", c.stddev},
                         {"repeats", c.repeats},
                         {"B", c.bootstrap_runs},
                         {"seed", c.seed}});
  }
  j["cells"] = std::move(cells);
  return j;
}

inline void write_csv(std::ostream& out, const RatioTable& t) {
  out << "n,epsilon,mean_ratio,p10,p90,repeats,B,seed\n";
  char buf[256];
  for (const auto& c : t.cells) {
    std::snprintf(buf, sizeof buf, "%llu,%.17g,%.6f,%.6f,%.6f,%u,%u,%llu\n",
                  static_cast<unsigned long long>(c.n), c.epsilon, c.mean_ratio, c.p10, c.p90, c.repeats,
                  c.bootstrap_runs, static_cast<unsigned long long>(c.seed));
    out << buf;
  }
}

inline void write_csv(std::ostream& out, const CohortReport& r) {
  out << "member_id,diversity,bucket\n";
  char buf[64];
  for (const auto& m : r.members) {
    out << csv_escape(m.member_id) << ',';
    if (m.diversity) {
      std::snprintf(buf, sizeof buf, "%.17g", *m.diversity);
      out << buf;
    }
    out << ',' << to_string(m.bucket) << '\n';
  }
}

inline json to_json(const ChoiceScenario& s) {
  const auto v = s.values();
  return json{{"total", s.total}, {"richest_share", s.richest_share}, {"values", {v[0], v[1]}}};
}

inline json to_json(const Question& q) {
  return json{{"question_id", q.question_id}, {"option_a", to_json(q.option_a)},
              {"option_b", to_json(q.option_b)}};
}

/// Full public state of a session.
inline json to_json(const ElicitationSession& s) {
  json j;
  j["session_id"] = s.id();
  j["status"] = to_string(s.status());
  j["interval"] = {s.lo(), s.hi()};
  j["tolerance"] = s.params().tolerance;
  json history = json::array();
  for (const auto& h : s.history()) {
    history.push_back(json{{"question_id", h.question.question_id},
                           {"epsilon_mid", h.question.epsilon_mid},
                           {"choice", h.choice == Choice::a ? "A" : "B"}});
  }
  j["history"] = std::move(history);
  if (s.outstanding()) j["question"] = to_json(*s.outstanding());
  if (auto eps = s.epsilon()) j["epsilon"] = *eps;
  if (auto b = s.boundary()) j["boundary"] = *b;
  return j;
}

}  // namespace ineq
