#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <istream>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <tuple>
#include <unordered_map>
#include <vector>

#include "ineq/atkinson.hpp"
#include "ineq/config.hpp"
#include "ineq/csv.hpp"
#include "ineq/error.hpp"
#include "ineq/inference.hpp"
#include "ineq/sitewide.hpp"
#include "ineq/srm.hpp"

namespace ineq {

/// One readable slice of an input: a whole file, a byte range of a file, or
/// an in-memory document.
struct InputSource {
  std::string name;
  std::function<std::unique_ptr<std::istream>()> open;
  std::uint64_t byte_budget = std::numeric_limits<std::uint64_t>::max();
  bool has_header = true;

  static InputSource file(const std::filesystem::path& path) {
    return file_range(path, 0, std::numeric_limits<std::uint64_t>::max(), true);
  }

  /// Bytes [begin, end) of `path`; `begin` must be a line start.
  static InputSource file_range(const std::filesystem::path& path, std::uint64_t begin,
                                std::uint64_t end, bool has_header) {
    InputSource src;
    src.name = path.string();
    src.byte_budget = end == std::numeric_limits<std::uint64_t>::max() ? end : end - begin;
    src.has_header = has_header;
    src.open = [path, begin]() -> std::unique_ptr<std::istream> {
      auto in = std::make_unique<std::ifstream>(path, std::ios::binary);
      if (!*in) throw io_error("cannot open " + path.string());
      in->seekg(static_cast<std::streamoff>(begin));
      if (!*in) throw io_error("cannot seek in " + path.string());
      return in;
    };
    return src;
  }

  static InputSource text(std::string name, std::string content, bool has_header = true) {
    InputSource src;
    src.name = std::move(name);
    src.has_header = has_header;
    auto shared = std::make_shared<const std::string>(std::move(content));
    src.open = [shared]() -> std::unique_ptr<std::istream> {
      return std::make_unique<std::istringstream>(*shared);
    };
    return src;
  }
};

/// Splits `path` into at most `parts` line-aligned byte ranges. Only the first
/// range carries the header.
inline std::vector<InputSource> split_file(const std::filesystem::path& path, std::size_t parts) {
  std::error_code ec;
  const auto size = std::filesystem::file_size(path, ec);
  if (ec) throw io_error("cannot stat " + path.string() + ": " + ec.message());
  if (parts <= 1 || size == 0) return {InputSource::file(path)};

  std::ifstream in(path, std::ios::binary);
  if (!in) throw io_error("cannot open " + path.string());
  std::vector<std::uint64_t> starts{0};
  for (std::size_t p = 1; p < parts; ++p) {
    std::uint64_t target = size * p / parts;
    if (target <= starts.back()) continue;
    in.clear();
    in.seekg(static_cast<std::streamoff>(target - 1));
    // Advance to the first byte after a newline at or beyond target - 1.
    char c = 0;
    std::uint64_t pos = target - 1;
    while (in.get(c)) {
      ++pos;
      if (c == '\n') break;
    }
    if (!in || pos >= size) break;
    if (pos > starts.back()) starts.push_back(pos);
  }
  std::vector<InputSource> out;
  for (std::size_t i = 0; i < starts.size(); ++i) {
    const std::uint64_t end = i + 1 < starts.size() ? starts[i + 1] : size;
    out.push_back(InputSource::file_range(path, starts[i], end, i == 0));
  }
  return out;
}

struct BufferKey {
  std::string experiment_id;
  std::string segment_id;
  std::string variant;
  std::string metric;
  double epsilon = 0.0;

  friend auto operator<=>(const BufferKey&, const BufferKey&) = default;
};

struct InputCounters {
  std::uint64_t rows_read = 0;
  std::uint64_t rows_used = 0;
  std::uint64_t rows_skipped = 0;
  std::uint64_t rows_malformed = 0;

  InputCounters& operator+=(const InputCounters& o) {
    rows_read += o.rows_read;
    rows_used += o.rows_used;
    rows_skipped += o.rows_skipped;
    rows_malformed += o.rows_malformed;
    return *this;
  }
};

struct ScanCounters {
  InputCounters assignments;
  InputCounters metrics;
  std::uint64_t unknown_experiment_rows = 0;
  std::uint64_t unknown_segment_rows = 0;
  std::uint64_t duplicate_assignment_rows = 0;
  std::uint64_t conflicting_assignment_rows = 0;
  std::uint64_t unassigned_metric_rows = 0;
  std::uint64_t unconfigured_metric_rows = 0;
  /// (member, experiment, metric) triples filled with a zero value.
  std::uint64_t zero_filled = 0;
};

struct ScanOptions {
  /// Assigned members without a metric row count as value 0.
  bool zero_fill = true;
  double alpha = 0.05;
  double srm_alpha = default_srm_alpha;
  Sidedness sidedness = Sidedness::two_sided;
  /// Abort when malformed rows exceed this fraction of rows read.
  double max_malformed_fraction = 0.01;
  /// When false, members with conflicting duplicate assignments are dropped
  /// from that experiment instead of aborting the scan.
  bool fail_on_conflict = true;
  /// Worker count; 0 means hardware concurrency.
  unsigned threads = 0;
};

struct BufferResult {
  BufferKey key;
  MomentSums sums;
  std::optional<AtkinsonEstimate> estimate;
  std::string error;
};

struct SegmentSrm {
  std::string experiment_id;
  std::string segment_id;
  std::map<std::string, std::uint64_t> observed;
  std::map<std::string, double> designed;
  SrmVerdict verdict;
  std::string error;
};

struct SitewideResult {
  std::uint64_t n_all = 0;
  std::uint64_t n_seg = 0;
  AtkinsonEstimate treatment;
  AtkinsonEstimate control;
  ComparisonResult comparison;
};

struct ComparisonEntry {
  std::string experiment_id;
  std::string segment_id;
  std::string metric;
  double epsilon = 0.0;
  std::string treatment_variant;
  std::string control_variant;
  std::optional<AtkinsonEstimate> treatment;
  std::optional<AtkinsonEstimate> control;
  std::optional<ComparisonResult> result;
  SrmVerdict srm;
  std::string srm_error;
  std::optional<SitewideResult> sitewide;
  std::string sitewide_error;
  std::string error;

  bool srm_pass() const noexcept { return srm.pass && srm_error.empty(); }

  auto sort_key() const {
    return std::tie(experiment_id, segment_id, metric, epsilon, treatment_variant);
  }
};

struct ScanReport {
  std::vector<BufferResult> buffers;
  std::vector<ComparisonEntry> comparisons;
  std::vector<SegmentSrm> srm;
  ScanCounters counters;
  std::vector<std::string> warnings;
  double alpha = 0.05;
  double srm_alpha = default_srm_alpha;
  bool zero_fill = true;
  unsigned partitions = 0;

  /// Comparisons that produced a test result; consumers correcting for
  /// multiple testing need this.
  std::size_t comparison_count() const {
    return static_cast<std::size_t>(std::count_if(comparisons.begin(), comparisons.end(),
                                                  [](const auto& c) { return c.result.has_value(); }));
  }

  const BufferResult* find_buffer(const BufferKey& key) const {
    auto it = std::lower_bound(buffers.begin(), buffers.end(), key,
                               [](const BufferResult& b, const BufferKey& k) { return b.key < k; });
    return it != buffers.end() && it->key == key ? &*it : nullptr;
  }
};

namespace detail {

inline void check_malformed_budget(const InputCounters& c, double fraction, const char* what) {
  if (c.rows_read > 0 &&
      static_cast<double>(c.rows_malformed) > fraction * static_cast<double>(c.rows_read)) {
    std::ostringstream msg;
    msg << what << ": " << c.rows_malformed << " of " << c.rows_read
        << " rows are malformed, above the budget of " << fraction * 100.0 << "%";
    throw validation_error(errc::data_error, msg.str());
  }
}

/// Buffer bookkeeping shared read-only by the metric workers.
class scan_plan {
 public:
  struct cell {
    std::uint32_t experiment;
    std::string segment;
    std::string variant;
    std::size_t base = 0;  // first buffer index
    std::uint64_t members = 0;
  };

  struct membership {
    std::uint32_t experiment;
    std::uint32_t cell;
  };

  explicit scan_plan(const std::vector<ExperimentConfig>& configs) : configs_(configs) {
    for (std::uint32_t e = 0; e < configs_.size(); ++e) {
      experiment_index_.emplace(configs_[e].experiment_id, e);
      for (const auto& m : configs_[e].metrics) {
        metric_index_.try_emplace(m, static_cast<std::uint32_t>(metric_index_.size()));
      }
    }
    metric_pos_.resize(configs_.size());
    for (std::uint32_t e = 0; e < configs_.size(); ++e) {
      metric_pos_[e].assign(metric_index_.size(), -1);
      const auto& metrics = configs_[e].metrics;
      for (std::size_t p = 0; p < metrics.size(); ++p) {
        metric_pos_[e][metric_index_.at(metrics[p])] = static_cast<int>(p);
      }
    }
  }

  void load_assignments(const std::vector<InputSource>& sources, const ScanOptions& opt,
                        ScanCounters& counters, std::vector<std::string>& warnings) {
    std::map<std::string, std::uint64_t> unknown_experiments;
    std::vector<std::string_view> f;
    for (const auto& src : sources) {
      auto in = src.open();
      csv_reader reader(*in, src.name, src.byte_budget);
      if (src.has_header) reader.expect_header({"member_id", "experiment_id", "segment_id", "variant"});
      while (reader.next(f)) {
        auto& c = counters.assignments;
        ++c.rows_read;
        if (f.size() != 4 || f[0].empty() || f[1].empty() || f[2].empty() || f[3].empty()) {
          ++c.rows_malformed;
          continue;
        }
        auto exp_it = experiment_index_.find(std::string(f[1]));
        if (exp_it == experiment_index_.end()) {
          ++c.rows_skipped;
          ++counters.unknown_experiment_rows;
          ++unknown_experiments[std::string(f[1])];
          continue;
        }
        const std::uint32_t exp = exp_it->second;
        if (!configs_[exp].find_segment(std::string(f[2]))) {
          ++c.rows_skipped;
          ++counters.unknown_segment_rows;
          continue;
        }
        const std::uint32_t member = intern_member(f[0]);
        if (conflicted_.contains({member, exp})) {
          ++c.rows_skipped;
          ++counters.conflicting_assignment_rows;
          continue;
        }
        const std::uint32_t cell_id = intern_cell(exp, f[2], f[3]);
        auto& list = memberships_[member];
        auto existing = std::find_if(list.begin(), list.end(),
                                     [&](const membership& m) { return m.experiment == exp; });
        if (existing == list.end()) {
          list.push_back({exp, cell_id});
          ++c.rows_used;
          continue;
        }
        if (existing->cell == cell_id) {
          ++c.rows_skipped;
          ++counters.duplicate_assignment_rows;
          continue;
        }
        if (opt.fail_on_conflict) {
          throw validation_error(errc::data_error,
                                 src.name + " line " + std::to_string(reader.line_number()) +
                                     ": member '" + std::string(f[0]) +
                                     "' has conflicting assignments in experiment '" +
                                     std::string(f[1]) + "'");
        }
        // Drop the member from this experiment; the earlier row moves from
        // used to skipped.
        list.erase(existing);
        conflicted_.insert({member, exp});
        --c.rows_used;
        c.rows_skipped += 2;
        counters.conflicting_assignment_rows += 2;
      }
    }
    for (const auto& [id, rows] : unknown_experiments) {
      warnings.push_back("skipped " + std::to_string(rows) + " assignment rows for unknown experiment '" +
                         id + "'");
    }
  }

  /// Lays out buffers for every observed cell and counts members per cell.
  void layout() {
    for (const auto& list : memberships_) {
      for (const auto& m : list) ++cells_[m.cell].members;
    }
    // Cells whose only members were dropped for conflicts are not observed.
    std::vector<std::uint32_t> remap(cells_.size());
    std::vector<cell> kept;
    for (std::size_t i = 0; i < cells_.size(); ++i) {
      remap[i] = static_cast<std::uint32_t>(kept.size());
      if (cells_[i].members > 0) kept.push_back(std::move(cells_[i]));
    }
    cells_ = std::move(kept);
    for (auto& list : memberships_) {
      for (auto& m : list) m.cell = remap[m.cell];
    }
    cell_index_.clear();
    std::size_t next = 0;
    for (auto& c : cells_) {
      const auto& cfg = configs_[c.experiment];
      c.base = next;
      next += cfg.metrics.size() * cfg.epsilons.size();
    }
    buffer_count_ = next;
  }

  std::vector<MomentSums> empty_buffers() const {
    std::vector<MomentSums> out;
    out.reserve(buffer_count_);
    for (const auto& c : cells_) {
      const auto& cfg = configs_[c.experiment];
      for (std::size_t m = 0; m < cfg.metrics.size(); ++m) {
        for (const auto& eps : cfg.epsilons) out.emplace_back(eps);
      }
    }
    return out;
  }

  BufferKey key_of(std::size_t buffer) const {
    auto it = std::upper_bound(cells_.begin(), cells_.end(), buffer,
                               [](std::size_t b, const cell& c) { return b < c.base; });
    const cell& c = *(it - 1);
    const auto& cfg = configs_[c.experiment];
    const std::size_t offset = buffer - c.base;
    const std::size_t n_eps = cfg.epsilons.size();
    return BufferKey{cfg.experiment_id, c.segment, c.variant, cfg.metrics[offset / n_eps],
                     cfg.epsilons[offset % n_eps].value()};
  }

  std::optional<std::uint32_t> member(std::string_view id) const {
    auto it = member_index_.find(std::string(id));
    if (it == member_index_.end()) return std::nullopt;
    return it->second;
  }

  std::optional<std::uint32_t> metric(std::string_view name) const {
    auto it = metric_index_.find(std::string(name));
    if (it == metric_index_.end()) return std::nullopt;
    return it->second;
  }

  /// Buffer index of (cell, metric, first epsilon), or nullopt when the
  /// cell's experiment does not track the metric.
  std::optional<std::size_t> metric_base(std::uint32_t cell_id, std::uint32_t metric) const {
    const cell& c = cells_[cell_id];
    const int pos = metric_pos_[c.experiment][metric];
    if (pos < 0) return std::nullopt;
    return c.base + static_cast<std::size_t>(pos) * configs_[c.experiment].epsilons.size();
  }

  std::size_t epsilon_count(std::uint32_t cell_id) const {
    return configs_[cells_[cell_id].experiment].epsilons.size();
  }

  const std::vector<membership>& memberships(std::uint32_t member) const { return memberships_[member]; }
  std::size_t member_count() const noexcept { return memberships_.size(); }
  std::size_t metric_count() const noexcept { return metric_index_.size(); }
  std::size_t buffer_count() const noexcept { return buffer_count_; }
  const std::vector<cell>& cells() const noexcept { return cells_; }
  const std::vector<ExperimentConfig>& configs() const noexcept { return configs_; }

 private:
  std::uint32_t intern_member(std::string_view id) {
    auto [it, inserted] =
        member_index_.try_emplace(std::string(id), static_cast<std::uint32_t>(memberships_.size()));
    if (inserted) memberships_.emplace_back();
    return it->second;
  }

  std::uint32_t intern_cell(std::uint32_t exp, std::string_view segment, std::string_view variant) {
    auto key = std::make_tuple(exp, std::string(segment), std::string(variant));
    auto [it, inserted] = cell_index_.try_emplace(key, static_cast<std::uint32_t>(cells_.size()));
    if (inserted) cells_.push_back({exp, std::string(segment), std::string(variant)});
    return it->second;
  }

  const std::vector<ExperimentConfig>& configs_;
  std::unordered_map<std::string, std::uint32_t> experiment_index_;
  std::unordered_map<std::string, std::uint32_t> metric_index_;
  std::vector<std::vector<int>> metric_pos_;
  std::unordered_map<std::string, std::uint32_t> member_index_;
  std::vector<std::vector<membership>> memberships_;
  std::map<std::tuple<std::uint32_t, std::string, std::string>, std::uint32_t> cell_index_;
  std::vector<cell> cells_;
  std::set<std::pair<std::uint32_t, std::uint32_t>> conflicted_;
  std::size_t buffer_count_ = 0;
};

/// Private state of one metric worker.
struct metric_partial {
  std::vector<MomentSums> buffers;
  /// seen[metric][member], allocated on first use of a metric.
  std::vector<std::vector<bool>> seen;
  ScanCounters counters;
  std::exception_ptr failure;
};

inline void accumulate_metrics(const scan_plan& plan, const InputSource& src, metric_partial& out) {
  auto in = src.open();
  csv_reader reader(*in, src.name, src.byte_budget);
  if (src.has_header) reader.expect_header({"member_id", "metric_name", "value"});
  std::vector<std::string_view> f;
  auto& c = out.counters.metrics;
  while (reader.next(f)) {
    ++c.rows_read;
    if (f.size() != 3 || f[0].empty() || f[1].empty()) {
      ++c.rows_malformed;
      continue;
    }
    const auto value = parse_double(f[2]);
    if (!value || !std::isfinite(*value) || *value < 0.0) {
      ++c.rows_malformed;
      continue;
    }
    const auto member = plan.member(f[0]);
    if (!member || plan.memberships(*member).empty()) {
      ++c.rows_skipped;
      ++out.counters.unassigned_metric_rows;
      continue;
    }
    const auto metric = plan.metric(f[1]);
    if (!metric) {
      ++c.rows_skipped;
      ++out.counters.unconfigured_metric_rows;
      continue;
    }
    bool used = false;
    for (const auto& m : plan.memberships(*member)) {
      const auto base = plan.metric_base(m.cell, *metric);
      if (!base) continue;
      const std::size_t n_eps = plan.epsilon_count(m.cell);
      for (std::size_t e = 0; e < n_eps; ++e) out.buffers[*base + e].add(*value);
      used = true;
    }
    if (!used) {
      ++c.rows_skipped;
      ++out.counters.unconfigured_metric_rows;
      continue;
    }
    auto& seen = out.seen[*metric];
    if (seen.empty()) seen.assign(plan.member_count(), false);
    if (seen[*member]) {
      throw validation_error(errc::data_error,
                             src.name + " line " + std::to_string(reader.line_number()) +
                                 ": duplicate row for member '" + std::string(f[0]) +
                                 "' and metric '" + std::string(f[1]) + "'");
    }
    seen[*member] = true;
    ++c.rows_used;
  }
}

}  // namespace detail

/// Builds every (experiment, segment, variant, metric, epsilon) buffer from the
/// joined inputs, then finalizes estimates, SRM verdicts, treatment-vs-control
/// comparisons and, where population data is configured, site-wide impacts.
///
/// Metric sources are folded by independent workers with private buffers and
/// merged in source order at the end.
inline ScanReport scan(const std::vector<InputSource>& assignments,
                       const std::vector<InputSource>& metrics,
                       const std::vector<ExperimentConfig>& configs, const ScanOptions& opt = {}) {
  detail::check_alpha(opt.alpha);
  detail::check_alpha(opt.srm_alpha);
  for (const auto& cfg : configs) cfg.validate();

  ScanReport report;
  report.alpha = opt.alpha;
  report.srm_alpha = opt.srm_alpha;
  report.zero_fill = opt.zero_fill;

  detail::scan_plan plan(configs);
  plan.load_assignments(assignments, opt, report.counters, report.warnings);
  detail::check_malformed_budget(report.counters.assignments, opt.max_malformed_fraction,
                                 "assignments");
  plan.layout();

  // Parallel fold over metric sources.
  const std::size_t n_parts = metrics.size();
  report.partitions = static_cast<unsigned>(n_parts);
  std::vector<detail::metric_partial> partials(n_parts);
  for (auto& p : partials) {
    p.buffers = plan.empty_buffers();
    p.seen.resize(plan.metric_count());
  }
  unsigned threads = opt.threads == 0 ? std::max(1u, std::thread::hardware_concurrency()) : opt.threads;
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(n_parts, 1)));
  {
    std::vector<std::jthread> workers;
    for (unsigned w = 0; w < threads; ++w) {
      workers.emplace_back([&, w] {
        for (std::size_t i = w; i < n_parts; i += threads) {
          try {
            detail::accumulate_metrics(plan, metrics[i], partials[i]);
          } catch (...) {
            partials[i].failure = std::current_exception();
          }
        }
      });
    }
  }
  for (const auto& p : partials) {
    if (p.failure) std::rethrow_exception(p.failure);
  }

  std::vector<MomentSums> buffers = plan.empty_buffers();
  std::vector<std::vector<bool>> seen(plan.metric_count());
  for (auto& p : partials) {
    for (std::size_t b = 0; b < buffers.size(); ++b) buffers[b].merge(p.buffers[b]);
    report.counters.metrics += p.counters.metrics;
    report.counters.unassigned_metric_rows += p.counters.unassigned_metric_rows;
    report.counters.unconfigured_metric_rows += p.counters.unconfigured_metric_rows;
    for (std::size_t m = 0; m < seen.size(); ++m) {
      if (p.seen[m].empty()) continue;
      if (seen[m].empty()) {
        seen[m] = std::move(p.seen[m]);
        continue;
      }
      for (std::size_t i = 0; i < seen[m].size(); ++i) {
        if (seen[m][i] && p.seen[m][i]) {
          throw validation_error(errc::data_error, "duplicate metric rows across input partitions");
        }
        if (p.seen[m][i]) seen[m][i] = true;
      }
    }
  }
  detail::check_malformed_budget(report.counters.metrics, opt.max_malformed_fraction, "metrics");

  if (opt.zero_fill) {
    for (std::uint32_t member = 0; member < plan.member_count(); ++member) {
      for (const auto& m : plan.memberships(member)) {
        const auto& cfg = configs[plan.cells()[m.cell].experiment];
        for (const auto& metric_name : cfg.metrics) {
          const auto metric = *plan.metric(metric_name);
          if (!seen[metric].empty() && seen[metric][member]) continue;
          const auto base = *plan.metric_base(m.cell, metric);
          for (std::size_t e = 0; e < cfg.epsilons.size(); ++e) buffers[base + e].add_zeros(1);
          ++report.counters.zero_filled;
        }
      }
    }
  }

  // Finalize buffers, sorted by key.
  report.buffers.reserve(buffers.size());
  for (std::size_t b = 0; b < buffers.size(); ++b) {
    BufferResult r{plan.key_of(b), buffers[b], std::nullopt, {}};
    try {
      r.estimate = estimate_from_sums(r.sums);
    } catch (const validation_error& e) {
      r.error = e.what();
    }
    report.buffers.push_back(std::move(r));
  }
  std::sort(report.buffers.begin(), report.buffers.end(),
            [](const BufferResult& a, const BufferResult& b) { return a.key < b.key; });

  // SRM per (experiment, segment).
  std::map<std::pair<std::string, std::string>, SegmentSrm> srm;
  for (const auto& c : plan.cells()) {
    const auto& cfg = configs[c.experiment];
    auto& s = srm[{cfg.experiment_id, c.segment}];
    s.experiment_id = cfg.experiment_id;
    s.segment_id = c.segment;
    s.designed = cfg.find_segment(c.segment)->designed_fractions;
    s.observed[c.variant] += c.members;
  }
  for (auto& [key, s] : srm) {
    s.verdict.alpha = opt.srm_alpha;
    try {
      s.verdict = srm_check(s.observed, s.designed, opt.srm_alpha);
    } catch (const validation_error& e) {
      s.error = e.what();
      s.verdict.pass = false;
      s.verdict.p_value = 0.0;
    }
    report.srm.push_back(s);
  }

  // Treatment-vs-control comparisons and site-wide impacts.
  for (const auto& s : report.srm) {
    const auto& cfg = *std::find_if(configs.begin(), configs.end(), [&](const ExperimentConfig& c) {
      return c.experiment_id == s.experiment_id;
    });
    const SegmentConfig& seg = *cfg.find_segment(s.segment_id);
    std::uint64_t observed_segment = 0;
    for (const auto& [v, n] : s.observed) observed_segment += n;
    for (const auto& metric : cfg.metrics) {
      for (const auto& eps : cfg.epsilons) {
        const BufferResult* control =
            report.find_buffer({cfg.experiment_id, s.segment_id, cfg.control_variant, metric, eps.value()});
        for (const auto& [variant, count] : s.observed) {
          if (variant == cfg.control_variant) continue;
          ComparisonEntry entry;
          entry.experiment_id = cfg.experiment_id;
          entry.segment_id = s.segment_id;
          entry.metric = metric;
          entry.epsilon = eps.value();
          entry.treatment_variant = variant;
          entry.control_variant = cfg.control_variant;
          entry.srm = s.verdict;
          entry.srm_error = s.error;
          const BufferResult* treatment =
              report.find_buffer({cfg.experiment_id, s.segment_id, variant, metric, eps.value()});
          if (treatment) entry.treatment = treatment->estimate;
          if (control) entry.control = control->estimate;
          if (!control) {
            entry.error = "control variant '" + cfg.control_variant + "' has no members";
          } else if (!entry.treatment) {
            entry.error = "treatment buffer: " + treatment->error;
          } else if (!entry.control) {
            entry.error = "control buffer: " + control->error;
          } else {
            try {
              entry.result = compare(*entry.treatment, *entry.control, opt.alpha, opt.sidedness);
            } catch (const validation_error& e) {
              entry.error = e.what();
            }
          }
          if (cfg.population && control && treatment) {
            const RestTotal* rest = cfg.population->find_rest(metric, eps.value(), s.segment_id);
            if (!rest) {
              entry.sitewide_error = "no rest totals configured for this metric and epsilon";
            } else {
              try {
                SitewideInputs in{eps,
                                  rest->x_rest,
                                  rest->y_rest,
                                  cfg.population->n_all,
                                  seg.n_seg.value_or(observed_segment),
                                  {{variant, treatment->sums}, {cfg.control_variant, control->sums}}};
                SitewideResult sw;
                sw.n_all = in.n_all;
                sw.n_seg = in.n_seg;
                sw.treatment = extrapolate(in, variant);
                sw.control = extrapolate(in, cfg.control_variant);
                sw.comparison = test_difference(sw.treatment.index - sw.control.index,
                                                sw.treatment.variance() + sw.control.variance(),
                                                opt.alpha, opt.sidedness);
                entry.sitewide = sw;
              } catch (const validation_error& e) {
                entry.sitewide_error = e.what();
              }
            }
          }
          report.comparisons.push_back(std::move(entry));
        }
      }
    }
  }
  std::sort(report.comparisons.begin(), report.comparisons.end(),
            [](const ComparisonEntry& a, const ComparisonEntry& b) { return a.sort_key() < b.sort_key(); });
  return report;
}

/// Convenience overload: whole files, with each metric file split so that all
/// workers have a slice.
inline ScanReport scan_files(const std::vector<std::filesystem::path>& assignment_files,
                             const std::vector<std::filesystem::path>& metric_files,
                             const std::vector<ExperimentConfig>& configs, const ScanOptions& opt = {}) {
  std::vector<InputSource> a;
  for (const auto& p : assignment_files) a.push_back(InputSource::file(p));
  const unsigned threads = opt.threads == 0 ? std::max(1u, std::thread::hardware_concurrency()) : opt.threads;
  std::vector<InputSource> m;
  const std::size_t per_file =
      metric_files.empty() ? 1 : (threads + metric_files.size() - 1) / metric_files.size();
  for (const auto& p : metric_files) {
    for (auto& part : split_file(p, per_file)) m.push_back(std::move(part));
  }
  return scan(a, m, configs, opt);
}

/// Top-k significant, SRM-passing comparisons by |delta|; ties go to the
/// smaller p-value, then the lexicographically smaller key.
inline std::vector<ComparisonEntry> rank_report(const ScanReport& report, std::size_t k) {
  std::vector<ComparisonEntry> eligible;
  for (const auto& c : report.comparisons) {
    if (c.result && c.result->significant && c.srm_pass()) eligible.push_back(c);
  }
  std::sort(eligible.begin(), eligible.end(), [](const ComparisonEntry& a, const ComparisonEntry& b) {
    const double da = std::abs(a.result->delta);
    const double db = std::abs(b.result->delta);
    if (da != db) return da > db;
    if (a.result->p_value != b.result->p_value) return a.result->p_value < b.result->p_value;
    return a.sort_key() < b.sort_key();
  });
  if (eligible.size() > k) eligible.resize(k);
  return eligible;
}

}  // namespace ineq
