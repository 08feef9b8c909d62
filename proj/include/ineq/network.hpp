#pragma once

#include <algorithm>
#include <cstdint>
#include <istream>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "ineq/csv.hpp"
#include "ineq/error.hpp"

namespace ineq {

/// Undirected simple graph over opaque member ids.
///
/// Vertices are interned to dense indices; each adjacency list is sorted and
/// free of duplicates and self-loops once `finalize()` has run.
class MemberGraph {
 public:
  using vertex = std::uint32_t;

  /// Adds the undirected edge a-b. Self-loops are dropped and counted.
  void add_edge(std::string_view a, std::string_view b) {
    const vertex u = intern(a);
    const vertex v = intern(b);
    if (u == v) {
      ++self_loops_;
      return;
    }
    adj_[u].push_back(v);
    adj_[v].push_back(u);
    finalized_ = false;
  }

  void add_vertex(std::string_view id) { intern(id); }

  /// Sorts adjacency lists and removes duplicate edges.
  void finalize() {
    if (finalized_) return;
    duplicate_edges_ = 0;
    for (auto& list : adj_) {
      std::sort(list.begin(), list.end());
      const auto before = list.size();
      list.erase(std::unique(list.begin(), list.end()), list.end());
      duplicate_edges_ += before - list.size();
    }
    // Each duplicated undirected edge was counted once per endpoint.
    duplicate_edges_ /= 2;
    finalized_ = true;
  }

  std::size_t vertex_count() const noexcept { return ids_.size(); }
  std::size_t self_loops_dropped() const noexcept { return self_loops_; }
  std::size_t duplicate_edges_dropped() const noexcept { return duplicate_edges_; }

  std::optional<vertex> find(std::string_view id) const {
    auto it = index_.find(std::string(id));
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  const std::string& id(vertex v) const { return ids_.at(v); }

  const std::vector<vertex>& neighbors(vertex v) const {
    require_finalized();
    return adj_.at(v);
  }

  std::size_t degree(vertex v) const { return neighbors(v).size(); }

  bool connected(vertex a, vertex b) const {
    const auto& list = neighbors(a);
    return std::binary_search(list.begin(), list.end(), b);
  }

 private:
  vertex intern(std::string_view id) {
    auto [it, inserted] = index_.try_emplace(std::string(id), static_cast<vertex>(ids_.size()));
    if (inserted) {
      ids_.emplace_back(id);
      adj_.emplace_back();
    }
    return it->second;
  }

  void require_finalized() const {
    if (!finalized_) {
      throw std::logic_error("MemberGraph::finalize() must run before queries");
    }
  }

  std::unordered_map<std::string, vertex> index_;
  std::vector<std::string> ids_;
  std::vector<std::vector<vertex>> adj_;
  std::size_t self_loops_ = 0;
  std::size_t duplicate_edges_ = 0;
  bool finalized_ = true;
};

/// Reads a `src,dst` edge list. Rows with the wrong field count or empty ids
/// are rejected.
inline MemberGraph read_edge_list(std::istream& in) {
  MemberGraph g;
  csv_reader reader(in, "edge list");
  reader.expect_header({"src", "dst"});
  std::vector<std::string_view> fields;
  while (reader.next(fields)) {
    if (fields.size() != 2 || fields[0].empty() || fields[1].empty()) {
      throw validation_error(errc::data_error,
                             "edge list line " + std::to_string(reader.line_number()) +
                                 ": expected two non-empty ids");
    }
    g.add_edge(fields[0], fields[1]);
  }
  g.finalize();
  return g;
}

namespace detail {

/// Number of edges among the neighbors of v. Each neighbor pair is found from
/// both endpoints, hence the halving.
inline std::uint64_t neighbor_edges(const MemberGraph& g, MemberGraph::vertex v) {
  const auto& nv = g.neighbors(v);
  std::uint64_t twice = 0;
  for (auto u : nv) {
    const auto& nu = g.neighbors(u);
    const auto& small = nu.size() < nv.size() ? nu : nv;
    const auto& large = nu.size() < nv.size() ? nv : nu;
    for (auto w : small) {
      if (std::binary_search(large.begin(), large.end(), w)) ++twice;
    }
  }
  return twice / 2;
}

inline MemberGraph::vertex require_vertex(const MemberGraph& g, std::string_view id) {
  auto v = g.find(id);
  if (!v) {
    throw validation_error(errc::unknown_vertex, "unknown member '" + std::string(id) + "'");
  }
  return *v;
}

}  // namespace detail

/// Local clustering coefficient: the fraction of neighbor pairs of `v` that
/// are themselves connected. Undefined below degree two.
inline double local_clustering(const MemberGraph& g, MemberGraph::vertex v) {
  const auto k = static_cast<std::uint64_t>(g.degree(v));
  if (k < 2) {
    throw validation_error(errc::insufficient_sample,
                           "local clustering needs degree >= 2 for member '" + g.id(v) + "'");
  }
  const auto edges = detail::neighbor_edges(g, v);
  return static_cast<double>(2 * edges) / static_cast<double>(k * (k - 1));
}

inline double local_clustering(const MemberGraph& g, std::string_view id) {
  return local_clustering(g, detail::require_vertex(g, id));
}

/// Structural network diversity, 1 - local clustering.
inline double diversity(const MemberGraph& g, MemberGraph::vertex v) {
  return 1.0 - local_clustering(g, v);
}

inline double diversity(const MemberGraph& g, std::string_view id) {
  return diversity(g, detail::require_vertex(g, id));
}

enum class Bucket { low, medium, high, excluded };

inline std::string_view to_string(Bucket b) noexcept {
  switch (b) {
    case Bucket::low: return "low";
    case Bucket::medium: return "medium";
    case Bucket::high: return "high";
    case Bucket::excluded: return "excluded";
  }
  return "excluded";
}

struct CohortAssignment {
  std::string member_id;
  /// Absent for excluded members.
  std::optional<double> diversity;
  Bucket bucket = Bucket::excluded;
};

struct CohortReport {
  std::vector<CohortAssignment> members;
  std::size_t eligible = 0;
  /// Size cap of each tail bucket, floor(0.2 * eligible).
  std::size_t tail_size = 0;
  /// Largest diversity placed in `low`, if any.
  std::optional<double> low_threshold;
  /// Smallest diversity placed in `high`, if any.
  std::optional<double> high_threshold;
  static constexpr std::string_view tie_rule =
      "a group of equal diversities enters a tail bucket only if the whole group fits; "
      "otherwise it stays medium";
};

/// Bucket and threshold assignment for a list of diversities, where an empty
/// entry marks an ineligible member. `member_id` is left empty.
inline CohortReport bucket_diversities(std::span<const std::optional<double>> diversities) {
  CohortReport report;
  report.members.resize(diversities.size());
  std::vector<std::pair<double, std::size_t>> ranked;
  for (std::size_t i = 0; i < diversities.size(); ++i) {
    if (!diversities[i]) continue;
    report.members[i].diversity = diversities[i];
    report.members[i].bucket = Bucket::medium;
    ranked.emplace_back(*diversities[i], i);
  }
  std::sort(ranked.begin(), ranked.end());
  report.eligible = ranked.size();
  const std::size_t k = ranked.size() / 5;
  report.tail_size = k;
  if (k == 0) return report;

  // Walk groups of equal diversity from each end while the cumulative size
  // stays within k.
  std::size_t taken = 0;
  for (std::size_t i = 0; i < ranked.size();) {
    std::size_t j = i;
    while (j < ranked.size() && ranked[j].first == ranked[i].first) ++j;
    if (taken + (j - i) > k) break;
    for (std::size_t m = i; m < j; ++m) report.members[ranked[m].second].bucket = Bucket::low;
    report.low_threshold = ranked[i].first;
    taken += j - i;
    i = j;
  }
  taken = 0;
  for (std::size_t i = ranked.size(); i > 0;) {
    std::size_t j = i;
    while (j > 0 && ranked[j - 1].first == ranked[i - 1].first) --j;
    if (taken + (i - j) > k) break;
    for (std::size_t m = j; m < i; ++m) report.members[ranked[m].second].bucket = Bucket::high;
    report.high_threshold = ranked[i - 1].first;
    taken += i - j;
    i = j;
  }
  return report;
}

/// Buckets members with degree >= 2 by diversity: the bottom 20% are `low`,
/// the top 20% `high`, and the rest `medium`. Members below degree two are
/// `excluded`. Output follows vertex insertion order.
inline CohortReport bucket(const MemberGraph& g) {
  const auto n = g.vertex_count();
  std::vector<std::optional<double>> diversities(n);
  for (MemberGraph::vertex v = 0; v < n; ++v) {
    if (g.degree(v) >= 2) diversities[v] = diversity(g, v);
  }
  auto report = bucket_diversities(diversities);
  for (MemberGraph::vertex v = 0; v < n; ++v) report.members[v].member_id = g.id(v);
  return report;
}

}  // namespace ineq
