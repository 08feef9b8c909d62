#include <catch_amalgamated.hpp>

#include <algorithm>
#include <random>
#include <sstream>

#include "ineq/network.hpp"
#include "ineq/report.hpp"

using namespace ineq;
using Catch::Matchers::WithinAbs;

namespace {

MemberGraph graph_of(std::initializer_list<std::pair<const char*, const char*>> edges) {
  MemberGraph g;
  for (auto [a, b] : edges) g.add_edge(a, b);
  g.finalize();
  return g;
}

}  // namespace

TEST_CASE("clustering examples") {
  const auto tri = graph_of({{"a", "b"}, {"b", "c"}, {"c", "a"}});
  for (auto v : {"a", "b", "c"}) {
    CHECK(local_clustering(tri, v) == 1.0);
    CHECK(diversity(tri, v) == 0.0);
  }
  const auto star = graph_of({{"h", "1"}, {"h", "2"}, {"h", "3"}, {"h", "4"}});
  CHECK(local_clustering(star, "h") == 0.0);
  CHECK(diversity(star, "h") == 1.0);
  const auto third = graph_of({{"v", "a"}, {"v", "b"}, {"v", "c"}, {"a", "b"}});
  CHECK_THAT(local_clustering(third, "v"), WithinAbs(1.0 / 3.0, 1e-15));
  CHECK_THAT(diversity(third, "v"), WithinAbs(2.0 / 3.0, 1e-15));
}

TEST_CASE("clustering errors") {
  const auto g = graph_of({{"a", "b"}});
  auto code_of = [&](const char* id) {
    try {
      local_clustering(g, id);
    } catch (const validation_error& e) {
      return e.code();
    }
    return errc::data_error;
  };
  CHECK(code_of("zzz") == errc::unknown_vertex);
  CHECK(code_of("a") == errc::insufficient_sample);
}

TEST_CASE("edge list loading deduplicates and drops self-loops") {
  std::istringstream in("src,dst\na,b\nb,a\na,b\nc,c\nb,c\nc,a\n");
  const auto g = read_edge_list(in);
  CHECK(g.vertex_count() == 3);
  CHECK(g.self_loops_dropped() == 1);
  CHECK(g.duplicate_edges_dropped() == 2);
  CHECK(g.degree(*g.find("a")) == 2);
  CHECK(local_clustering(g, "a") == 1.0);

  std::istringstream bad("src,dst\na\n");
  CHECK_THROWS_AS(read_edge_list(bad), validation_error);
  std::istringstream wrong("from,to\na,b\n");
  CHECK_THROWS_AS(read_edge_list(wrong), validation_error);
}

TEST_CASE("clustering matches brute-force triple enumeration") {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 3 + static_cast<int>(rng() % 48);
    const double p = std::uniform_real_distribution<double>(0.05, 0.9)(rng);
    std::vector<std::vector<bool>> adj(n, std::vector<bool>(n, false));
    MemberGraph g;
    for (int i = 0; i < n; ++i) g.add_vertex("v" + std::to_string(i));
    for (int i = 0; i < n; ++i) {
      for (int j = i + 1; j < n; ++j) {
        if (std::uniform_real_distribution<double>()(rng) < p) {
          adj[i][j] = adj[j][i] = true;
          g.add_edge("v" + std::to_string(i), "v" + std::to_string(j));
        }
      }
    }
    g.finalize();
    for (int v = 0; v < n; ++v) {
      std::uint64_t k = 0, closed = 0;
      for (int a = 0; a < n; ++a) {
        if (!adj[v][a]) continue;
        ++k;
        for (int b = a + 1; b < n; ++b) {
          if (adj[v][b] && adj[a][b]) ++closed;
        }
      }
      const auto id = "v" + std::to_string(v);
      if (k < 2) {
        CHECK_THROWS_AS(local_clustering(g, id), validation_error);
        continue;
      }
      CHECK(local_clustering(g, id) == static_cast<double>(2 * closed) / static_cast<double>(k * (k - 1)));
    }
  }
}

TEST_CASE("clustering is invariant under relabeling") {
  std::mt19937_64 rng(77);
  const int n = 30;
  std::vector<std::pair<int, int>> edges;
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      if (rng() % 4 == 0) edges.emplace_back(i, j);
    }
  }
  std::vector<int> perm(n);
  for (int i = 0; i < n; ++i) perm[i] = i;
  std::shuffle(perm.begin(), perm.end(), rng);
  MemberGraph g, h;
  for (auto [a, b] : edges) {
    g.add_edge(std::to_string(a), std::to_string(b));
    h.add_edge("x" + std::to_string(perm[b]), "x" + std::to_string(perm[a]));
  }
  g.finalize();
  h.finalize();
  for (int v = 0; v < n; ++v) {
    const auto gv = g.find(std::to_string(v));
    if (!gv || g.degree(*gv) < 2) continue;
    CHECK(local_clustering(g, std::to_string(v)) == local_clustering(h, "x" + std::to_string(perm[v])));
  }
}

namespace {

std::vector<Bucket> buckets_of(const std::vector<std::optional<double>>& d) {
  std::vector<Bucket> out;
  for (const auto& m : bucket_diversities(d).members) out.push_back(m.bucket);
  return out;
}

}  // namespace

TEST_CASE("five distinct diversities: one low, one high, three medium") {
  const auto b = buckets_of({0.4, 0.1, 0.9, 0.5, 0.7});
  CHECK(b == std::vector<Bucket>{Bucket::medium, Bucket::low, Bucket::high, Bucket::medium, Bucket::medium});
}

TEST_CASE("ten distinct diversities: ranks 1-2 low, 9-10 high") {
  std::vector<std::optional<double>> d;
  for (int i : {3, 9, 0, 5, 1, 8, 2, 7, 4, 6}) d.emplace_back(i / 10.0);
  const auto r = bucket_diversities(d);
  CHECK(r.tail_size == 2);
  for (std::size_t i = 0; i < d.size(); ++i) {
    const double v = *d[i];
    const Bucket expected = v < 0.15 ? Bucket::low : (v > 0.75 ? Bucket::high : Bucket::medium);
    CHECK(r.members[i].bucket == expected);
  }
  CHECK(r.low_threshold == 0.1);
  CHECK(r.high_threshold == 0.8);
}

TEST_CASE("ties straddling a threshold stay medium") {
  const auto same = buckets_of({0.5, 0.5, 0.5, 0.5, 0.5, 0.5});
  for (auto b : same) CHECK(b == Bucket::medium);
  // Tail size 2: a pair of equal lows fits, a triple of equal highs does not.
  const auto b = buckets_of({0.1, 0.1, 0.3, 0.4, 0.5, 0.6, 0.7, 0.9, 0.9, 0.9, std::nullopt});
  CHECK(b == std::vector<Bucket>{Bucket::low, Bucket::low, Bucket::medium, Bucket::medium, Bucket::medium,
                                 Bucket::medium, Bucket::medium, Bucket::medium, Bucket::medium, Bucket::medium,
                                 Bucket::excluded});
  CHECK(buckets_of({}).empty());
  CHECK(buckets_of({0.2, 0.3}) == std::vector<Bucket>{Bucket::medium, Bucket::medium});
}

TEST_CASE("bucket sizes stay within the tail bound on random graphs") {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 50; ++trial) {
    MemberGraph g;
    const int n = 5 + static_cast<int>(rng() % 60);
    for (int e = 0; e < 2 * n; ++e) {
      g.add_edge(std::to_string(rng() % n), std::to_string(rng() % n));
    }
    g.finalize();
    const auto r = bucket(g);
    std::size_t low = 0, high = 0, eligible = 0;
    for (const auto& m : r.members) {
      low += m.bucket == Bucket::low;
      high += m.bucket == Bucket::high;
      eligible += m.bucket != Bucket::excluded;
      const auto v = *g.find(m.member_id);
      CHECK((m.bucket == Bucket::excluded) == (g.degree(v) < 2));
      if (m.bucket == Bucket::low) CHECK(*m.diversity <= *r.low_threshold);
      if (m.bucket == Bucket::high) CHECK(*m.diversity >= *r.high_threshold);
      if (m.bucket == Bucket::medium && r.low_threshold) CHECK(*m.diversity >= *r.low_threshold);
      if (m.bucket == Bucket::medium && r.high_threshold) CHECK(*m.diversity <= *r.high_threshold);
    }
    CHECK(eligible == r.eligible);
    CHECK(r.tail_size == eligible / 5);
    CHECK(low <= r.tail_size);
    CHECK(high <= r.tail_size);
  }
}

TEST_CASE("graph bucketing and CSV output") {
  // Center m_i has 2 + i pendant leaves, with leaves _0 and _1 joined.
  MemberGraph g;
  for (int i = 0; i < 10; ++i) {
    const std::string c = "m" + std::to_string(i);
    for (int s = 0; s < 2 + i; ++s) g.add_edge(c, c + "_" + std::to_string(s));
    g.add_edge(c + "_0", c + "_1");
  }
  g.finalize();
  // 20 joined leaves and m0 have diversity 0; the other centers are distinct.
  const auto r = bucket(g);
  CHECK(r.eligible == 30);
  CHECK(r.tail_size == 6);
  for (const auto& m : r.members) {
    if (m.member_id.find('_') != std::string::npos && m.diversity) CHECK(m.bucket == Bucket::medium);
  }
  for (int i = 0; i < 10; ++i) {
    const auto v = *g.find("m" + std::to_string(i));
    CHECK(r.members[v].bucket == (i >= 4 ? Bucket::high : Bucket::medium));
  }
  std::ostringstream csv;
  write_csv(csv, r);
  CHECK(csv.str().starts_with("member_id,diversity,bucket\nm0,0,medium\nm0_0,0,medium\n"));
  CHECK(csv.str().find("m1_2,,excluded\n") != std::string::npos);
  CHECK(csv.str().find("m9,0.98181818181818181,high\n") != std::string::npos);
}
