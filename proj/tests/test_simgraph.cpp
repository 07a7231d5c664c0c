#include <doctest.h>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <set>

#include "readmit/error.hpp"
#include "readmit/kernels.hpp"
#include "readmit/matrix_io.hpp"
#include "readmit/rng.hpp"
#include "readmit/simgraph.hpp"
#include "test_support.hpp"

using namespace readmit;
using namespace readmit::simgraph;

namespace {

using Edge = std::pair<std::uint32_t, std::uint32_t>;

Matrix clustered(std::size_t n, std::size_t d, Rng& rng) {
  Matrix centers(6, d);
  for (auto& x : centers.data) x = rng.normal();
  Matrix m(n, d);
  for (std::size_t i = 0; i < n; ++i) {
    const auto c = rng.below(6);
    const double noise = rng.uniform(0.02, 0.4);
    for (std::size_t k = 0; k < d; ++k) m(i, k) = centers(c, k) + noise * rng.normal();
  }
  return m;
}

std::set<Edge> edges_of(const SimilarityGraph& g) {
  std::set<Edge> out;
  for (std::uint32_t i = 0; i < g.n_nodes; ++i) {
    for (auto j : g.view().of(i)) {
      if (i < j) out.insert({i, j});
    }
  }
  return out;
}

void check_invariants(const SimilarityGraph& g) {
  for (std::size_t i = 0; i < g.n_nodes; ++i) {
    const auto nb = g.view().of(i);
    CHECK(std::is_sorted(nb.begin(), nb.end()));
    CHECK(std::adjacent_find(nb.begin(), nb.end()) == nb.end());
    CHECK(g.has_edge(i, i));
    for (auto j : nb) CHECK(g.has_edge(j, i));
  }
}

}  // namespace

TEST_CASE("duplicates connect and orthogonal rows do not") {
  Matrix m(4, 4);
  for (std::size_t i = 0; i < 3; ++i) m(i, i) = 1.0;
  m(3, 0) = 1.0;  // duplicate of row 0
  const auto g = range_search(m, 1.0);
  CHECK(edges_of(g) == std::set<Edge>{{0, 3}});
  const auto o = range_search(Matrix(5, 3), 0.9);  // all-zero rows
  CHECK(graph_stats(o).edge_count == 5);
  CHECK(graph_stats(o).average_degree == 1.0);
}

TEST_CASE("triangle counts") {
  Matrix m(3, 2, 1.0);
  m(1, 1) = 1.01;
  m(2, 0) = 1.01;
  const auto g = range_search(m, 0.99);
  CHECK(graph_stats(g).edge_count == 9);
  CHECK(graph_stats(g).average_degree == 3.0);
  check_invariants(g);
}

TEST_CASE("range search equals brute force at every threshold") {
  Rng rng(12);
  const auto m = clustered(1000, 32, rng);
  std::set<Edge> previous;
  bool first = true;
  for (double tau : {0.8, 0.9, 0.95, 0.99}) {
    const auto g = range_search(m, tau, 128);
    const auto ref = kernels::serial::cosine_pairs(m, tau);
    const std::set<Edge> expected(ref.begin(), ref.end());
    CHECK(edges_of(g) == expected);
    CHECK(g.tau == tau);
    check_invariants(g);
    if (!first) CHECK(std::includes(previous.begin(), previous.end(), expected.begin(), expected.end()));
    previous = expected;
    first = false;
  }
  CHECK_FALSE(previous.empty());
}

TEST_CASE("tile size does not change the graph") {
  Rng rng(13);
  const auto m = clustered(500, 16, rng);
  const auto a = range_search(m, 0.9, 1024);
  CHECK(range_search(m, 0.9, 33) == a);
  CHECK(range_search(m, 0.9, 500) == a);
}

TEST_CASE("permuting rows permutes the adjacency") {
  Rng rng(14);
  const auto m = clustered(300, 8, rng);
  std::vector<std::uint32_t> perm(300);
  for (std::uint32_t i = 0; i < 300; ++i) perm[i] = i;
  for (std::size_t i = 299; i > 0; --i) std::swap(perm[i], perm[rng.below(i + 1)]);
  Matrix pm(300, 8);
  for (std::size_t i = 0; i < 300; ++i) {
    for (std::size_t k = 0; k < 8; ++k) pm(perm[i], k) = m(i, k);
  }
  const auto g = range_search(m, 0.9);
  const auto pg = range_search(pm, 0.9);
  std::set<Edge> mapped;
  for (const auto& [i, j] : edges_of(g)) mapped.insert({std::min(perm[i], perm[j]), std::max(perm[i], perm[j])});
  CHECK(mapped == edges_of(pg));
}

TEST_CASE("threshold validation") {
  Matrix m(2, 2, 1.0);
  CHECK_THROWS_AS(range_search(m, 0.0), Error);
  CHECK_THROWS_AS(range_search(m, 1.5), Error);
  CHECK_THROWS_AS(range_search(Matrix(), 0.9), Error);
}

TEST_CASE("average degree arithmetic") {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%.4f", average_degree(340539, 303571));
  CHECK(std::string(buf) == "1.1218");
}

TEST_CASE("binary format round trip and damage detection") {
  testing::TempDir dir("graph");
  Rng rng(15);
  const auto g = range_search(clustered(200, 8, rng), 0.9);
  save_graph(g, dir / "g.bin");
  CHECK(load_graph(dir / "g.bin") == g);

  auto bytes = matrix_io::read_file(dir / "g.bin");
  CHECK(std::string(bytes.begin(), bytes.begin() + 6) == "CGGRF1");

  auto truncated = bytes;
  truncated.resize(truncated.size() - 9);
  matrix_io::write_file(dir / "t.bin", truncated);
  try {
    load_graph(dir / "t.bin");
    FAIL("expected corruption");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Corruption);
  }

  auto flipped = bytes;
  flipped[40] ^= 0x10;
  matrix_io::write_file(dir / "f.bin", flipped);
  try {
    load_graph(dir / "f.bin");
    FAIL("expected corruption");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Corruption);
  }

  auto versioned = bytes;
  versioned[6] = 2;
  matrix_io::write_file(dir / "v.bin", versioned);
  try {
    load_graph(dir / "v.bin");
    FAIL("expected version error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::UnsupportedVersion);
  }
}

TEST_CASE("from_pairs rejects bad input") {
  CHECK_THROWS_AS(from_pairs(3, {{0, 0}}, 0.9), Error);
  CHECK_THROWS_AS(from_pairs(3, {{0, 7}}, 0.9), Error);
  CHECK_THROWS_AS(from_pairs(3, {{0, 1}, {1, 0}}, 0.9), Error);
  const auto g = from_pairs(3, {{2, 0}}, 0.9);
  CHECK(g.has_edge(0, 2));
  CHECK(g.has_edge(2, 0));
  CHECK_FALSE(g.has_edge(0, 1));
}
