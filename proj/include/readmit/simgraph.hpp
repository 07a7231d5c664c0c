#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <utility>
#include <vector>

#include "readmit/kernels.hpp"
#include "readmit/matrix.hpp"

namespace readmit::simgraph {

// Undirected, unweighted admission-similarity graph in CSR form. Every node
// has a self-loop; each undirected edge is stored in both directions;
// neighbor lists are sorted without duplicates.
struct SimilarityGraph {
  std::size_t n_nodes = 0;
  std::vector<std::uint64_t> offsets;
  std::vector<std::uint32_t> neighbors;
  double tau = 0.0;

  kernels::CsrView view() const { return {offsets, neighbors}; }
  std::size_t degree(std::size_t i) const { return offsets[i + 1] - offsets[i]; }
  bool has_edge(std::size_t i, std::size_t j) const;

  bool operator==(const SimilarityGraph&) const = default;
};

struct GraphStats {
  std::size_t edge_count = 0;  // directed entries, self-loops counted once
  double average_degree = 0.0;
};

// Builds the CSR graph (with self-loops) from undirected pairs i != j.
SimilarityGraph from_pairs(std::size_t n_nodes, const std::vector<std::pair<std::uint32_t, std::uint32_t>>& pairs,
                           double tau);

// Exact cosine range search: edge (i, j) iff cos(x_i, x_j) >= tau, with
// cos(0, .) = 0. tau must lie in (0, 1].
SimilarityGraph range_search(const Matrix& features, double tau, std::size_t tile = 1024);

GraphStats graph_stats(const SimilarityGraph& g);
// Average degree from raw counts.
double average_degree(std::size_t edge_count, std::size_t n_nodes);

// Binary format: magic "CGGRF1", u8 version (1), u64 n_nodes, u64 nnz,
// u64 row offsets [n_nodes + 1], u8 index width flag (0: u32, 1: u64),
// column indices, f64 tau, u32 CRC-32 of all preceding bytes.
void save_graph(const SimilarityGraph& g, const std::filesystem::path& path);
SimilarityGraph load_graph(const std::filesystem::path& path);

}  // namespace readmit::simgraph
