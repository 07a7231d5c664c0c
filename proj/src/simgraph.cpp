#include "readmit/simgraph.hpp"

#include <zlib.h>

#include <algorithm>
#include <bit>
#include <cstring>

#include "readmit/error.hpp"
#include "readmit/matrix_io.hpp"

namespace readmit::simgraph {

namespace {
constexpr char kMagic[6] = {'C', 'G', 'G', 'R', 'F', '1'};
constexpr std::uint8_t kVersion = 1;

std::uint32_t crc32_of(const unsigned char* data, std::size_t len) {
  uLong crc = crc32(0L, Z_NULL, 0);
  while (len > 0) {
    const uInt chunk = static_cast<uInt>(std::min<std::size_t>(len, 1u << 30));
    crc = crc32(crc, data, chunk);
    data += chunk;
    len -= chunk;
  }
  return static_cast<std::uint32_t>(crc);
}
}  // namespace

bool SimilarityGraph::has_edge(std::size_t i, std::size_t j) const {
  auto nb = view().of(i);
  return std::binary_search(nb.begin(), nb.end(), static_cast<std::uint32_t>(j));
}

SimilarityGraph from_pairs(std::size_t n, const std::vector<std::pair<std::uint32_t, std::uint32_t>>& pairs,
                           double tau) {
  SimilarityGraph g;
  g.n_nodes = n;
  g.tau = tau;
  g.offsets.assign(n + 1, 0);
  for (std::size_t i = 0; i < n; ++i) g.offsets[i + 1] = 1;
  for (const auto& [a, b] : pairs) {
    if (a == b || a >= n || b >= n) fail(ErrorKind::Integrity, "invalid edge in pair list");
    ++g.offsets[a + 1];
    ++g.offsets[b + 1];
  }
  for (std::size_t i = 0; i < n; ++i) g.offsets[i + 1] += g.offsets[i];
  g.neighbors.resize(g.offsets[n]);
  std::vector<std::uint64_t> fill(g.offsets.begin(), g.offsets.end() - 1);
  for (std::size_t i = 0; i < n; ++i) g.neighbors[fill[i]++] = static_cast<std::uint32_t>(i);
  for (const auto& [a, b] : pairs) {
    g.neighbors[fill[a]++] = b;
    g.neighbors[fill[b]++] = a;
  }
#pragma omp parallel for schedule(dynamic, 256)
  for (std::size_t i = 0; i < n; ++i) {
    std::sort(g.neighbors.begin() + static_cast<std::ptrdiff_t>(g.offsets[i]),
              g.neighbors.begin() + static_cast<std::ptrdiff_t>(g.offsets[i + 1]));
  }
  for (std::size_t i = 0; i < n; ++i) {
    auto nb = g.view().of(i);
    if (std::adjacent_find(nb.begin(), nb.end()) != nb.end()) {
      fail(ErrorKind::Integrity, "duplicate edge at node " + std::to_string(i));
    }
  }
  return g;
}

SimilarityGraph range_search(const Matrix& features, double tau, std::size_t tile) {
  if (!(tau > 0.0 && tau <= 1.0)) fail(ErrorKind::Config, "tau must be in (0, 1], got " + std::to_string(tau));
  if (features.rows == 0) fail(ErrorKind::Config, "range search over an empty feature matrix");
  if (features.rows > UINT32_MAX) fail(ErrorKind::Config, "too many nodes for 32-bit neighbor indices");
  Matrix unit = features;
  kernels::normalize_rows(unit);
  return from_pairs(features.rows, kernels::cosine_pairs(unit, tau, tile), tau);
}

GraphStats graph_stats(const SimilarityGraph& g) {
  return {g.neighbors.size(), average_degree(g.neighbors.size(), g.n_nodes)};
}

double average_degree(std::size_t edge_count, std::size_t n_nodes) {
  return n_nodes == 0 ? 0.0 : static_cast<double>(edge_count) / static_cast<double>(n_nodes);
}

void save_graph(const SimilarityGraph& g, const std::filesystem::path& path) {
  std::vector<unsigned char> b(kMagic, kMagic + 6);
  b.push_back(kVersion);
  matrix_io::put_u64(b, g.n_nodes);
  matrix_io::put_u64(b, g.neighbors.size());
  for (auto o : g.offsets) matrix_io::put_u64(b, o);
  b.push_back(0);  // u32 indices
  for (auto v : g.neighbors) {
    for (int i = 0; i < 4; ++i) b.push_back(static_cast<unsigned char>(v >> (8 * i)));
  }
  matrix_io::put_u64(b, std::bit_cast<std::uint64_t>(g.tau));
  const std::uint32_t crc = crc32_of(b.data(), b.size());
  for (int i = 0; i < 4; ++i) b.push_back(static_cast<unsigned char>(crc >> (8 * i)));
  matrix_io::write_file(path, b);
}

SimilarityGraph load_graph(const std::filesystem::path& path) {
  const auto b = matrix_io::read_file(path);
  const std::string where = path.string() + ": ";
  if (b.size() < 7 || std::memcmp(b.data(), kMagic, 6) != 0) fail(ErrorKind::Corruption, where + "bad magic");
  if (b[6] != kVersion) {
    fail(ErrorKind::UnsupportedVersion, where + "graph format version " + std::to_string(b[6]));
  }
  std::size_t pos = 7;
  auto need = [&](std::size_t bytes) {
    if (b.size() < pos || b.size() - pos < bytes) fail(ErrorKind::Corruption, where + "truncated file");
  };
  need(16);
  SimilarityGraph g;
  g.n_nodes = matrix_io::get_u64(b.data() + pos);
  const std::uint64_t nnz = matrix_io::get_u64(b.data() + pos + 8);
  pos += 16;
  if (g.n_nodes >= b.size() / 8) fail(ErrorKind::Corruption, where + "truncated file");
  need(8 * (g.n_nodes + 1) + 1);
  g.offsets.resize(g.n_nodes + 1);
  for (auto& o : g.offsets) {
    o = matrix_io::get_u64(b.data() + pos);
    pos += 8;
  }
  const std::uint8_t wide = b[pos++];
  if (wide > 1) fail(ErrorKind::Corruption, where + "bad index width flag");
  const std::size_t width = wide ? 8 : 4;
  if (nnz > b.size() / width) fail(ErrorKind::Corruption, where + "truncated file");
  need(nnz * width + 8 + 4);
  if (b.size() - pos != nnz * width + 12) fail(ErrorKind::Corruption, where + "unexpected trailing bytes");
  const std::size_t crc_pos = b.size() - 4;
  const std::uint32_t stored = b[crc_pos] | (b[crc_pos + 1] << 8) | (b[crc_pos + 2] << 16) |
                               (static_cast<std::uint32_t>(b[crc_pos + 3]) << 24);
  if (stored != crc32_of(b.data(), crc_pos)) fail(ErrorKind::Corruption, where + "checksum mismatch");

  g.neighbors.resize(nnz);
  for (auto& v : g.neighbors) {
    std::uint64_t x = 0;
    for (std::size_t i = width; i-- > 0;) x = (x << 8) | b[pos + i];
    if (x > UINT32_MAX) fail(ErrorKind::UnsupportedVersion, where + "node index beyond 32 bits");
    v = static_cast<std::uint32_t>(x);
    pos += width;
  }
  g.tau = std::bit_cast<double>(matrix_io::get_u64(b.data() + pos));
  if (g.offsets.front() != 0 || g.offsets.back() != nnz) fail(ErrorKind::Corruption, where + "inconsistent offsets");
  return g;
}

}  // namespace readmit::simgraph
