#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "readmit/matrix.hpp"

// Compute kernels with OpenMP-parallel implementations and straightforward
// serial references (namespace `serial`) used by tests and the benchmark.
// Parallel kernels assign each output element to exactly one thread and
// keep the per-element summation order fixed, so results do not depend on
// the thread count.
namespace readmit::kernels {

enum class Aggregator { Mean, Max, Add };

// Compressed sparse row adjacency. Neighbor lists are sorted ascending.
struct CsrView {
  std::span<const std::uint64_t> offsets;  // n + 1 entries
  std::span<const std::uint32_t> neighbors;

  std::size_t nodes() const { return offsets.empty() ? 0 : offsets.size() - 1; }
  std::span<const std::uint32_t> of(std::size_t i) const {
    return neighbors.subspan(offsets[i], offsets[i + 1] - offsets[i]);
  }
};

// Slack on the cosine threshold absorbing rounding differences between
// evaluation orders; an edge needs cos >= tau - kCosineSlack.
inline constexpr double kCosineSlack = 1e-12;

// C (+)= A * B
void gemm(const Matrix& a, const Matrix& b, Matrix& c, bool accumulate = false);
// C (+)= A^T * B
void gemm_tn(const Matrix& a, const Matrix& b, Matrix& c, bool accumulate = false);
// C (+)= A * B^T
void gemm_nt(const Matrix& a, const Matrix& b, Matrix& c, bool accumulate = false);

// Scales each nonzero row to unit L2 norm; zero rows stay zero.
void normalize_rows(Matrix& m);

// Pairs (i, j), i < j, of unit-norm rows with dot >= tau - kCosineSlack.
// Rows are processed in tile x tile blocks of the upper triangle; the result
// is ordered by tile, then row.
std::vector<std::pair<std::uint32_t, std::uint32_t>> cosine_pairs(const Matrix& unit_rows, double tau,
                                                                  std::size_t tile = 1024);

// out row i = mean/max/sum of h over the neighbors of i. For Max, `argmax`
// receives the winning neighbor per element (first in list order on ties).
void aggregate_forward(const Matrix& h, CsrView graph, Aggregator kind, Matrix& out,
                       std::vector<std::uint32_t>* argmax);

// Gradient of aggregate_forward. Uses the gather form, which requires a
// symmetric adjacency.
void aggregate_backward(const Matrix& grad_out, CsrView graph, Aggregator kind,
                        const std::vector<std::uint32_t>* argmax, Matrix& grad_h);

namespace serial {

void gemm(const Matrix& a, const Matrix& b, Matrix& c);
void gemm_tn(const Matrix& a, const Matrix& b, Matrix& c);
void gemm_nt(const Matrix& a, const Matrix& b, Matrix& c);

// O(n^2) pairs with cos(x_i, x_j) = <x_i,x_j> / (|x_i||x_j|) evaluated in
// long double; zero rows have cosine 0 with everything.
std::vector<std::pair<std::uint32_t, std::uint32_t>> cosine_pairs(const Matrix& rows, double tau);

void aggregate_forward(const Matrix& h, CsrView graph, Aggregator kind, Matrix& out);
// Scatter form; valid for any adjacency.
void aggregate_backward(const Matrix& h, const Matrix& grad_out, CsrView graph, Aggregator kind,
                        Matrix& grad_h);

}  // namespace serial

}  // namespace readmit::kernels
