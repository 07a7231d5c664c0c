#include "readmit/kernels.hpp"

#include <algorithm>
#include <cmath>

#include "readmit/error.hpp"

namespace readmit::kernels {

namespace {

void check(bool ok, const char* op, const Matrix& a, const Matrix& b) {
  if (!ok) {
    fail(ErrorKind::Shape, std::string(op) + ": incompatible shapes " + std::to_string(a.rows) + "x" +
                               std::to_string(a.cols) + " and " + std::to_string(b.rows) + "x" +
                               std::to_string(b.cols));
  }
}

void prepare(Matrix& c, std::size_t rows, std::size_t cols, bool accumulate) {
  if (accumulate) {
    if (c.rows != rows || c.cols != cols) {
      fail(ErrorKind::Shape, "accumulate target is " + std::to_string(c.rows) + "x" + std::to_string(c.cols) +
                                 ", expected " + std::to_string(rows) + "x" + std::to_string(cols));
    }
    return;
  }
  if (c.rows == rows && c.cols == cols) {
    std::fill(c.data.begin(), c.data.end(), 0.0);
  } else {
    c = Matrix(rows, cols);
  }
}

constexpr std::size_t kTnBlock = 64;
constexpr std::size_t kPairChunk = 256;

}  // namespace

void gemm(const Matrix& a, const Matrix& b, Matrix& c, bool accumulate) {
  check(a.cols == b.rows, "gemm", a, b);
  prepare(c, a.rows, b.cols, accumulate);
  const std::size_t n = a.rows, k = a.cols, m = b.cols;
  const double* bp = b.data.data();
#pragma omp parallel for schedule(static)
  for (std::size_t i = 0; i < n; ++i) {
    double* ci = c.data.data() + i * m;
    const double* ai = a.data.data() + i * k;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = ai[p];
      if (av == 0.0) continue;
      const double* bk = bp + p * m;
#pragma omp simd
      for (std::size_t j = 0; j < m; ++j) ci[j] += av * bk[j];
    }
  }
}

void gemm_tn(const Matrix& a, const Matrix& b, Matrix& c, bool accumulate) {
  check(a.rows == b.rows, "gemm_tn", a, b);
  prepare(c, a.cols, b.cols, accumulate);
  const std::size_t n = a.rows, k = a.cols, m = b.cols;
  const std::size_t blocks = (k + kTnBlock - 1) / kTnBlock;
#pragma omp parallel for schedule(static)
  for (std::size_t blk = 0; blk < blocks; ++blk) {
    const std::size_t p0 = blk * kTnBlock, p1 = std::min(k, p0 + kTnBlock);
    for (std::size_t r = 0; r < n; ++r) {
      const double* ar = a.data.data() + r * k;
      const double* br = b.data.data() + r * m;
      for (std::size_t p = p0; p < p1; ++p) {
        const double av = ar[p];
        if (av == 0.0) continue;
        double* cp = c.data.data() + p * m;
#pragma omp simd
        for (std::size_t j = 0; j < m; ++j) cp[j] += av * br[j];
      }
    }
  }
}

void gemm_nt(const Matrix& a, const Matrix& b, Matrix& c, bool accumulate) {
  check(a.cols == b.cols, "gemm_nt", a, b);
  prepare(c, a.rows, b.rows, accumulate);
  const std::size_t n = a.rows, k = a.cols, m = b.rows;
#pragma omp parallel for schedule(static)
  for (std::size_t i = 0; i < n; ++i) {
    const double* ai = a.data.data() + i * k;
    double* ci = c.data.data() + i * m;
    for (std::size_t j = 0; j < m; ++j) {
      const double* bj = b.data.data() + j * k;
      double s = 0.0;
#pragma omp simd reduction(+ : s)
      for (std::size_t p = 0; p < k; ++p) s += ai[p] * bj[p];
      ci[j] += s;
    }
  }
}

void normalize_rows(Matrix& m) {
  const std::size_t n = m.rows;
#pragma omp parallel for schedule(static)
  for (std::size_t i = 0; i < n; ++i) {
    auto row = m.row(i);
    double norm2 = 0.0;
    for (double v : row) norm2 += v * v;
    if (norm2 == 0.0) continue;
    const double inv = 1.0 / std::sqrt(norm2);
    for (double& v : row) v *= inv;
  }
}

std::vector<std::pair<std::uint32_t, std::uint32_t>> cosine_pairs(const Matrix& x, double tau, std::size_t tile) {
  if (tile == 0) fail(ErrorKind::Config, "tile size must be positive");
  const std::size_t n = x.rows, d = x.cols;
  const double threshold = tau - kCosineSlack;
  const std::size_t n_tiles = (n + tile - 1) / tile;
  std::vector<std::pair<std::size_t, std::size_t>> tiles;
  for (std::size_t bi = 0; bi < n_tiles; ++bi) {
    for (std::size_t bj = bi; bj < n_tiles; ++bj) tiles.emplace_back(bi, bj);
  }
  std::vector<std::vector<std::pair<std::uint32_t, std::uint32_t>>> found(tiles.size());

#pragma omp parallel
  {
    std::vector<double> packed(d * kPairChunk);
    std::vector<double> acc(kPairChunk);
#pragma omp for schedule(dynamic, 1)
    for (std::size_t t = 0; t < tiles.size(); ++t) {
      const std::size_t i0 = tiles[t].first * tile, i1 = std::min(n, i0 + tile);
      const std::size_t j0 = tiles[t].second * tile, j1 = std::min(n, j0 + tile);
      auto& out = found[t];
      for (std::size_t c0 = j0; c0 < j1; c0 += kPairChunk) {
        const std::size_t c1 = std::min(j1, c0 + kPairChunk), len = c1 - c0;
        if (c1 <= i0 + 1) continue;  // whole chunk at or below the diagonal
        for (std::size_t j = c0; j < c1; ++j) {
          const double* xj = x.data.data() + j * d;
          for (std::size_t p = 0; p < d; ++p) packed[p * len + (j - c0)] = xj[p];
        }
        for (std::size_t i = i0; i < i1; ++i) {
          const std::size_t start = std::max(c0, i + 1);
          if (start >= c1) continue;
          const std::size_t s = start - c0;
          std::fill(acc.begin() + static_cast<std::ptrdiff_t>(s), acc.begin() + static_cast<std::ptrdiff_t>(len), 0.0);
          const double* xi = x.data.data() + i * d;
          for (std::size_t p = 0; p < d; ++p) {
            const double v = xi[p];
            if (v == 0.0) continue;
            const double* col = packed.data() + p * len;
#pragma omp simd
            for (std::size_t q = s; q < len; ++q) acc[q] += v * col[q];
          }
          for (std::size_t q = s; q < len; ++q) {
            if (acc[q] >= threshold) {
              out.emplace_back(static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(c0 + q));
            }
          }
        }
      }
    }
  }

  std::size_t total = 0;
  for (const auto& f : found) total += f.size();
  std::vector<std::pair<std::uint32_t, std::uint32_t>> pairs;
  pairs.reserve(total);
  for (auto& f : found) pairs.insert(pairs.end(), f.begin(), f.end());
  return pairs;
}

void aggregate_forward(const Matrix& h, CsrView g, Aggregator kind, Matrix& out,
                       std::vector<std::uint32_t>* argmax) {
  const std::size_t n = h.rows, d = h.cols;
  if (g.nodes() != n) {
    fail(ErrorKind::Shape, "aggregate: graph has " + std::to_string(g.nodes()) + " nodes, features have " +
                               std::to_string(n) + " rows");
  }
  prepare(out, n, d, false);
  if (kind == Aggregator::Max) {
    if (!argmax) fail(ErrorKind::State, "max aggregation needs an argmax buffer");
    argmax->assign(n * d, 0);
  }
#pragma omp parallel for schedule(dynamic, 64)
  for (std::size_t i = 0; i < n; ++i) {
    const auto nb = g.of(i);
    double* o = out.data.data() + i * d;
    if (nb.empty()) continue;
    if (kind == Aggregator::Max) {
      std::uint32_t* am = argmax->data() + i * d;
      const double* first = h.data.data() + static_cast<std::size_t>(nb[0]) * d;
      for (std::size_t c = 0; c < d; ++c) {
        o[c] = first[c];
        am[c] = nb[0];
      }
      for (std::size_t k = 1; k < nb.size(); ++k) {
        const double* hj = h.data.data() + static_cast<std::size_t>(nb[k]) * d;
        for (std::size_t c = 0; c < d; ++c) {
          if (hj[c] > o[c]) {
            o[c] = hj[c];
            am[c] = nb[k];
          }
        }
      }
      continue;
    }
    for (auto j : nb) {
      const double* hj = h.data.data() + static_cast<std::size_t>(j) * d;
#pragma omp simd
      for (std::size_t c = 0; c < d; ++c) o[c] += hj[c];
    }
    if (kind == Aggregator::Mean) {
      const double deg = static_cast<double>(nb.size());
      for (std::size_t c = 0; c < d; ++c) o[c] /= deg;
    }
  }
}

void aggregate_backward(const Matrix& grad_out, CsrView g, Aggregator kind,
                        const std::vector<std::uint32_t>* argmax, Matrix& grad_h) {
  const std::size_t n = grad_out.rows, d = grad_out.cols;
  prepare(grad_h, n, d, true);
  if (kind == Aggregator::Max && (!argmax || argmax->size() != n * d)) {
    fail(ErrorKind::State, "max aggregation backward without forward argmax");
  }
#pragma omp parallel for schedule(dynamic, 64)
  for (std::size_t j = 0; j < n; ++j) {
    double* gj = grad_h.data.data() + j * d;
    for (auto i : g.of(j)) {
      const double* go = grad_out.data.data() + static_cast<std::size_t>(i) * d;
      switch (kind) {
        case Aggregator::Add:
#pragma omp simd
          for (std::size_t c = 0; c < d; ++c) gj[c] += go[c];
          break;
        case Aggregator::Mean: {
          const double inv = 1.0 / static_cast<double>(g.of(i).size());
#pragma omp simd
          for (std::size_t c = 0; c < d; ++c) gj[c] += go[c] * inv;
          break;
        }
        case Aggregator::Max: {
          const std::uint32_t* am = argmax->data() + static_cast<std::size_t>(i) * d;
          for (std::size_t c = 0; c < d; ++c) {
            if (am[c] == j) gj[c] += go[c];
          }
          break;
        }
      }
    }
  }
}

// ---------------------------------------------------------------------------

namespace serial {

void gemm(const Matrix& a, const Matrix& b, Matrix& c) {
  check(a.cols == b.rows, "gemm", a, b);
  c = Matrix(a.rows, b.cols);
  for (std::size_t i = 0; i < a.rows; ++i) {
    for (std::size_t j = 0; j < b.cols; ++j) {
      double s = 0.0;
      for (std::size_t p = 0; p < a.cols; ++p) s += a(i, p) * b(p, j);
      c(i, j) = s;
    }
  }
}

void gemm_tn(const Matrix& a, const Matrix& b, Matrix& c) {
  check(a.rows == b.rows, "gemm_tn", a, b);
  c = Matrix(a.cols, b.cols);
  for (std::size_t i = 0; i < a.cols; ++i) {
    for (std::size_t j = 0; j < b.cols; ++j) {
      double s = 0.0;
      for (std::size_t r = 0; r < a.rows; ++r) s += a(r, i) * b(r, j);
      c(i, j) = s;
    }
  }
}

void gemm_nt(const Matrix& a, const Matrix& b, Matrix& c) {
  check(a.cols == b.cols, "gemm_nt", a, b);
  c = Matrix(a.rows, b.rows);
  for (std::size_t i = 0; i < a.rows; ++i) {
    for (std::size_t j = 0; j < b.rows; ++j) {
      double s = 0.0;
      for (std::size_t p = 0; p < a.cols; ++p) s += a(i, p) * b(j, p);
      c(i, j) = s;
    }
  }
}

std::vector<std::pair<std::uint32_t, std::uint32_t>> cosine_pairs(const Matrix& x, double tau) {
  std::vector<long double> norms(x.rows);
  for (std::size_t i = 0; i < x.rows; ++i) {
    long double s = 0.0L;
    for (double v : x.row(i)) s += static_cast<long double>(v) * v;
    norms[i] = std::sqrt(s);
  }
  std::vector<std::pair<std::uint32_t, std::uint32_t>> out;
  for (std::size_t i = 0; i < x.rows; ++i) {
    for (std::size_t j = i + 1; j < x.rows; ++j) {
      long double cosine = 0.0L;
      if (norms[i] > 0.0L && norms[j] > 0.0L) {
        long double dot = 0.0L;
        for (std::size_t p = 0; p < x.cols; ++p) dot += static_cast<long double>(x(i, p)) * x(j, p);
        cosine = dot / (norms[i] * norms[j]);
      }
      if (cosine >= static_cast<long double>(tau) - kCosineSlack) {
        out.emplace_back(static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(j));
      }
    }
  }
  return out;
}

void aggregate_forward(const Matrix& h, CsrView g, Aggregator kind, Matrix& out) {
  out = Matrix(h.rows, h.cols);
  for (std::size_t i = 0; i < h.rows; ++i) {
    const auto nb = g.of(i);
    for (std::size_t c = 0; c < h.cols; ++c) {
      double v = kind == Aggregator::Max ? -INFINITY : 0.0;
      for (auto j : nb) v = kind == Aggregator::Max ? std::max(v, h(j, c)) : v + h(j, c);
      if (kind == Aggregator::Mean) v /= static_cast<double>(nb.size());
      out(i, c) = nb.empty() ? 0.0 : v;
    }
  }
}

void aggregate_backward(const Matrix& h, const Matrix& grad_out, CsrView g, Aggregator kind, Matrix& grad_h) {
  grad_h = Matrix(h.rows, h.cols);
  for (std::size_t i = 0; i < h.rows; ++i) {
    const auto nb = g.of(i);
    for (std::size_t c = 0; c < h.cols; ++c) {
      if (kind == Aggregator::Max) {
        std::uint32_t best = nb[0];
        for (auto j : nb) {
          if (h(j, c) > h(best, c)) best = j;
        }
        grad_h(best, c) += grad_out(i, c);
      } else {
        const double w = kind == Aggregator::Mean ? 1.0 / static_cast<double>(nb.size()) : 1.0;
        for (auto j : nb) grad_h(j, c) += w * grad_out(i, c);
      }
    }
  }
}

}  // namespace serial

}  // namespace readmit::kernels
