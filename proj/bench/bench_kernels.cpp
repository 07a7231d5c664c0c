#include <chrono>
#include <cstdio>
#include <string>

#include <omp.h>

#include <CLI11.hpp>

#include "readmit/kernels.hpp"
#include "readmit/rng.hpp"
#include "readmit/simgraph.hpp"

using namespace readmit;

namespace {

template <class F>
double seconds(F&& f) {
  const auto t0 = std::chrono::steady_clock::now();
  f();
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// Rows drawn around a few centers so that high thresholds still find edges.
Matrix clustered(std::size_t n, std::size_t d, std::uint64_t seed) {
  Rng rng(seed);
  const std::size_t k = 64;
  Matrix centers(k, d);
  for (auto& v : centers.data) v = rng.normal();
  Matrix m(n, d);
  for (std::size_t i = 0; i < n; ++i) {
    const auto c = centers.row(rng.below(k));
    for (std::size_t j = 0; j < d; ++j) m(i, j) = c[j] + 0.3 * rng.normal();
  }
  return m;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Kernel timings: parallel vs serial reference."};
  std::size_t n = 20000, d = 128, serial_n = 3000, gemm_n = 512;
  double tau = 0.9;
  int threads = 0;
  app.add_option("--rows", n, "rows for the range search");
  app.add_option("--dim", d, "feature dimension");
  app.add_option("--tau", tau, "cosine threshold");
  app.add_option("--serial-rows", serial_n, "rows for the serial comparison");
  app.add_option("--gemm", gemm_n, "square gemm size");
  app.add_option("--threads", threads, "OpenMP threads");
  CLI11_PARSE(app, argc, argv);
  if (threads > 0) omp_set_num_threads(threads);
  std::printf("threads %d\n", omp_get_max_threads());

  const Matrix x = clustered(n, d, 7);
  simgraph::SimilarityGraph g;
  const double t_range = seconds([&] { g = simgraph::range_search(x, tau); });
  const auto st = simgraph::graph_stats(g);
  std::printf("range_search   n=%zu d=%zu tau=%.2f  %.3f s  edges=%zu degree=%.4f\n", n, d, tau, t_range,
              st.edge_count, st.average_degree);

  Matrix small = clustered(serial_n, d, 11);
  Matrix unit = small;
  kernels::normalize_rows(unit);
  std::size_t np = 0, ns = 0;
  const double t_par = seconds([&] { np = kernels::cosine_pairs(unit, tau).size(); });
  const double t_ser = seconds([&] { ns = kernels::serial::cosine_pairs(small, tau).size(); });
  std::printf("cosine_pairs   n=%zu  parallel %.3f s (%zu pairs)  serial %.3f s (%zu pairs)  speedup %.1fx\n",
              serial_n, t_par, np, t_ser, ns, t_ser / t_par);

  const Matrix a = clustered(gemm_n, gemm_n, 3), b = clustered(gemm_n, gemm_n, 5);
  Matrix c1, c2;
  const double t_gp = seconds([&] { kernels::gemm(a, b, c1); });
  const double t_gs = seconds([&] { kernels::serial::gemm(a, b, c2); });
  const double flops = 2.0 * static_cast<double>(gemm_n) * gemm_n * gemm_n;
  std::printf("gemm           n=%zu  parallel %.3f s (%.2f GFLOP/s)  serial %.3f s  speedup %.1fx\n", gemm_n, t_gp,
              flops / t_gp * 1e-9, t_gs, t_gs / t_gp);
  return 0;
}
