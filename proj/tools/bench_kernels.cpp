// Timing comparison between the serial reference kernels and the
// OpenMP-parallel ones used by the library.

#include <chrono>
#include <cstdio>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif
#ifdef __GLIBC__
#include <malloc.h>
#endif

#include "scorelab/kernels.hpp"
#include "scorelab/metrics.hpp"
#include "scorelab/mixture.hpp"
#include "scorelab/rng.hpp"

namespace {

using scorelab::numcore::Rng;
using scorelab::numcore::Tensor;

double now_ms() {
  using clock = std::chrono::steady_clock;
  return std::chrono::duration<double, std::milli>(
             clock::now().time_since_epoch())
      .count();
}

template <typename F>
double time_ms(F&& fn, int reps) {
  fn();  // warm up
  const double t0 = now_ms();
  for (int r = 0; r < reps; ++r) fn();
  return (now_ms() - t0) / reps;
}

void row(const char* name, double serial_ms, double parallel_ms) {
  std::printf("%-28s %10.2f ms %10.2f ms %8.2fx\n", name, serial_ms,
              parallel_ms, serial_ms / parallel_ms);
}

}  // namespace

int main() {
#ifdef __GLIBC__
  // keep large result buffers heap-resident across calls so the timings
  // measure the kernels, not mmap page faults
  mallopt(M_MMAP_THRESHOLD, 64 << 20);
#endif
#ifdef _OPENMP
  std::printf("threads: %d\n", omp_get_max_threads());
#else
  std::printf("threads: 1 (OpenMP disabled)\n");
#endif
  std::printf("%-28s %13s %13s %9s\n", "kernel", "serial", "parallel",
              "speedup");

  Rng rng(7);
  {
    const std::size_t n = 384;
    std::vector<double> a(n * n), b(n * n), c(n * n);
    for (auto& v : a) v = rng.normal();
    for (auto& v : b) v = rng.normal();
    const double s = time_ms(
        [&] { scorelab::reference::gemm_nn(a.data(), b.data(), c.data(), n, n, n, false); },
        5);
    const double p = time_ms(
        [&] { scorelab::kernels::gemm_nn(a.data(), b.data(), c.data(), n, n, n, false); },
        5);
    row("gemm_nn 384^3", s, p);
  }
  {
    const std::size_t n = 384;
    std::vector<double> a(n * n), b(n * n), c(n * n);
    for (auto& v : a) v = rng.normal();
    for (auto& v : b) v = rng.normal();
    const double s = time_ms(
        [&] { scorelab::reference::gemm_tn(a.data(), b.data(), c.data(), n, n, n, false); },
        5);
    const double p = time_ms(
        [&] { scorelab::kernels::gemm_tn(a.data(), b.data(), c.data(), n, n, n, false); },
        5);
    row("gemm_tn 384^3", s, p);
  }
  {
    // batch mixture score, one thread vs all
    scorelab::sde::SdeConfig cfg;
    auto gm = scorelab::analytic::make_ring_mixture(4, 4.0, 0.35);
    const std::size_t n = 200000;
    Tensor x = Tensor::randn({n, 2}, rng, 5.0);
    const double t = 0.5;
    const auto run = [&] { scorelab::analytic::mixture_score(gm, x, t, cfg); };
#ifdef _OPENMP
    const int max_threads = omp_get_max_threads();
    omp_set_num_threads(1);
    const double s = time_ms(run, 5);
    omp_set_num_threads(max_threads);
#else
    const double s = time_ms(run, 5);
#endif
    const double p = time_ms(run, 5);
    row("mixture score 200k x 2", s, p);
  }
  {
    // silhouette: n^2 pairwise distances
    const std::size_t n = 3000;
    Tensor pts = Tensor::randn({n, 2}, rng);
    std::vector<int> labels(n);
    for (std::size_t i = 0; i < n; ++i) labels[i] = static_cast<int>(i % 3);
#ifdef _OPENMP
    const int max_threads = omp_get_max_threads();
    omp_set_num_threads(1);
    const double s = time_ms(
        [&] { scorelab::metrics::silhouette(pts.values(), 2, labels); }, 3);
    omp_set_num_threads(max_threads);
#else
    const double s = time_ms(
        [&] { scorelab::metrics::silhouette(pts.values(), 2, labels); }, 3);
#endif
    const double p = time_ms(
        [&] { scorelab::metrics::silhouette(pts.values(), 2, labels); }, 3);
    row("silhouette n=3000", s, p);
  }
  return 0;
}
