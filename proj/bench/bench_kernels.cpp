// Serial reference kernels vs. their OpenMP counterparts on desk- and full-scale sizes.
#include <chrono>
#include <cstdio>
#include <functional>
#include <random>
#include <vector>

#include <omp.h>

#include "sdpet/kernels.hpp"
#include "sdpet/projector.hpp"
#include "sdpet/random.hpp"

using namespace sdpet;

namespace {

double time_ms(const std::function<void()>& fn, int reps) {
  fn();  // warm-up
  const auto t0 = std::chrono::steady_clock::now();
  for (int r = 0; r < reps; ++r) fn();
  const auto t1 = std::chrono::steady_clock::now();
  return std::chrono::duration<double, std::milli>(t1 - t0).count() / reps;
}

std::vector<double> random_image(std::size_t n, std::uint64_t seed) {
  CounterRng rng(seed, 0);
  std::uniform_real_distribution<double> u(0.1, 10.0);
  std::vector<double> f(n);
  for (auto& v : f) v = u(rng);
  return f;
}

void row(const char* name, double serial, double parallel) {
  std::printf("%-28s %10.3f ms %10.3f ms %8.2fx\n", name, serial, parallel, serial / parallel);
}

void bench_grid(std::size_t n, int reps) {
  const auto nb = GridNeighborhood::eight_point(n, n);
  const auto f = random_image(n * n, 1);
  const auto x = random_image(n * n, 2);
  std::vector<double> out(n * n);
  RdpParams p;
  volatile double sink = 0;
  std::printf("-- %zux%zu image\n", n, n);
  row("rdp_value", time_ms([&] { sink = kernels::serial::rdp_value(nb, p, f); }, reps),
      time_ms([&] { sink = kernels::rdp_value(nb, p, f); }, reps));
  row("rdp_gradient", time_ms([&] { kernels::serial::rdp_gradient(nb, p, f, out); }, reps),
      time_ms([&] { kernels::rdp_gradient(nb, p, f, out); }, reps));
  row("rdp_hessian_form", time_ms([&] { sink = kernels::serial::rdp_hessian_form(nb, p, f, x); }, reps),
      time_ms([&] { sink = kernels::rdp_hessian_form(nb, p, f, x); }, reps));
  row("gradient_magnitude",
      time_ms([&] { kernels::serial::gradient_magnitude(n, n, f, out); }, reps),
      time_ms([&] { kernels::gradient_magnitude(n, n, f, out); }, reps));
  row("dot", time_ms([&] { sink = kernels::serial::dot(f, x); }, reps * 10),
      time_ms([&] { sink = kernels::dot(f, x); }, reps * 10));
  (void)sink;
}

void bench_projector(const ScannerGeometry& g, int reps) {
  const auto a = build_system_matrix(g, std::nullopt);
  const auto f = random_image(a.forward.cols, 3);
  const auto y = random_image(a.forward.rows, 4);
  std::vector<double> fwd(a.forward.rows), back(a.forward.cols);
  std::printf("-- projector %zux%zu, %zu bins, nnz %zu\n", g.rows, g.cols, g.bins(), a.forward.nnz());
  row("forward spmv", time_ms([&] { kernels::serial::spmv(a.forward, f, fwd); }, reps),
      time_ms([&] { kernels::spmv(a.forward, f, fwd); }, reps));
  row("adjoint spmv", time_ms([&] { kernels::serial::spmv(a.adjoint, y, back); }, reps),
      time_ms([&] { kernels::spmv(a.adjoint, y, back); }, reps));
}

}  // namespace

int main() {
  std::printf("threads: %d\n", omp_get_max_threads());
  std::printf("%-28s %13s %13s %9s\n", "kernel", "serial", "openmp", "speedup");
  bench_grid(64, 200);
  bench_grid(256, 20);
  bench_projector(ScannerGeometry::desk_scale(), 50);
  return 0;
}
