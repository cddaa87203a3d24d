#pragma once

#include <cmath>
#include <memory>
#include <random>
#include <vector>

#include "sdpet/objective.hpp"
#include "sdpet/projector.hpp"
#include "sdpet/random.hpp"

namespace testing {

inline sdpet::ScannerGeometry tiny_geometry(std::size_t n = 8, std::size_t angles = 8,
                                            std::size_t radial = 12) {
  sdpet::ScannerGeometry g;
  g.rows = g.cols = n;
  g.pixel_size = 1.0;
  g.fov = static_cast<double>(n);
  g.n_angles = angles;
  g.n_radial = radial;
  g.detector_width = 0.5;
  g.rays_per_bin = 4;
  return g;
}

inline std::vector<double> uniform_vector(std::size_t n, double lo, double hi, std::uint64_t seed) {
  sdpet::CounterRng rng(seed, 7);
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<double> v(n);
  for (auto& x : v) x = u(rng);
  return v;
}

inline double rel_err(double a, double b) {
  const double scale = std::max({std::abs(a), std::abs(b), 1e-300});
  return std::abs(a - b) / scale;
}

// Small but fully populated Poisson problem: counts drawn around A f_true + background.
struct ToyProblem {
  std::shared_ptr<const sdpet::SystemMatrix> a;
  std::vector<double> counts;
  std::vector<double> background;
};

inline ToyProblem toy_problem(const sdpet::ScannerGeometry& g, std::uint64_t seed = 3) {
  ToyProblem t;
  t.a = std::make_shared<const sdpet::SystemMatrix>(sdpet::build_system_matrix(g));
  const auto f_true = uniform_vector(g.pixels(), 0.5, 4.0, seed);
  const auto y = sdpet::forward_project(*t.a, f_true);
  sdpet::CounterRng rng(seed, 11);
  t.background.assign(y.size(), 0.3);
  t.counts.resize(y.size());
  for (std::size_t b = 0; b < y.size(); ++b) {
    std::poisson_distribution<long> pd(y[b] + t.background[b]);
    t.counts[b] = static_cast<double>(pd(rng));
  }
  return t;
}

inline sdpet::Objective toy_objective(const sdpet::ScannerGeometry& g, std::size_t m, double beta,
                                      std::uint64_t seed = 3) {
  auto t = toy_problem(g, seed);
  return sdpet::Objective(t.a, t.counts, t.background, sdpet::ModelParams{beta, 2.0, 1e-12},
                          sdpet::partition_subsets(g, m));
}

}  // namespace testing

namespace testing {

// System matrix from a dense row-major p x q array, on a rows x cols grid.
inline std::shared_ptr<const sdpet::SystemMatrix> dense_system(std::size_t rows, std::size_t cols,
                                                               std::size_t p,
                                                               const std::vector<double>& dense) {
  sdpet::SystemMatrix sm;
  sm.geometry.rows = rows;
  sm.geometry.cols = cols;
  auto& a = sm.forward;
  a.rows = p;
  a.cols = rows * cols;
  for (std::size_t b = 0; b < p; ++b) {
    for (std::size_t j = 0; j < a.cols; ++j)
      if (dense[b * a.cols + j] != 0.0) {
        a.col_idx.push_back(static_cast<std::uint32_t>(j));
        a.values.push_back(dense[b * a.cols + j]);
      }
    a.row_ptr.push_back(a.values.size());
  }
  sm.adjoint = a.transpose();
  return std::make_shared<const sdpet::SystemMatrix>(std::move(sm));
}

inline sdpet::SubsetPartition single_subset(std::size_t p) {
  sdpet::SubsetPartition part;
  part.count = 1;
  part.index_sets.emplace_back(p);
  for (std::size_t b = 0; b < p; ++b) part.index_sets[0][b] = b;
  part.access_order = {0};
  return part;
}

// Central difference of fn along coordinate j with step h.
template <typename Fn>
double central_difference(Fn&& fn, std::vector<double> f, std::size_t j, double h) {
  const double f0 = f[j];
  f[j] = f0 + h;
  const double up = fn(f);
  f[j] = f0 - h;
  const double down = fn(f);
  return (up - down) / (2.0 * h);
}

// Fourth-order five-point stencil; tolerates larger steps, so less cancellation
// when the function value is large compared to the derivative.
template <typename Fn>
double five_point_difference(Fn&& fn, std::vector<double> f, std::size_t j, double h) {
  const double f0 = f[j];
  double acc = 0.0;
  for (auto [k, w] : {std::pair{2.0, -1.0}, {1.0, 8.0}, {-1.0, -8.0}, {-2.0, 1.0}}) {
    f[j] = f0 + k * h;
    acc += w * fn(f);
  }
  return acc / (12.0 * h);
}

}  // namespace testing
