#pragma once

// Data-parallel inner loops. Everything in sdpet::kernels is OpenMP-parallel
// and deterministic: results do not depend on the thread count. The
// sdpet::kernels::serial namespace holds plain single-threaded versions of the
// same loops, kept as a reference for tests and for the benchmark.

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "sdpet/sparse.hpp"

namespace sdpet {

/// Pixel neighbourhood on a rows x cols grid, as (drow, dcol) offsets.
/// Offsets must be symmetric; neighbours outside the grid are dropped.
struct GridNeighborhood {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<std::pair<int, int>> offsets;

  static GridNeighborhood eight_point(std::size_t rows, std::size_t cols);
  static GridNeighborhood four_point(std::size_t rows, std::size_t cols);
  bool is_symmetric() const;
};

struct RdpParams {
  double gamma_r = 2.0;
  double epsilon = 1e-12;
};

namespace kernels {

/// Fixed block length of the deterministic reductions.
inline constexpr std::size_t kReduceBlock = 2048;

double sum(std::span<const double> x);
double dot(std::span<const double> x, std::span<const double> y);

/// y = A x (row-parallel).
void spmv(const CsrMatrix& a, std::span<const double> x, std::span<double> y);

double rdp_value(const GridNeighborhood& nb, const RdpParams& p, std::span<const double> f);
void rdp_gradient(const GridNeighborhood& nb, const RdpParams& p, std::span<const double> f,
                  std::span<double> grad);
/// x^T (Hessian of R at f) x, evaluated without forming the Hessian.
double rdp_hessian_form(const GridNeighborhood& nb, const RdpParams& p, std::span<const double> f,
                        std::span<const double> x);

/// Elementwise sqrt(gx^2 + gy^2) with central differences inside and one-sided at the edges.
void gradient_magnitude(std::size_t rows, std::size_t cols, std::span<const double> f,
                        std::span<double> out);

namespace serial {

double sum(std::span<const double> x);
double dot(std::span<const double> x, std::span<const double> y);
void spmv(const CsrMatrix& a, std::span<const double> x, std::span<double> y);
double rdp_value(const GridNeighborhood& nb, const RdpParams& p, std::span<const double> f);
void rdp_gradient(const GridNeighborhood& nb, const RdpParams& p, std::span<const double> f,
                  std::span<double> grad);
double rdp_hessian_form(const GridNeighborhood& nb, const RdpParams& p, std::span<const double> f,
                        std::span<const double> x);
void gradient_magnitude(std::size_t rows, std::size_t cols, std::span<const double> f,
                        std::span<double> out);

}  // namespace serial
}  // namespace kernels
}  // namespace sdpet
