#include <algorithm>
#include <cmath>
#include <vector>

#include "rdp_terms.hpp"
#include "sdpet/kernels.hpp"

namespace sdpet::kernels {

namespace {

// Sum of fn(j) over [0, n): each fixed-size block is summed sequentially, then
// the block partials are summed in block order. The thread count never
// changes the association order.
template <typename Fn>
double blocked_reduce(std::size_t n, Fn&& fn) {
  const std::size_t nblocks = (n + kReduceBlock - 1) / kReduceBlock;
  std::vector<double> partial(nblocks, 0.0);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t b = 0; b < static_cast<std::ptrdiff_t>(nblocks); ++b) {
    const std::size_t lo = static_cast<std::size_t>(b) * kReduceBlock;
    const std::size_t hi = std::min(n, lo + kReduceBlock);
    double acc = 0.0;
    for (std::size_t j = lo; j < hi; ++j) acc += fn(j);
    partial[static_cast<std::size_t>(b)] = acc;
  }
  double total = 0.0;
  for (double v : partial) total += v;
  return total;
}

}  // namespace

double sum(std::span<const double> x) {
  return blocked_reduce(x.size(), [&](std::size_t j) { return x[j]; });
}

double dot(std::span<const double> x, std::span<const double> y) {
  return blocked_reduce(x.size(), [&](std::size_t j) { return x[j] * y[j]; });
}

void spmv(const CsrMatrix& a, std::span<const double> x, std::span<double> y) {
#pragma omp parallel for schedule(dynamic, 256)
  for (std::ptrdiff_t r = 0; r < static_cast<std::ptrdiff_t>(a.rows); ++r) {
    double acc = 0.0;
    for (auto e = a.row_ptr[r]; e < a.row_ptr[r + 1]; ++e) acc += a.values[e] * x[a.col_idx[e]];
    y[static_cast<std::size_t>(r)] = acc;
  }
}

double rdp_value(const GridNeighborhood& nb, const RdpParams& p, std::span<const double> f) {
  return blocked_reduce(nb.rows * nb.cols, [&](std::size_t j) {
    double local = 0.0;
    detail::for_each_neighbor(nb, j / nb.cols, j % nb.cols, [&](std::size_t k) {
      local += detail::rdp_pair_value(f[j], f[k], p.gamma_r, p.epsilon);
    });
    return local;
  });
}

void rdp_gradient(const GridNeighborhood& nb, const RdpParams& p, std::span<const double> f,
                  std::span<double> grad) {
  const auto n = static_cast<std::ptrdiff_t>(nb.rows * nb.cols);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t jj = 0; jj < n; ++jj) {
    const auto j = static_cast<std::size_t>(jj);
    double g = 0.0;
    detail::for_each_neighbor(nb, j / nb.cols, j % nb.cols, [&](std::size_t k) {
      g += detail::rdp_pair_gradient(f[j], f[k], p.gamma_r, p.epsilon);
    });
    grad[j] = g;
  }
}

double rdp_hessian_form(const GridNeighborhood& nb, const RdpParams& p, std::span<const double> f,
                        std::span<const double> x) {
  return blocked_reduce(nb.rows * nb.cols, [&](std::size_t j) {
    double local = 0.0;
    detail::for_each_neighbor(nb, j / nb.cols, j % nb.cols, [&](std::size_t k) {
      local += detail::rdp_pair_hessian(f[j], f[k], x[j], x[k], p.gamma_r, p.epsilon);
    });
    return local;
  });
}

void gradient_magnitude(std::size_t rows, std::size_t cols, std::span<const double> f,
                        std::span<double> out) {
  const auto nrows = static_cast<std::ptrdiff_t>(rows);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t rr = 0; rr < nrows; ++rr) {
    const auto r = static_cast<std::size_t>(rr);
    for (std::size_t c = 0; c < cols; ++c) {
      const double* row = f.data() + r * cols;
      double gx, gy;
      if (c == 0) gx = row[1] - row[0];
      else if (c == cols - 1) gx = row[c] - row[c - 1];
      else gx = (row[c + 1] - row[c - 1]) / 2.0;
      if (r == 0) gy = f[cols + c] - f[c];
      else if (r == rows - 1) gy = f[r * cols + c] - f[(r - 1) * cols + c];
      else gy = (f[(r + 1) * cols + c] - f[(r - 1) * cols + c]) / 2.0;
      out[r * cols + c] = std::sqrt(gx * gx + gy * gy);
    }
  }
}

}  // namespace sdpet::kernels
