#include <cmath>

#include "rdp_terms.hpp"
#include "sdpet/kernels.hpp"

namespace sdpet::kernels::serial {

double sum(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += v;
  return s;
}

double dot(std::span<const double> x, std::span<const double> y) {
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * y[i];
  return s;
}

void spmv(const CsrMatrix& a, std::span<const double> x, std::span<double> y) {
  for (std::size_t r = 0; r < a.rows; ++r) {
    double acc = 0.0;
    for (auto e = a.row_ptr[r]; e < a.row_ptr[r + 1]; ++e) acc += a.values[e] * x[a.col_idx[e]];
    y[r] = acc;
  }
}

double rdp_value(const GridNeighborhood& nb, const RdpParams& p, std::span<const double> f) {
  double total = 0.0;
  for (std::size_t r = 0; r < nb.rows; ++r)
    for (std::size_t c = 0; c < nb.cols; ++c) {
      const std::size_t j = r * nb.cols + c;
      detail::for_each_neighbor(nb, r, c, [&](std::size_t k) {
        total += detail::rdp_pair_value(f[j], f[k], p.gamma_r, p.epsilon);
      });
    }
  return total;
}

void rdp_gradient(const GridNeighborhood& nb, const RdpParams& p, std::span<const double> f,
                  std::span<double> grad) {
  for (std::size_t r = 0; r < nb.rows; ++r)
    for (std::size_t c = 0; c < nb.cols; ++c) {
      const std::size_t j = r * nb.cols + c;
      double g = 0.0;
      detail::for_each_neighbor(nb, r, c, [&](std::size_t k) {
        g += detail::rdp_pair_gradient(f[j], f[k], p.gamma_r, p.epsilon);
      });
      grad[j] = g;
    }
}

double rdp_hessian_form(const GridNeighborhood& nb, const RdpParams& p, std::span<const double> f,
                        std::span<const double> x) {
  double total = 0.0;
  for (std::size_t r = 0; r < nb.rows; ++r)
    for (std::size_t c = 0; c < nb.cols; ++c) {
      const std::size_t j = r * nb.cols + c;
      detail::for_each_neighbor(nb, r, c, [&](std::size_t k) {
        total += detail::rdp_pair_hessian(f[j], f[k], x[j], x[k], p.gamma_r, p.epsilon);
      });
    }
  return total;
}

void gradient_magnitude(std::size_t rows, std::size_t cols, std::span<const double> f,
                        std::span<double> out) {
  auto at = [&](std::size_t r, std::size_t c) { return f[r * cols + c]; };
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) {
      double gx, gy;
      if (c == 0) gx = at(r, 1) - at(r, 0);
      else if (c == cols - 1) gx = at(r, c) - at(r, c - 1);
      else gx = (at(r, c + 1) - at(r, c - 1)) / 2.0;
      if (r == 0) gy = at(1, c) - at(0, c);
      else if (r == rows - 1) gy = at(r, c) - at(r - 1, c);
      else gy = (at(r + 1, c) - at(r - 1, c)) / 2.0;
      out[r * cols + c] = std::sqrt(gx * gx + gy * gy);
    }
}

}  // namespace sdpet::kernels::serial
