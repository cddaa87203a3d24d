#pragma once

#include <cmath>
#include <cstddef>

#include "sdpet/kernels.hpp"

namespace sdpet::detail {

// Per ordered pair (j, k) contributions of the relative difference prior.

inline double rdp_denominator(double fj, double fk, double gamma_r, double eps) {
  return fj + fk + gamma_r * std::abs(fj - fk) + eps;
}

inline double rdp_pair_value(double fj, double fk, double gamma_r, double eps) {
  const double d = fj - fk;
  return d * d / rdp_denominator(fj, fk, gamma_r, eps);
}

/// d/dfj of the pair term, already doubled for the (k, j) twin.
inline double rdp_pair_gradient(double fj, double fk, double gamma_r, double eps) {
  const double d = fj - fk;
  const double den = rdp_denominator(fj, fk, gamma_r, eps);
  return 2.0 * d * (gamma_r * std::abs(d) + fj + 3.0 * fk + 2.0 * eps) / (den * den);
}

inline double rdp_pair_hessian(double fj, double fk, double xj, double xk, double gamma_r,
                               double eps) {
  const double den = rdp_denominator(fj, fk, gamma_r, eps);
  const double u = (2.0 * fk + eps) * xj - (2.0 * fj + eps) * xk;
  return 2.0 * u * u / (den * den * den);
}


template <typename Fn>
void for_each_neighbor(const GridNeighborhood& nb, std::size_t r, std::size_t c, Fn&& fn) {
  for (auto [dr, dc] : nb.offsets) {
    const auto rr = static_cast<std::ptrdiff_t>(r) + dr;
    const auto cc = static_cast<std::ptrdiff_t>(c) + dc;
    if (rr < 0 || cc < 0 || rr >= static_cast<std::ptrdiff_t>(nb.rows) ||
        cc >= static_cast<std::ptrdiff_t>(nb.cols))
      continue;
    fn(static_cast<std::size_t>(rr) * nb.cols + static_cast<std::size_t>(cc));
  }
}

}  // namespace sdpet::detail
