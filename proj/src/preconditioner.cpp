#include "sdpet/preconditioner.hpp"

#include <algorithm>
#include <cmath>

#include "sdpet/error.hpp"
#include "sdpet/kernels.hpp"

namespace sdpet {

std::string to_string(Variant v) {
  switch (v) {
    case Variant::Identity: return "BSREM";
    case Variant::P1: return "SDP-P1";
    case Variant::P2: return "SDP-P2";
    case Variant::M1: return "SDP-M1";
    case Variant::M2: return "SDP-M2";
  }
  return "?";
}

Variant variant_from_string(const std::string& name) {
  if (name == "BSREM" || name == "identity") return Variant::Identity;
  if (name == "SDP-P1" || name == "P1") return Variant::P1;
  if (name == "SDP-P2" || name == "P2") return Variant::P2;
  if (name == "SDP-M1" || name == "M1") return Variant::M1;
  if (name == "SDP-M2" || name == "M2") return Variant::M2;
  throw Error(ErrorKind::Config, "unknown algorithm variant '" + name + "'");
}

void PrecondConfig::validate() const {
  if (!(upper_bound > 0.0)) throw Error(ErrorKind::Config, "U must be positive");
  for (double v : p)
    if (!(v > 0.0)) throw Error(ErrorKind::Config, "p must be positive");
  if (variant == Variant::P2 || variant == Variant::M2) {
    if (!(rho > 0.0) || !(delta1 > 0.0) || !(delta2 > 0.0))
      throw Error(ErrorKind::Config, "rho, delta1, delta2 must be positive");
  }
  if (variant == Variant::P1 || variant == Variant::P2) {
    if (!(nu_min > 0.0) || !(nu_min < nu_max))
      throw Error(ErrorKind::Config, "need 0 < nu_1 < nu_2");
  }
  if (j0 > j1) throw Error(ErrorKind::Config, "need J0 <= J1");
}

std::vector<double> compute_p_from_sensitivity(std::span<const double> column_sums, std::size_t m) {
  const double md = static_cast<double>(m);
  std::vector<double> p(column_sums.size());
  for (std::size_t j = 0; j < p.size(); ++j)
    p[j] = column_sums[j] > 0.0 ? column_sums[j] / md : 1.0 / md;
  return p;
}

std::vector<double> compute_p(const SystemMatrix& a, std::size_t m) {
  const std::vector<double> ones(a.rows(), 1.0);
  return compute_p_from_sensitivity(back_project(a, ones), m);
}

std::vector<double> base_precond_diag(std::span<const double> f, double upper_bound,
                                      std::span<const double> p) {
  if (f.size() != p.size()) throw Error(ErrorKind::Shape, "p length mismatch");
  std::vector<double> s(f.size());
  const double half = 0.5 * upper_bound;
  for (std::size_t j = 0; j < f.size(); ++j) {
    const double v = f[j];
    if (!(v >= 0.0 && v <= upper_bound))
      throw Error(ErrorKind::Domain, "image value outside [0, U] at pixel " + std::to_string(j));
    s[j] = (v < half ? v : upper_bound - v) / p[j];
  }
  return s;
}

std::pair<double, AlphaState> alpha_nesterov(const AlphaState& state) {
  const double t = state.t;
  const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
  AlphaState next = state;
  next.t = t_next;
  if (++next.i > state.subsets) {
    next.i = 1;
    ++next.k;
  }
  return {1.0 + (t - 1.0) / t_next, next};
}

double alpha_km(std::size_t k, std::size_t i, std::size_t m, double rho, double delta1,
                double delta2) {
  const double n = static_cast<double>(k * m + i) - 1.0;
  return (rho * n + delta2) / (n + delta1);
}

Image numerical_gradient_magnitude(const Image& f) {
  if (f.rows < 2 || f.cols < 2)
    throw Error(ErrorKind::DegenerateImage, "gradient needs at least 2 rows and 2 columns");
  Image out(f.rows, f.cols, f.pixel_size);
  kernels::gradient_magnitude(f.rows, f.cols, f.data, out.data);
  return out;
}

const std::vector<double>& spatial_factor(std::span<const double> f, std::size_t rows,
                                          std::size_t cols, std::size_t j,
                                          SpatialFactorState& state, const PrecondConfig& cfg) {
  const std::size_t q = rows * cols;
  if (f.size() != q) throw Error(ErrorKind::Shape, "image length mismatch");
  if (state.nu.size() != q) state.nu.assign(q, 1.0);
  if (state.frozen || j <= cfg.j0) return state.nu;
  if (j > cfg.j1) {
    state.frozen = true;
    return state.nu;
  }
  if (rows < 2 || cols < 2)
    throw Error(ErrorKind::DegenerateImage, "gradient needs at least 2 rows and 2 columns");
  const double mean_f = kernels::sum(f) / static_cast<double>(q);
  if (!(mean_f > 0.0)) throw Error(ErrorKind::DegenerateImage, "image mean must be positive");

  std::vector<double> mu(q);
  kernels::gradient_magnitude(rows, cols, f, mu);
  for (auto& v : mu) v = std::max(0.01, v / mean_f);
  const double mean_mu = kernels::sum(mu) / static_cast<double>(q);
  for (std::size_t i = 0; i < q; ++i) state.nu[i] = std::clamp(mean_mu / mu[i], cfg.nu_min, cfg.nu_max);
  return state.nu;
}

}  // namespace sdpet
