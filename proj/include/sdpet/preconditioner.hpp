#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "sdpet/image.hpp"
#include "sdpet/projector.hpp"

namespace sdpet {

/// Preconditioner family. Identity keeps alpha = 1 and nu = 1 (plain BSREM);
/// P1/M1 use the Nesterov alpha sequence, P2/M2 the extended-momentum one;
/// P1/P2 additionally apply the spatial factor nu.
enum class Variant { Identity, P1, P2, M1, M2 };

std::string to_string(Variant v);
Variant variant_from_string(const std::string& name);  // "BSREM", "SDP-P1", "P1", ...

struct PrecondConfig {
  double upper_bound = 1.0;    // U
  std::vector<double> p;       // positive per-pixel scaling
  Variant variant = Variant::Identity;
  double rho = 1.0;            // limit of the extended-momentum alpha
  double delta1 = 1.0;
  double delta2 = 1.0;
  double nu_min = 1.0;         // nu_1
  double nu_max = 1.0;         // nu_2
  std::size_t j0 = 0;          // spatial factor is 1 up to this subiteration
  std::size_t j1 = 0;          // and frozen after this one

  void validate() const;
};

/// p_j = (A^T 1)_j / M, or 1/M for pixels no ray sees.
std::vector<double> compute_p(const SystemMatrix& a, std::size_t m);
std::vector<double> compute_p_from_sensitivity(std::span<const double> column_sums, std::size_t m);

/// Diagonal of S(f): f_j / p_j below U/2, (U - f_j) / p_j from U/2 up.
std::vector<double> base_precond_diag(std::span<const double> f, double upper_bound,
                                      std::span<const double> p);

/// Nesterov auxiliary sequence. t starts at 1 for (k, i) = (0, 1) and runs
/// on across iterations: t_{k+1,1} = t_{k,M+1}. i is 1-based.
struct AlphaState {
  double t = 1.0;
  std::size_t k = 0;
  std::size_t i = 1;
  std::size_t subsets = 1;

  std::size_t global_index() const noexcept { return k * subsets + i; }
};

/// Returns alpha_{k,i} = 1 + (t_{k,i} - 1) / t_{k,i+1} and the advanced state.
std::pair<double, AlphaState> alpha_nesterov(const AlphaState& state);

/// (rho (kM + i - 1) + delta2) / (kM + i - 1 + delta1), i 1-based.
double alpha_km(std::size_t k, std::size_t i, std::size_t m, double rho, double delta1,
                double delta2);

/// Elementwise magnitude of the finite-difference gradient of a 2D image
/// (central differences inside, one-sided on the border).
Image numerical_gradient_magnitude(const Image& f);

struct SpatialFactorState {
  std::vector<double> nu;  // most recent value; 1 before the first update
  bool frozen = false;
};

/// nu for global subiteration index j (1-based), computed from the image f
/// (rows x cols). Updates state and returns the factor to use.
const std::vector<double>& spatial_factor(std::span<const double> f, std::size_t rows,
                                          std::size_t cols, std::size_t j,
                                          SpatialFactorState& state, const PrecondConfig& cfg);

}  // namespace sdpet
