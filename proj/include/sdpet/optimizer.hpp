#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "sdpet/objective.hpp"
#include "sdpet/preconditioner.hpp"

namespace sdpet {

/// lambda_k = lambda0 / (a k + 1).
struct RelaxationSchedule {
  double lambda0 = 1.0;
  double a = 1.0 / 35.0;

  double at(std::size_t k) const;
  void validate() const;
};

inline double relaxation(const RelaxationSchedule& s, std::size_t k) { return s.at(k); }

/// Componentwise clamp into the interior band [t, U - t].
std::vector<double> project_interior(std::span<const double> f, double t, double upper_bound);
void project_interior_inplace(std::span<double> f, double t, double upper_bound);

struct AlgorithmConfig {
  std::string name = "BSREM";
  Variant variant = Variant::Identity;
  std::size_t subsets = 24;
  RelaxationSchedule relaxation;
  double rho = 1.0;
  double delta1 = 1.0;
  double delta2 = 1.0;
  double nu_min = 1.0;
  double nu_max = 1.0;
  std::size_t j0 = 3;
  std::size_t j1 = 1000;
  double t = 1e-4;
  double upper_bound = 0.0;  // 0 selects the OS-EM based default
  std::size_t iterations = 0;

  void validate() const;
};

/// Everything the optimizer carries from one subiteration to the next.
struct ReconState {
  std::vector<double> f;
  std::size_t k = 0;  // outer iteration currently in progress
  std::size_t i = 0;  // last completed subiteration within k (0 = none)
  AlphaState alpha;
  SpatialFactorState nu;
};

/// Read-only view handed to observers after each subiteration.
struct SubiterationView {
  std::size_t k;
  std::size_t i;       // 1-based position in the visiting order
  std::size_t subset;  // 0-based subset index used at this step
  const std::vector<double>& f;
  double alpha;
  double lambda;
  double elapsed_s;  // optimizer time only
};

struct RunObserver {
  std::function<void(const SubiterationView&)> on_subiteration;
  /// Called with the completed iteration index k (f = f^{k+1}).
  std::function<void(std::size_t k, const std::vector<double>& f, double elapsed_s)> on_iteration;
};

/// Unregularised OS-EM from f0, used to size the default upper bound.
std::vector<double> os_em(const Objective& objective, std::vector<double> f0, std::size_t iterations);

/// 10 x max pixel of a 2-iteration OS-EM estimate started from f0.
double default_upper_bound(const Objective& objective, const std::vector<double>& f0);

/// Relaxed, preconditioned ordered-subsets solver (BSREM and its
/// subiteration-dependent-preconditioner variants). Subsets are visited in
/// the partition's access order, identically in every iteration.
class SdpBsrem {
 public:
  SdpBsrem(const Objective& objective, AlgorithmConfig cfg, const std::vector<double>& f0);

  ReconState initial_state(std::vector<double> f0) const;

  /// One subiteration i (1-based) of iteration k: returns alpha used.
  double subiterate(ReconState& state, std::size_t k, std::size_t i) const;

  /// Runs iterations state.k .. state.k + n_iters - 1.
  ReconState run(ReconState state, std::size_t n_iters, const RunObserver& observer = {}) const;

  const PrecondConfig& precond() const noexcept { return precond_; }
  const AlgorithmConfig& config() const noexcept { return cfg_; }
  const Objective& objective() const noexcept { return *objective_; }

 private:
  const Objective* objective_;
  AlgorithmConfig cfg_;
  PrecondConfig precond_;
};

/// Reference-image checkpoint: magic "SDPCK1", iteration, config hash, rows,
/// cols (u64 little-endian), then rows*cols float64 values.
struct Checkpoint {
  std::uint64_t iteration = 0;
  std::uint64_t config_hash = 0;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> image;
};

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ck);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace sdpet
