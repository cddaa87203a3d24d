#include "sdpet/optimizer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>

#include "sdpet/binary_io.hpp"
#include "sdpet/error.hpp"
#include "sdpet/kernels.hpp"

namespace sdpet {

double RelaxationSchedule::at(std::size_t k) const {
  return lambda0 / (a * static_cast<double>(k) + 1.0);
}

void RelaxationSchedule::validate() const {
  if (!(lambda0 > 0.0) || !(a > 0.0)) throw Error(ErrorKind::Config, "need lambda0 > 0 and a > 0");
}

void project_interior_inplace(std::span<double> f, double t, double upper_bound) {
  if (!(t > 0.0) || !(t < 0.5 * upper_bound))
    throw Error(ErrorKind::Config, "projection margin t must lie in (0, U/2)");
  // Clamp to [t, U - t]. Values in (0, t) are lifted too, otherwise pixels
  // outside the support decay geometrically towards 0 without ever crossing it.
  const double hi = upper_bound - t;
  for (auto& v : f) {
    if (v < t) v = t;
    else if (v > hi) v = hi;
  }
}

std::vector<double> project_interior(std::span<const double> f, double t, double upper_bound) {
  std::vector<double> out(f.begin(), f.end());
  project_interior_inplace(out, t, upper_bound);
  return out;
}

void AlgorithmConfig::validate() const {
  relaxation.validate();
  if (subsets == 0) throw Error(ErrorKind::Config, "subset count must be >= 1");
  if (!(t > 0.0)) throw Error(ErrorKind::Config, "t must be positive");
  if (upper_bound < 0.0) throw Error(ErrorKind::Config, "U must be positive (or 0 for default)");
}

std::vector<double> os_em(const Objective& objective, std::vector<double> f0, std::size_t iterations) {
  const auto& part = objective.partition();
  std::vector<std::vector<double>> sens(part.count);
  for (std::size_t s = 0; s < part.count; ++s) {
    const auto& op = objective.subset(s);
    sens[s].resize(op.adjoint.rows);
    kernels::spmv(op.adjoint, std::vector<double>(op.forward.rows, 1.0), sens[s]);
  }
  auto& f = f0;
  std::vector<double> bp(f.size());
  for (std::size_t it = 0; it < iterations; ++it) {
    for (auto s : part.access_order) {
      const auto& op = objective.subset(s);
      std::vector<double> ratio(op.forward.rows);
      kernels::spmv(op.forward, f, ratio);
      for (std::size_t r = 0; r < ratio.size(); ++r)
        ratio[r] = op.counts[r] / (ratio[r] + op.background[r]);
      kernels::spmv(op.adjoint, ratio, bp);
      for (std::size_t j = 0; j < f.size(); ++j)
        if (sens[s][j] > 0.0) f[j] *= bp[j] / sens[s][j];
    }
  }
  return f0;
}

double default_upper_bound(const Objective& objective, const std::vector<double>& f0) {
  const auto est = os_em(objective, f0, 2);
  const double peak = *std::max_element(est.begin(), est.end());
  const double start = *std::max_element(f0.begin(), f0.end());
  return 10.0 * std::max(peak, start);
}

SdpBsrem::SdpBsrem(const Objective& objective, AlgorithmConfig cfg, const std::vector<double>& f0)
    : objective_(&objective), cfg_(std::move(cfg)) {
  cfg_.validate();
  if (cfg_.subsets != objective.subset_count())
    throw Error(ErrorKind::Config, "algorithm subset count does not match the objective partition");
  precond_.variant = cfg_.variant;
  precond_.p = compute_p(objective.system(), cfg_.subsets);
  precond_.upper_bound = cfg_.upper_bound > 0.0 ? cfg_.upper_bound : default_upper_bound(objective, f0);
  precond_.rho = cfg_.rho;
  precond_.delta1 = cfg_.delta1;
  precond_.delta2 = cfg_.delta2;
  precond_.nu_min = cfg_.nu_min;
  precond_.nu_max = cfg_.nu_max;
  precond_.j0 = cfg_.j0;
  precond_.j1 = cfg_.j1;
  precond_.validate();
  if (!(cfg_.t < 0.5 * precond_.upper_bound))
    throw Error(ErrorKind::Config, "projection margin t must be below U/2");
}

ReconState SdpBsrem::initial_state(std::vector<double> f0) const {
  if (f0.size() != objective_->pixels()) throw Error(ErrorKind::Shape, "initial image size mismatch");
  for (double v : f0)
    if (!(v >= 0.0 && v <= precond_.upper_bound))
      throw Error(ErrorKind::Domain, "initial image must lie in [0, U]");
  ReconState s;
  s.f = std::move(f0);
  s.alpha.subsets = cfg_.subsets;
  s.nu.nu.assign(s.f.size(), 1.0);
  return s;
}

double SdpBsrem::subiterate(ReconState& state, std::size_t k, std::size_t i) const {
  const std::size_t m = cfg_.subsets;
  if (i == 0 || i > m) throw Error(ErrorKind::Domain, "subiteration index out of range");
  const std::size_t subset = objective_->partition().access_order[i - 1];
  const std::size_t j = k * m + i;

  double alpha = 1.0;
  switch (cfg_.variant) {
    case Variant::P1:
    case Variant::M1: {
      auto [a, next] = alpha_nesterov(state.alpha);
      alpha = a;
      state.alpha = next;
      break;
    }
    case Variant::P2:
    case Variant::M2:
      alpha = alpha_km(k, i, m, cfg_.rho, cfg_.delta1, cfg_.delta2);
      break;
    case Variant::Identity:
      break;
  }

  const bool spatial = cfg_.variant == Variant::P1 || cfg_.variant == Variant::P2;
  const auto& geom = objective_->system().geometry;
  const std::vector<double>* nu = nullptr;
  if (spatial) nu = &spatial_factor(state.f, geom.rows, geom.cols, j, state.nu, precond_);

  const auto grad = objective_->subset_gradient(state.f, subset);
  const auto s = base_precond_diag(state.f, precond_.upper_bound, precond_.p);
  const double lambda = cfg_.relaxation.at(k);

  auto& f = state.f;
  bool finite = true;
  for (std::size_t p = 0; p < f.size(); ++p) {
    const double scale = nu ? alpha * (*nu)[p] : alpha;
    f[p] -= lambda * scale * s[p] * grad[p];
    finite = finite && std::isfinite(f[p]);
  }
  if (!finite)
    throw Error(ErrorKind::NumericalFailure,
                "non-finite image at iteration k=" + std::to_string(k) + ", subiteration i=" +
                    std::to_string(i));
  project_interior_inplace(f, cfg_.t, precond_.upper_bound);
  state.k = k;
  state.i = i;
  return alpha;
}

ReconState SdpBsrem::run(ReconState state, std::size_t n_iters, const RunObserver& observer) const {
  if (n_iters == 0) throw Error(ErrorKind::Config, "need at least one iteration");
  using clock = std::chrono::steady_clock;
  double elapsed = 0.0;
  const std::size_t first = state.i == 0 ? state.k : state.k + 1;
  const std::size_t m = cfg_.subsets;
  for (std::size_t k = first; k < first + n_iters; ++k) {
    for (std::size_t i = 1; i <= m; ++i) {
      const auto t0 = clock::now();
      const double alpha = subiterate(state, k, i);
      elapsed += std::chrono::duration<double>(clock::now() - t0).count();
      if (observer.on_subiteration)
        observer.on_subiteration({k, i, objective_->partition().access_order[i - 1], state.f, alpha,
                                  cfg_.relaxation.at(k), elapsed});
    }
    if (observer.on_iteration) observer.on_iteration(k, state.f, elapsed);
  }
  state.k = first + n_iters;
  state.i = 0;
  return state;
}

namespace {
const std::string kCheckpointMagic = "SDPCK1";
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ck) {
  if (ck.image.size() != ck.rows * ck.cols) throw Error(ErrorKind::Shape, "checkpoint image size");
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error(ErrorKind::Io, "cannot write " + path.string());
  binio::write_magic(os, kCheckpointMagic);
  binio::write_u64(os, ck.iteration);
  binio::write_u64(os, ck.config_hash);
  binio::write_u64(os, ck.rows);
  binio::write_u64(os, ck.cols);
  binio::write_array<double>(os, ck.image);
  if (!os) throw Error(ErrorKind::Io, "failed writing " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error(ErrorKind::ReferenceMissing, "no checkpoint at " + path.string());
  if (!binio::read_magic(is, kCheckpointMagic))
    throw Error(ErrorKind::Io, path.string() + " is not a checkpoint file");
  Checkpoint ck;
  ck.iteration = binio::read_u64(is);
  ck.config_hash = binio::read_u64(is);
  ck.rows = binio::read_u64(is);
  ck.cols = binio::read_u64(is);
  ck.image = binio::read_array<double>(is, ck.rows * ck.cols);
  return ck;
}

}  // namespace sdpet
