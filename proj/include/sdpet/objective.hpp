#pragma once

#include <memory>
#include <span>
#include <vector>

#include "sdpet/kernels.hpp"
#include "sdpet/projector.hpp"

namespace sdpet {

struct ModelParams {
  double beta = 0.1;
  double gamma_r = 2.0;
  double epsilon = 1e-12;
};

/// Rows of one subset with both access directions precomputed.
struct SubsetOperator {
  std::vector<std::size_t> rows;
  CsrMatrix forward;  // A_i
  CsrMatrix adjoint;  // A_i^T
  std::vector<double> counts;
  std::vector<double> background;
};

/// Penalised Poisson objective Phi(f) = F(f) + beta R(f), with F the
/// negative log-likelihood (up to constants) and R the relative difference
/// prior summed over ordered neighbour pairs. Subset objectives split the
/// data term by rows and carry beta/M of the prior, so that the sum of the
/// subset objectives is Phi.
class Objective {
 public:
  Objective(std::shared_ptr<const SystemMatrix> a, std::vector<double> counts,
            std::vector<double> background, ModelParams params, GridNeighborhood neighborhood,
            SubsetPartition partition);

  /// Convenience: 8-point neighbourhood on the system matrix grid.
  Objective(std::shared_ptr<const SystemMatrix> a, std::vector<double> counts,
            std::vector<double> background, ModelParams params, SubsetPartition partition);

  double fidelity_value(std::span<const double> f) const;
  std::vector<double> fidelity_gradient(std::span<const double> f) const;
  double rdp_value(std::span<const double> f) const;
  std::vector<double> rdp_gradient(std::span<const double> f) const;

  double value(std::span<const double> f) const;
  std::vector<double> gradient(std::span<const double> f) const;

  /// Subset index is 0-based, in [0, subset_count()).
  double subset_value(std::span<const double> f, std::size_t i) const;
  std::vector<double> subset_gradient(std::span<const double> f, std::size_t i) const;

  /// x^T A^T diag(g / (Af + gamma)^2) A x.
  double fidelity_hessian_form(std::span<const double> f, std::span<const double> x) const;
  /// x^T Hessian(R) x (without beta).
  double rdp_hessian_form(std::span<const double> f, std::span<const double> x) const;
  /// x^T Hessian(Phi) x.
  double hessian_form(std::span<const double> f, std::span<const double> x) const;

  const SystemMatrix& system() const noexcept { return *a_; }
  std::shared_ptr<const SystemMatrix> system_ptr() const noexcept { return a_; }
  const ModelParams& params() const noexcept { return params_; }
  const GridNeighborhood& neighborhood() const noexcept { return nb_; }
  const SubsetPartition& partition() const noexcept { return partition_; }
  const std::vector<double>& counts() const noexcept { return counts_; }
  const std::vector<double>& background() const noexcept { return background_; }
  std::size_t subset_count() const noexcept { return subsets_.size(); }
  const SubsetOperator& subset(std::size_t i) const { return subsets_.at(i); }
  std::size_t pixels() const noexcept { return a_->cols(); }
  std::size_t bins() const noexcept { return a_->rows(); }

 private:
  void check_image(std::span<const double> f) const;
  RdpParams rdp_params() const { return {params_.gamma_r, params_.epsilon}; }

  std::shared_ptr<const SystemMatrix> a_;
  std::vector<double> counts_;
  std::vector<double> background_;
  ModelParams params_;
  GridNeighborhood nb_;
  SubsetPartition partition_;
  std::vector<SubsetOperator> subsets_;
};

}  // namespace sdpet
