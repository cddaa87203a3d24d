#include "sdpet/objective.hpp"

#include <cmath>

#include "sdpet/error.hpp"

namespace sdpet {

namespace {

// Data term sum(y) - <g, ln(y + gamma)> with y = A f, blocked for determinism.
double data_term(std::span<const double> y, std::span<const double> g, std::span<const double> bg) {
  std::vector<double> terms(y.size());
  for (std::size_t i = 0; i < y.size(); ++i)
    terms[i] = y[i] - (g[i] != 0.0 ? g[i] * std::log(y[i] + bg[i]) : 0.0);
  return kernels::sum(terms);
}

// A^T (1 - g / (A f + gamma)) for one operator pair.
std::vector<double> data_gradient(const CsrMatrix& fwd, const CsrMatrix& adj,
                                  std::span<const double> g, std::span<const double> bg,
                                  std::span<const double> f) {
  std::vector<double> y(fwd.rows);
  kernels::spmv(fwd, f, y);
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = 1.0 - g[i] / (y[i] + bg[i]);
  std::vector<double> out(adj.rows);
  kernels::spmv(adj, y, out);
  return out;
}

}  // namespace

Objective::Objective(std::shared_ptr<const SystemMatrix> a, std::vector<double> counts,
                     std::vector<double> background, ModelParams params,
                     GridNeighborhood neighborhood, SubsetPartition partition)
    : a_(std::move(a)),
      counts_(std::move(counts)),
      background_(std::move(background)),
      params_(params),
      nb_(std::move(neighborhood)),
      partition_(std::move(partition)) {
  if (!a_) throw Error(ErrorKind::Config, "objective needs a system matrix");
  if (counts_.size() != a_->rows() || background_.size() != a_->rows())
    throw Error(ErrorKind::Shape, "data length does not match the system matrix");
  if (nb_.rows * nb_.cols != a_->cols())
    throw Error(ErrorKind::Shape, "neighbourhood grid does not match the image size");
  if (!nb_.is_symmetric()) throw Error(ErrorKind::Config, "neighbourhood must be symmetric");
  if (!(params_.epsilon > 0.0) || !(params_.beta >= 0.0) || !(params_.gamma_r >= 0.0))
    throw Error(ErrorKind::Config, "need epsilon > 0, beta >= 0, gamma_R >= 0");
  for (std::size_t i = 0; i < counts_.size(); ++i) {
    if (!(background_[i] > 0.0)) throw Error(ErrorKind::Domain, "background must be positive");
    if (!(counts_[i] >= 0.0)) throw Error(ErrorKind::Domain, "counts must be nonnegative");
  }
  std::vector<unsigned char> seen(a_->rows(), 0);
  for (const auto& set : partition_.index_sets) {
    if (set.empty()) throw Error(ErrorKind::InvalidSubsets, "empty subset");
    SubsetOperator op;
    op.rows = set;
    for (auto r : set) {
      if (r >= a_->rows() || seen[r]) throw Error(ErrorKind::InvalidSubsets, "subsets must be disjoint");
      seen[r] = 1;
      op.counts.push_back(counts_[r]);
      op.background.push_back(background_[r]);
    }
    op.forward = a_->forward.select_rows(set);
    op.adjoint = op.forward.transpose();
    subsets_.push_back(std::move(op));
  }
  for (auto s : seen)
    if (!s) throw Error(ErrorKind::InvalidSubsets, "subsets do not cover every row");
}

Objective::Objective(std::shared_ptr<const SystemMatrix> a, std::vector<double> counts,
                     std::vector<double> background, ModelParams params, SubsetPartition partition)
    : Objective(a, std::move(counts), std::move(background), params,
                GridNeighborhood::eight_point(a->geometry.rows, a->geometry.cols),
                std::move(partition)) {}

void Objective::check_image(std::span<const double> f) const {
  if (f.size() != pixels())
    throw Error(ErrorKind::Shape, "image length " + std::to_string(f.size()) + " != " +
                                      std::to_string(pixels()));
  for (double v : f)
    if (!(v >= 0.0)) throw Error(ErrorKind::Domain, "image has a negative or NaN entry");
}

double Objective::fidelity_value(std::span<const double> f) const {
  check_image(f);
  return data_term(forward_project(*a_, f), counts_, background_);
}

std::vector<double> Objective::fidelity_gradient(std::span<const double> f) const {
  check_image(f);
  return data_gradient(a_->forward, a_->adjoint, counts_, background_, f);
}

double Objective::rdp_value(std::span<const double> f) const {
  check_image(f);
  return kernels::rdp_value(nb_, rdp_params(), f);
}

std::vector<double> Objective::rdp_gradient(std::span<const double> f) const {
  check_image(f);
  std::vector<double> g(f.size());
  kernels::rdp_gradient(nb_, rdp_params(), f, g);
  return g;
}

double Objective::value(std::span<const double> f) const {
  return fidelity_value(f) + params_.beta * rdp_value(f);
}

std::vector<double> Objective::gradient(std::span<const double> f) const {
  auto g = fidelity_gradient(f);
  if (params_.beta != 0.0) {
    const auto r = rdp_gradient(f);
    for (std::size_t j = 0; j < g.size(); ++j) g[j] += params_.beta * r[j];
  }
  return g;
}

double Objective::subset_value(std::span<const double> f, std::size_t i) const {
  check_image(f);
  if (i >= subsets_.size()) throw Error(ErrorKind::Domain, "subset index out of range");
  const auto& op = subsets_[i];
  std::vector<double> y(op.forward.rows);
  kernels::spmv(op.forward, f, y);
  const double weight = params_.beta / static_cast<double>(subsets_.size());
  return data_term(y, op.counts, op.background) + weight * kernels::rdp_value(nb_, rdp_params(), f);
}

std::vector<double> Objective::subset_gradient(std::span<const double> f, std::size_t i) const {
  check_image(f);
  if (i >= subsets_.size()) throw Error(ErrorKind::Domain, "subset index out of range");
  const auto& op = subsets_[i];
  auto g = data_gradient(op.forward, op.adjoint, op.counts, op.background, f);
  if (params_.beta != 0.0) {
    std::vector<double> r(f.size());
    kernels::rdp_gradient(nb_, rdp_params(), f, r);
    const double weight = params_.beta / static_cast<double>(subsets_.size());
    for (std::size_t j = 0; j < g.size(); ++j) g[j] += weight * r[j];
  }
  return g;
}

double Objective::fidelity_hessian_form(std::span<const double> f, std::span<const double> x) const {
  check_image(f);
  if (x.size() != f.size()) throw Error(ErrorKind::Shape, "direction length mismatch");
  const auto y = forward_project(*a_, f);
  const auto ax = forward_project(*a_, x);
  std::vector<double> terms(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double d = y[i] + background_[i];
    terms[i] = counts_[i] * ax[i] * ax[i] / (d * d);
  }
  return kernels::sum(terms);
}

double Objective::rdp_hessian_form(std::span<const double> f, std::span<const double> x) const {
  check_image(f);
  if (x.size() != f.size()) throw Error(ErrorKind::Shape, "direction length mismatch");
  return kernels::rdp_hessian_form(nb_, rdp_params(), f, x);
}

double Objective::hessian_form(std::span<const double> f, std::span<const double> x) const {
  return fidelity_hessian_form(f, x) + params_.beta * rdp_hessian_form(f, x);
}

}  // namespace sdpet
