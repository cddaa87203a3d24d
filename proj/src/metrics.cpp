#include "sdpet/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "sdpet/error.hpp"
#include "sdpet/kernels.hpp"

namespace sdpet {

double nrmsd(std::span<const double> f_k, std::span<const double> f_inf, const Mask& roi) {
  if (f_k.size() != f_inf.size()) throw Error(ErrorKind::Shape, "image length mismatch");
  const bool whole = roi.data.empty();
  if (!whole && roi.data.size() != f_k.size()) throw Error(ErrorKind::Shape, "ROI size mismatch");
  double num = 0.0, den = 0.0;
  for (std::size_t j = 0; j < f_k.size(); ++j) {
    if (!whole && !roi.data[j]) continue;
    const double d = f_k[j] - f_inf[j];
    num += d * d;
    den += f_inf[j] * f_inf[j];
  }
  if (!(den > 0.0)) throw Error(ErrorKind::UndefinedMetric, "reference has zero norm on the ROI");
  return std::sqrt(num) / std::sqrt(den);
}

double vector_angle(std::span<const double> v1, std::span<const double> v2) {
  if (v1.size() != v2.size()) throw Error(ErrorKind::Shape, "vector length mismatch");
  const double s1 = kernels::dot(v1, v1);
  const double s2 = kernels::dot(v2, v2);
  if (!(s1 > 0.0) || !(s2 > 0.0)) throw Error(ErrorKind::UndefinedMetric, "angle with a zero vector");
  // sqrt(s1 * s2) rather than sqrt(s1) * sqrt(s2): exact for v1 == v2, so theta(v, v) is 0.
  const double prod = s1 * s2;
  const double norm = std::isfinite(prod) && prod > 0.0 ? std::sqrt(prod) : std::sqrt(s1) * std::sqrt(s2);
  return std::acos(std::clamp(kernels::dot(v1, v2) / norm, -1.0, 1.0));
}

double restricted_angle(std::span<const double> v1, std::span<const double> v2,
                        std::span<const std::size_t> indices) {
  std::vector<double> a, b;
  a.reserve(indices.size());
  b.reserve(indices.size());
  for (auto j : indices) {
    a.push_back(v1[j]);
    b.push_back(v2[j]);
  }
  return vector_angle(a, b);
}

void classify_pixels(std::span<const double> f, std::size_t rows, std::size_t cols,
                     double smooth_threshold, double variable_threshold,
                     std::vector<std::size_t>& smooth, std::vector<std::size_t>& variable) {
  smooth.clear();
  variable.clear();
  std::vector<double> grad(f.size());
  kernels::gradient_magnitude(rows, cols, f, grad);
  const double mean = kernels::sum(f) / static_cast<double>(f.size());
  for (std::size_t j = 0; j < f.size(); ++j) {
    if (grad[j] < smooth_threshold * mean) smooth.push_back(j);
    if (grad[j] > variable_threshold * mean) variable.push_back(j);
  }
}

AngleTracker::AngleTracker(const Objective& objective, std::span<const double> f0)
    : objective_(&objective) {
  const auto& order = objective.partition().access_order;
  previous_gradient_ = objective.subset_gradient(f0, order.back());
}

void AngleTracker::observe(const SubiterationView& view) {
  const auto& geom = objective_->system().geometry;
  auto gradient = objective_->subset_gradient(view.f, view.subset);
  std::vector<std::size_t> smooth, variable;
  classify_pixels(view.f, geom.rows, geom.cols, diag_.smooth_threshold, diag_.variable_threshold,
                  smooth, variable);

  AngleSample sample{view.k, view.i, std::nullopt, std::nullopt};
  auto angle_on = [&](const std::vector<std::size_t>& set) -> std::optional<double> {
    if (set.empty()) return std::nullopt;
    try {
      return restricted_angle(previous_gradient_, gradient, set);
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::UndefinedMetric) return std::nullopt;
      throw;
    }
  };
  sample.smooth = angle_on(smooth);
  sample.variable = angle_on(variable);
  diag_.samples.push_back(sample);

  if (view.i == 1) {
    current_ = IterationAngles{};
    current_.k = view.k;
    smooth_sum_ = variable_sum_ = 0.0;
    smooth_count_ = variable_count_ = 0;
  }
  if (sample.smooth) {
    smooth_sum_ += *sample.smooth;
    ++smooth_count_;
  } else {
    ++current_.smooth_skipped;
  }
  if (sample.variable) {
    variable_sum_ += *sample.variable;
    ++variable_count_;
  } else {
    ++current_.variable_skipped;
  }
  if (view.i == objective_->subset_count()) {
    if (smooth_count_) current_.smooth = smooth_sum_ / static_cast<double>(smooth_count_);
    if (variable_count_) current_.variable = variable_sum_ / static_cast<double>(variable_count_);
    diag_.iterations.push_back(current_);
  }
  previous_gradient_ = std::move(gradient);
}

const IterationAngles* AngleTracker::last_iteration() const {
  return diag_.iterations.empty() ? nullptr : &diag_.iterations.back();
}

}  // namespace sdpet
