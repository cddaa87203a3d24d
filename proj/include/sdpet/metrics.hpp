#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "sdpet/image.hpp"
#include "sdpet/objective.hpp"
#include "sdpet/optimizer.hpp"

namespace sdpet {

/// ||f_k - f_inf||_Omega / ||f_inf||_Omega. An empty mask means the whole image.
double nrmsd(std::span<const double> f_k, std::span<const double> f_inf, const Mask& roi = {});

/// Angle in [0, pi]; the cosine is clamped to [-1, 1] before acos.
double vector_angle(std::span<const double> v1, std::span<const double> v2);

/// Angle between v1 and v2 restricted to the given indices.
double restricted_angle(std::span<const double> v1, std::span<const double> v2,
                        std::span<const std::size_t> indices);

struct AngleSample {
  std::size_t k = 0;
  std::size_t i = 0;
  std::optional<double> smooth;    // theta_{k,i}; empty when I_s is empty
  std::optional<double> variable;  // theta~_{k,i}; empty when I_v is empty
};

struct IterationAngles {
  std::size_t k = 0;
  std::optional<double> smooth;  // theta_k
  std::optional<double> variable;  // theta~_k
  std::size_t smooth_skipped = 0;
  std::size_t variable_skipped = 0;
};

struct AngleDiagnostics {
  double smooth_threshold = 0.01;
  double variable_threshold = 0.2;
  std::vector<AngleSample> samples;
  std::vector<IterationAngles> iterations;
};

/// Gradient-consistency tracker. Each subiteration it compares the subset
/// gradient of the previous step's subset at the previous iterate with the
/// current subset's gradient at the new iterate, separately over smooth
/// pixels (numerical gradient below 0.01 mean(f)) and variable pixels
/// (above 0.2 mean(f)), both judged on the new iterate.
class AngleTracker {
 public:
  AngleTracker(const Objective& objective, std::span<const double> f0);

  void observe(const SubiterationView& view);
  const AngleDiagnostics& diagnostics() const noexcept { return diag_; }
  /// Latest completed iteration means, if any.
  const IterationAngles* last_iteration() const;

 private:
  const Objective* objective_;
  std::vector<double> previous_gradient_;
  AngleDiagnostics diag_;
  IterationAngles current_;
  std::size_t smooth_count_ = 0, variable_count_ = 0;
  double smooth_sum_ = 0.0, variable_sum_ = 0.0;
};

/// Index sets of smooth and variable pixels of an image.
void classify_pixels(std::span<const double> f, std::size_t rows, std::size_t cols,
                     double smooth_threshold, double variable_threshold,
                     std::vector<std::size_t>& smooth, std::vector<std::size_t>& variable);

}  // namespace sdpet
