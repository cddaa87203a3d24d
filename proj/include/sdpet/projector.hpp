#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "sdpet/image.hpp"
#include "sdpet/sparse.hpp"

namespace sdpet {

/// Parallel-beam sinogram geometry standing in for a single detector ring.
/// Bin centres tile the FOV (spacing fov / n_radial); each bin is the average
/// of rays_per_bin parallel rays spread evenly across detector_width.
struct ScannerGeometry {
  std::size_t n_detectors = 576;
  double detector_width = 4.0;  // mm
  double fov = 300.0;           // mm
  std::size_t n_angles = 288;
  std::size_t n_radial = 288;
  std::size_t rows = 256;
  std::size_t cols = 256;
  double pixel_size = 1.17;  // mm
  std::size_t rays_per_bin = 32;

  /// 64x64 image, 72 angles, 144 radial bins over the same FOV.
  static ScannerGeometry desk_scale();

  void validate() const;
  std::size_t bins() const noexcept { return n_angles * n_radial; }
  std::size_t pixels() const noexcept { return rows * cols; }
  double radial_spacing() const noexcept { return fov / static_cast<double>(n_radial); }
  double angle(std::size_t a) const noexcept;
  std::uint64_t hash() const;
};

/// Sparse nonnegative p x q system matrix; row index = angle * n_radial + radial.
/// Holds both A (CSR) and its transpose for row-parallel back projection.
struct SystemMatrix {
  ScannerGeometry geometry;
  CsrMatrix forward;
  CsrMatrix adjoint;
  std::uint64_t key = 0;  // geometry hash mixed with the attenuation map hash

  std::size_t rows() const noexcept { return forward.rows; }
  std::size_t cols() const noexcept { return forward.cols; }
};

/// Disjoint row blocks I_1..I_M and the order in which they are visited.
struct SubsetPartition {
  std::size_t count = 1;
  std::vector<std::vector<std::size_t>> index_sets;
  std::vector<std::size_t> access_order;
};

/// Exact chord lengths of one infinite line x cos(theta) + y sin(theta) = s
/// with the pixels of a rows x cols grid centred at the origin.
/// Returns (pixel index, length) pairs ordered along the line.
std::vector<std::pair<std::uint32_t, double>> trace_line(std::size_t rows, std::size_t cols,
                                                         double pixel_size, double theta, double s);

SystemMatrix build_system_matrix(const ScannerGeometry& geom,
                                 const std::optional<Image>& attenuation_map = std::nullopt);

std::vector<double> forward_project(const SystemMatrix& a, std::span<const double> f);
std::vector<double> back_project(const SystemMatrix& a, std::span<const double> y);

/// Angle-strided partition: subset i holds every angle a with a mod M == i.
SubsetPartition partition_subsets(const ScannerGeometry& geom, std::size_t m);

/// Permutation of 0..m-1 in bit-reversed order of the next power of two.
std::vector<std::size_t> bit_reversal_order(std::size_t m);

std::uint64_t matrix_key(const ScannerGeometry& geom, const std::optional<Image>& attenuation_map);

/// System-matrix cache ("SDPSM1" file). load returns nullopt when the file
/// is missing or was written for a different key.
void save_matrix_cache(const std::filesystem::path& path, const SystemMatrix& a);
std::optional<SystemMatrix> load_matrix_cache(const std::filesystem::path& path,
                                              const ScannerGeometry& geom, std::uint64_t key);

/// Load from cache if valid, otherwise build and (re)write the cache.
SystemMatrix cached_system_matrix(const std::filesystem::path& path, const ScannerGeometry& geom,
                                  const std::optional<Image>& attenuation_map);

}  // namespace sdpet
