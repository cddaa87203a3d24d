#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "sdpet/image.hpp"
#include "sdpet/projector.hpp"

namespace sdpet {

struct Phantom {
  Image activity;
  Mask support;
  std::string label;
  std::vector<Roi> rois;  // regions used for local NRMSD; may be empty
};

struct SimulationSpec {
  double total_counts = 6.8e6;
  double scatter_fraction = 0.25;  // S / (T + S)
  double random_fraction = 0.25;   // R / (T + S + R)
  double psf_fwhm_mm = 6.59;
  double scatter_fwhm_bins = 0.0;  // 0 selects n_radial / 4
  std::uint64_t seed = 1;
  bool noise = true;

  void validate() const;
};

struct EmissionData {
  std::vector<double> counts;      // g; integer valued when noise is on
  std::vector<double> background;  // gamma = scatter + randoms mean, > 0
  std::vector<double> trues_mean;
  std::vector<double> scatter_mean;
  std::vector<double> randoms_mean;
  SimulationSpec spec;
};

inline constexpr double kWaterMuPerMm = 0.0096;  // 0.096 / cm
inline constexpr double kBackgroundFloor = 1e-10;

/// Uniform disk (value 1) with hot disks (10) of radii 4, 6, 12, 14 px and
/// cold disks (0) of radii 8, 10 px at 256x256, scaled with the grid.
/// ROIs: each disk, a central background disk of radius 25 px, and "all".
Phantom make_uniform_phantom(const ScannerGeometry& geom);

/// Separable Gaussian blur with unit-sum kernel and reflective boundary.
Image blur_psf(const Image& f, double fwhm_mm, double pixel_size);

/// 1D Gaussian smoothing along the radial coordinate of every angle.
std::vector<double> smooth_radial(const std::vector<double>& sino, std::size_t n_angles,
                                  std::size_t n_radial, double fwhm_bins);

/// Water attenuation over the phantom support (mu in 1/mm).
Image attenuation_map(const Phantom& phantom, double mu_per_mm = kWaterMuPerMm);

EmissionData simulate_data(const Phantom& phantom, const SystemMatrix& a, const SimulationSpec& spec);

/// Text phantom file: "rows N", "cols N", "pixel_size_mm X" header lines,
/// then rows*cols whitespace separated nonnegative values, row-major.
Phantom read_phantom_file(const std::filesystem::path& path);
void write_phantom_file(const std::filesystem::path& path, const Image& activity);

/// JSON manifest plus raw little-endian float64 arrays <stem>_counts.bin and
/// <stem>_background.bin next to it.
void export_emission_data(const std::filesystem::path& manifest, const EmissionData& data,
                          const ScannerGeometry& geom);
EmissionData import_emission_data(const std::filesystem::path& manifest);

}  // namespace sdpet
