#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "sdpet/metrics.hpp"
#include "sdpet/objective.hpp"
#include "sdpet/optimizer.hpp"
#include "sdpet/projector.hpp"
#include "sdpet/simulator.hpp"

namespace sdpet {

inline constexpr const char* kSoftwareVersion = "0.3.0";

struct PhantomConfig {
  std::string kind = "uniform";  // uniform | file
  std::filesystem::path path;
};

struct ReferenceConfig {
  std::filesystem::path path = "reference.ckpt";  // relative to the output directory
  std::size_t iterations = 400;
  std::size_t subsets = 24;
  double lambda0 = 1.0;
  double a = 1.0 / 35.0;
};

struct OutputConfig {
  std::filesystem::path directory = "out";
  bool nrmsd = true;
  bool angles = false;
  bool subiteration_rows = false;
  bool matrix_cache = true;
  bool export_data = true;
};

struct ExperimentConfig {
  std::string name = "experiment";
  ScannerGeometry geometry = ScannerGeometry::desk_scale();
  PhantomConfig phantom;
  SimulationSpec simulation;
  ModelParams model;
  std::size_t neighborhood = 8;
  double t = 1e-4;
  double upper_bound = 0.0;
  double initial_value = 1.0;
  std::vector<AlgorithmConfig> algorithms;
  ReferenceConfig reference;
  OutputConfig outputs;
  std::filesystem::path base_dir;  // directory of the config file
  std::vector<std::string> parse_issues;

  /// Every violated constraint, human readable; empty when valid.
  std::vector<std::string> violations() const;
  /// Throws ErrorKind::Validation listing every violation.
  void validate() const;

  std::uint64_t hash() const;
  /// Hash of everything the reference image depends on.
  std::uint64_t reference_hash() const;
  std::filesystem::path reference_path() const;

  /// Switch to the 64x64 / 72 angle / 144 bin geometry and scale counts by the pixel ratio.
  void apply_desk_scale();
};

ExperimentConfig parse_config(const std::string& yaml_text,
                              const std::filesystem::path& base_dir = {});
ExperimentConfig load_config(const std::filesystem::path& path);

/// Geometry, phantom, system matrix and simulated data for one config.
struct Problem {
  ScannerGeometry geometry;
  Phantom phantom;
  std::shared_ptr<const SystemMatrix> matrix;
  EmissionData data;

  Objective objective(const ExperimentConfig& cfg, std::size_t subsets) const;
};

Problem prepare_problem(const ExperimentConfig& cfg);

/// cfg.upper_bound, or the OS-EM based default computed with the reference subset count.
double resolve_upper_bound(const ExperimentConfig& cfg, const Problem& problem);
Phantom make_phantom(const ExperimentConfig& cfg);

struct TraceRow {
  std::size_t k = 0;
  std::size_t i = 0;
  double wall_time_s = 0.0;
  double objective = 0.0;
  std::optional<double> nrmsd_global;
  std::vector<double> nrmsd_roi;
  std::optional<double> theta;
  std::optional<double> theta_tilde;
};

struct AlgorithmResult {
  std::string name;
  std::size_t subsets = 0;
  double upper_bound = 0.0;
  std::vector<TraceRow> trace;
  std::vector<double> final_image;
  std::optional<AngleDiagnostics> angles;
  double min_pixel = 0.0;  // over every stored iterate
  double max_pixel = 0.0;
};

struct ExperimentResult {
  std::vector<std::string> roi_labels;
  std::vector<AlgorithmResult> algorithms;
  std::filesystem::path manifest;
};

/// Runs one algorithm on a prepared problem, recording objective, NRMSD and
/// (optionally) angle diagnostics. reference may be null.
AlgorithmResult run_algorithm(const ExperimentConfig& cfg, const Problem& problem,
                              const AlgorithmConfig& algorithm,
                              const std::vector<double>* reference);

/// simulate -> reconstruct -> measure, writing traces, images and a manifest.
ExperimentResult run_experiment(const ExperimentConfig& cfg);

/// Runs the BSREM reference and writes its checkpoint. Returns the image.
Checkpoint emit_reference(const ExperimentConfig& cfg);
Checkpoint emit_reference(const ExperimentConfig& cfg, const Problem& problem);

/// Loads the reference checkpoint, failing with ReferenceMissing if it is
/// absent or was produced by a different configuration.
Checkpoint load_reference(const ExperimentConfig& cfg);

std::string trace_csv(const std::string& algorithm, const std::vector<std::string>& roi_labels,
                      const std::vector<TraceRow>& rows);

}  // namespace sdpet
