#include "sdpet/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <yaml-cpp/yaml.h>

#include "json.hpp"
#include "sdpet/binary_io.hpp"
#include "sdpet/error.hpp"
#include "sdpet/hash.hpp"

namespace sdpet {

namespace {

using nlohmann::json;

// Accepts plain numbers and "a/b" fractions such as "1/35".
double parse_number(const YAML::Node& node, const std::string& where) {
  const auto text = node.as<std::string>();
  const auto slash = text.find('/');
  try {
    if (slash == std::string::npos) return std::stod(text);
    return std::stod(text.substr(0, slash)) / std::stod(text.substr(slash + 1));
  } catch (const std::exception&) {
    throw Error(ErrorKind::Validation, where + ": '" + text + "' is not a number");
  }
}

template <typename T>
void read(const YAML::Node& parent, const char* key, T& out, const std::string& where) {
  const auto node = parent[key];
  if (!node) return;
  if constexpr (std::is_same_v<T, double>) {
    out = parse_number(node, where + "." + key);
  } else {
    try {
      out = node.as<T>();
    } catch (const YAML::Exception&) {
      throw Error(ErrorKind::Validation, where + "." + key + ": bad value '" +
                                             node.as<std::string>() + "'");
    }
  }
}

void check_keys(const YAML::Node& node, std::initializer_list<const char*> known,
                const std::string& where, std::vector<std::string>& issues) {
  if (!node || !node.IsMap()) return;
  for (const auto& kv : node) {
    const auto key = kv.first.as<std::string>();
    if (std::none_of(known.begin(), known.end(), [&](const char* k) { return key == k; }))
      issues.push_back(where + ": unknown key '" + key + "'");
  }
}

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string file_stem_for(const std::string& name) {
  std::string s;
  for (char c : name) s += (std::isalnum(static_cast<unsigned char>(c)) || c == '-') ? c : '_';
  while (!s.empty() && s.back() == '_') s.pop_back();
  return s.empty() ? "algorithm" : s;
}

json geometry_json(const ScannerGeometry& g) {
  return {{"n_detectors", g.n_detectors}, {"detector_width_mm", g.detector_width},
          {"fov_mm", g.fov},              {"n_angles", g.n_angles},
          {"n_radial", g.n_radial},       {"rows", g.rows},
          {"cols", g.cols},               {"pixel_size_mm", g.pixel_size},
          {"rays_per_bin", g.rays_per_bin}};
}

json simulation_json(const SimulationSpec& s) {
  return {{"total_counts", s.total_counts},   {"scatter_fraction", s.scatter_fraction},
          {"random_fraction", s.random_fraction}, {"psf_fwhm_mm", s.psf_fwhm_mm},
          {"scatter_fwhm_bins", s.scatter_fwhm_bins}, {"seed", s.seed},
          {"noise", s.noise}};
}

json algorithm_json(const AlgorithmConfig& a) {
  return {{"name", a.name},         {"variant", to_string(a.variant)},
          {"subsets", a.subsets},   {"lambda0", a.relaxation.lambda0},
          {"a", a.relaxation.a},    {"rho", a.rho},
          {"delta1", a.delta1},     {"delta2", a.delta2},
          {"nu1", a.nu_min},        {"nu2", a.nu_max},
          {"J0", a.j0},             {"J1", a.j1},
          {"iterations", a.iterations}};
}

json reference_inputs_json(const ExperimentConfig& c) {
  json j;
  j["geometry"] = geometry_json(c.geometry);
  j["phantom"] = {{"kind", c.phantom.kind}};
  if (c.phantom.kind == "file") {
    std::ifstream is(c.phantom.path, std::ios::binary);
    std::stringstream ss;
    ss << is.rdbuf();
    j["phantom"]["content_hash"] = Fnv1a().text(ss.str()).digest();
  }
  j["simulation"] = simulation_json(c.simulation);
  j["model"] = {{"beta", c.model.beta},
                {"gamma_r", c.model.gamma_r},
                {"epsilon", c.model.epsilon},
                {"neighborhood", c.neighborhood}};
  j["reconstruction"] = {{"t", c.t}, {"upper_bound", c.upper_bound}, {"initial_value", c.initial_value}};
  j["reference"] = {{"iterations", c.reference.iterations},
                    {"subsets", c.reference.subsets},
                    {"lambda0", c.reference.lambda0},
                    {"a", c.reference.a}};
  return j;
}

AlgorithmConfig parse_algorithm(const YAML::Node& node, std::size_t index, const ExperimentConfig& c,
                                std::vector<std::string>& issues) {
  const std::string where = "algorithms[" + std::to_string(index) + "]";
  check_keys(node,
             {"name", "variant", "subsets", "lambda0", "a", "rho", "delta1", "delta2", "nu1", "nu2",
              "J0", "J1", "iterations"},
             where, issues);
  AlgorithmConfig a;
  a.t = c.t;
  a.upper_bound = c.upper_bound;
  std::string variant = "BSREM";
  read(node, "variant", variant, where);
  try {
    a.variant = variant_from_string(variant);
  } catch (const Error&) {
    issues.push_back(where + ".variant: '" + variant +
                     "' is not one of BSREM, SDP-P1, SDP-P2, SDP-M1, SDP-M2");
  }
  read(node, "subsets", a.subsets, where);
  a.name = to_string(a.variant) + "(" + std::to_string(a.subsets) + ")";
  read(node, "name", a.name, where);
  read(node, "lambda0", a.relaxation.lambda0, where);
  read(node, "a", a.relaxation.a, where);
  read(node, "rho", a.rho, where);
  read(node, "delta1", a.delta1, where);
  a.delta2 = a.delta1;
  read(node, "delta2", a.delta2, where);
  read(node, "nu1", a.nu_min, where);
  read(node, "nu2", a.nu_max, where);
  read(node, "J0", a.j0, where);
  read(node, "J1", a.j1, where);
  a.iterations = 0;
  read(node, "iterations", a.iterations, where);
  return a;
}

}  // namespace

ExperimentConfig parse_config(const std::string& yaml_text, const std::filesystem::path& base_dir) {
  YAML::Node root;
  try {
    root = YAML::Load(yaml_text);
  } catch (const YAML::Exception& e) {
    throw Error(ErrorKind::Validation, std::string("config is not valid YAML: ") + e.what());
  }
  if (!root.IsMap()) throw Error(ErrorKind::Validation, "config must be a mapping");

  ExperimentConfig c;
  c.base_dir = base_dir;
  auto& issues = c.parse_issues;
  check_keys(root,
             {"name", "geometry", "phantom", "simulation", "model", "reconstruction", "algorithms",
              "reference", "outputs"},
             "config", issues);
  read(root, "name", c.name, "config");

  if (const auto g = root["geometry"]) {
    check_keys(g,
               {"preset", "n_detectors", "detector_width_mm", "fov_mm", "n_angles", "n_radial",
                "rows", "cols", "pixel_size_mm", "rays_per_bin"},
               "geometry", issues);
    std::string preset = "desk";
    read(g, "preset", preset, "geometry");
    if (preset == "full") c.geometry = ScannerGeometry{};
    else if (preset != "desk") issues.push_back("geometry.preset: must be 'desk' or 'full'");
    auto& geo = c.geometry;
    read(g, "n_detectors", geo.n_detectors, "geometry");
    read(g, "detector_width_mm", geo.detector_width, "geometry");
    read(g, "fov_mm", geo.fov, "geometry");
    read(g, "n_angles", geo.n_angles, "geometry");
    read(g, "n_radial", geo.n_radial, "geometry");
    read(g, "rows", geo.rows, "geometry");
    read(g, "cols", geo.cols, "geometry");
    read(g, "pixel_size_mm", geo.pixel_size, "geometry");
    read(g, "rays_per_bin", geo.rays_per_bin, "geometry");
  }
  if (const auto p = root["phantom"]) {
    check_keys(p, {"kind", "path"}, "phantom", issues);
    read(p, "kind", c.phantom.kind, "phantom");
    std::string path;
    read(p, "path", path, "phantom");
    if (!path.empty()) c.phantom.path = std::filesystem::path(path).is_absolute() ? std::filesystem::path(path) : base_dir / path;
  }
  if (const auto s = root["simulation"]) {
    check_keys(s,
               {"total_counts", "scatter_fraction", "random_fraction", "psf_fwhm_mm",
                "scatter_fwhm_bins", "seed", "noise"},
               "simulation", issues);
    auto& sim = c.simulation;
    read(s, "total_counts", sim.total_counts, "simulation");
    read(s, "scatter_fraction", sim.scatter_fraction, "simulation");
    read(s, "random_fraction", sim.random_fraction, "simulation");
    read(s, "psf_fwhm_mm", sim.psf_fwhm_mm, "simulation");
    read(s, "scatter_fwhm_bins", sim.scatter_fwhm_bins, "simulation");
    read(s, "seed", sim.seed, "simulation");
    read(s, "noise", sim.noise, "simulation");
  }
  if (const auto m = root["model"]) {
    check_keys(m, {"beta", "gamma_r", "epsilon", "neighborhood"}, "model", issues);
    read(m, "beta", c.model.beta, "model");
    read(m, "gamma_r", c.model.gamma_r, "model");
    read(m, "epsilon", c.model.epsilon, "model");
    read(m, "neighborhood", c.neighborhood, "model");
  }
  if (const auto r = root["reconstruction"]) {
    check_keys(r, {"t", "upper_bound", "initial_value"}, "reconstruction", issues);
    read(r, "t", c.t, "reconstruction");
    read(r, "upper_bound", c.upper_bound, "reconstruction");
    read(r, "initial_value", c.initial_value, "reconstruction");
  }
  if (const auto algs = root["algorithms"]) {
    if (!algs.IsSequence()) issues.push_back("algorithms: must be a list");
    else
      for (std::size_t n = 0; n < algs.size(); ++n)
        c.algorithms.push_back(parse_algorithm(algs[n], n, c, issues));
  }
  if (const auto r = root["reference"]) {
    check_keys(r, {"path", "iterations", "subsets", "lambda0", "a"}, "reference", issues);
    std::string path;
    read(r, "path", path, "reference");
    if (!path.empty()) c.reference.path = path;
    read(r, "iterations", c.reference.iterations, "reference");
    read(r, "subsets", c.reference.subsets, "reference");
    read(r, "lambda0", c.reference.lambda0, "reference");
    read(r, "a", c.reference.a, "reference");
  }
  c.outputs.directory = base_dir / "out";
  if (const auto o = root["outputs"]) {
    check_keys(o, {"directory", "nrmsd", "angles", "subiteration_rows", "matrix_cache", "export_data"},
               "outputs", issues);
    std::string dir;
    read(o, "directory", dir, "outputs");
    if (!dir.empty()) c.outputs.directory = std::filesystem::path(dir).is_absolute() ? std::filesystem::path(dir) : base_dir / dir;
    read(o, "nrmsd", c.outputs.nrmsd, "outputs");
    read(o, "angles", c.outputs.angles, "outputs");
    read(o, "subiteration_rows", c.outputs.subiteration_rows, "outputs");
    read(o, "matrix_cache", c.outputs.matrix_cache, "outputs");
    read(o, "export_data", c.outputs.export_data, "outputs");
  }
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw Error(ErrorKind::Validation, "cannot open config " + path.string());
  std::stringstream ss;
  ss << is.rdbuf();
  return parse_config(ss.str(), path.parent_path());
}

std::vector<std::string> ExperimentConfig::violations() const {
  std::vector<std::string> v = parse_issues;
  try {
    geometry.validate();
  } catch (const Error& e) {
    v.push_back(std::string("geometry: ") + e.what());
  }
  try {
    simulation.validate();
  } catch (const Error& e) {
    v.push_back(std::string("simulation: ") + e.what());
  }
  if (phantom.kind == "file") {
    if (phantom.path.empty() || !std::filesystem::exists(phantom.path))
      v.push_back("phantom.path: file '" + phantom.path.string() + "' not found");
  } else if (phantom.kind != "uniform") {
    v.push_back("phantom.kind: must be 'uniform' or 'file'");
  }
  if (!(model.beta >= 0.0)) v.push_back("model.beta: must be >= 0");
  if (!(model.gamma_r >= 0.0)) v.push_back("model.gamma_r: must be >= 0");
  if (!(model.epsilon > 0.0)) v.push_back("model.epsilon: must be > 0");
  if (neighborhood != 4 && neighborhood != 8) v.push_back("model.neighborhood: must be 4 or 8");
  if (!(t > 0.0)) v.push_back("reconstruction.t: must be > 0");
  if (!(upper_bound >= 0.0)) v.push_back("reconstruction.upper_bound: must be >= 0 (0 = automatic)");
  if (!(initial_value > 0.0)) v.push_back("reconstruction.initial_value: must be > 0");
  if (upper_bound > 0.0) {
    if (!(t < 0.5 * upper_bound)) v.push_back("reconstruction.t: must be below upper_bound / 2");
    if (initial_value > upper_bound) v.push_back("reconstruction.initial_value: exceeds upper_bound");
  }
  auto divides = [&](std::size_t m) { return m >= 1 && geometry.n_angles > 0 && geometry.n_angles % m == 0; };
  if (algorithms.empty()) v.push_back("algorithms: list is empty");
  for (std::size_t n = 0; n < algorithms.size(); ++n) {
    const auto& a = algorithms[n];
    const std::string w = "algorithms[" + std::to_string(n) + "] (" + a.name + ")";
    if (a.iterations < 1) v.push_back(w + ".iterations: must be >= 1");
    if (!divides(a.subsets)) v.push_back(w + ".subsets: must divide n_angles");
    if (!(a.relaxation.lambda0 > 0.0)) v.push_back(w + ".lambda0: must be > 0");
    if (!(a.relaxation.a > 0.0)) v.push_back(w + ".a: must be > 0");
    if (a.variant == Variant::P2 || a.variant == Variant::M2) {
      if (!(a.rho > 0.0)) v.push_back(w + ".rho: must be > 0");
      if (!(a.delta1 > 0.0) || !(a.delta2 > 0.0)) v.push_back(w + ".delta1/delta2: must be > 0");
    }
    if (a.variant == Variant::P1 || a.variant == Variant::P2) {
      if (!(a.nu_min > 0.0) || !(a.nu_min < a.nu_max)) v.push_back(w + ".nu1/nu2: need 0 < nu1 < nu2");
    }
    if (a.j0 > a.j1) v.push_back(w + ".J0/J1: need J0 <= J1");
  }
  if (reference.iterations < 1) v.push_back("reference.iterations: must be >= 1");
  if (!divides(reference.subsets)) v.push_back("reference.subsets: must divide n_angles");
  if (!(reference.lambda0 > 0.0) || !(reference.a > 0.0))
    v.push_back("reference.lambda0/a: must be > 0");
  return v;
}

void ExperimentConfig::validate() const {
  const auto v = violations();
  if (v.empty()) return;
  std::string msg = std::to_string(v.size()) + " problem(s):";
  for (const auto& s : v) msg += "\n  - " + s;
  throw Error(ErrorKind::Validation, msg);
}

std::uint64_t ExperimentConfig::reference_hash() const {
  return Fnv1a().text(reference_inputs_json(*this).dump()).digest();
}

std::uint64_t ExperimentConfig::hash() const {
  json j = reference_inputs_json(*this);
  j["name"] = name;
  for (const auto& a : algorithms) j["algorithms"].push_back(algorithm_json(a));
  j["outputs"] = {{"nrmsd", outputs.nrmsd},
                  {"angles", outputs.angles},
                  {"subiteration_rows", outputs.subiteration_rows}};
  return Fnv1a().text(j.dump()).digest();
}

std::filesystem::path ExperimentConfig::reference_path() const {
  return reference.path.is_absolute() ? reference.path : outputs.directory / reference.path;
}

void ExperimentConfig::apply_desk_scale() {
  const auto desk = ScannerGeometry::desk_scale();
  const double ratio = static_cast<double>(desk.pixels()) / static_cast<double>(geometry.pixels());
  if (geometry.rows == desk.rows && geometry.cols == desk.cols && geometry.n_angles == desk.n_angles &&
      geometry.n_radial == desk.n_radial)
    return;
  simulation.total_counts *= ratio;
  geometry = desk;
}

Phantom make_phantom(const ExperimentConfig& cfg) {
  if (cfg.phantom.kind == "uniform") return make_uniform_phantom(cfg.geometry);
  Phantom ph = read_phantom_file(cfg.phantom.path);
  if (ph.activity.rows != cfg.geometry.rows || ph.activity.cols != cfg.geometry.cols)
    throw Error(ErrorKind::InvalidPhantom, "phantom file grid does not match the geometry");
  ph.activity.pixel_size = cfg.geometry.pixel_size;
  return ph;
}

Objective Problem::objective(const ExperimentConfig& cfg, std::size_t subsets) const {
  auto nb = cfg.neighborhood == 4 ? GridNeighborhood::four_point(geometry.rows, geometry.cols)
                                  : GridNeighborhood::eight_point(geometry.rows, geometry.cols);
  return Objective(matrix, data.counts, data.background, cfg.model, std::move(nb),
                   partition_subsets(geometry, subsets));
}

Problem prepare_problem(const ExperimentConfig& cfg) {
  cfg.validate();
  Problem pb;
  pb.geometry = cfg.geometry;
  pb.phantom = make_phantom(cfg);
  const std::optional<Image> mu = attenuation_map(pb.phantom);
  if (cfg.outputs.matrix_cache) {
    pb.matrix = std::make_shared<const SystemMatrix>(
        cached_system_matrix(cfg.outputs.directory / "system_matrix.sdpsm", pb.geometry, mu));
  } else {
    pb.matrix = std::make_shared<const SystemMatrix>(build_system_matrix(pb.geometry, mu));
  }
  pb.data = simulate_data(pb.phantom, *pb.matrix, cfg.simulation);
  return pb;
}

double resolve_upper_bound(const ExperimentConfig& cfg, const Problem& problem) {
  if (cfg.upper_bound > 0.0) return cfg.upper_bound;
  const auto obj = problem.objective(cfg, cfg.reference.subsets);
  return default_upper_bound(obj, std::vector<double>(problem.geometry.pixels(), cfg.initial_value));
}

AlgorithmResult run_algorithm(const ExperimentConfig& cfg, const Problem& problem,
                              const AlgorithmConfig& algorithm,
                              const std::vector<double>* reference) {
  const auto objective = problem.objective(cfg, algorithm.subsets);
  const std::vector<double> f0(problem.geometry.pixels(), cfg.initial_value);
  AlgorithmConfig alg = algorithm;
  if (!(alg.upper_bound > 0.0)) alg.upper_bound = resolve_upper_bound(cfg, problem);
  SdpBsrem solver(objective, alg, f0);

  AlgorithmResult res;
  res.name = alg.name;
  res.subsets = alg.subsets;
  res.upper_bound = solver.precond().upper_bound;
  res.min_pixel = *std::min_element(f0.begin(), f0.end());
  res.max_pixel = *std::max_element(f0.begin(), f0.end());

  std::optional<AngleTracker> tracker;
  if (cfg.outputs.angles) tracker.emplace(objective, f0);

  auto make_row = [&](std::size_t k, std::size_t i, const std::vector<double>& f, double elapsed) {
    TraceRow row;
    row.k = k;
    row.i = i;
    row.wall_time_s = elapsed;
    row.objective = objective.value(f);
    if (reference) {
      row.nrmsd_global = nrmsd(f, *reference);
      for (const auto& roi : problem.phantom.rois) row.nrmsd_roi.push_back(nrmsd(f, *reference, roi.mask));
    }
    return row;
  };
  res.trace.push_back(make_row(0, 0, f0, 0.0));

  const std::size_t m = alg.subsets;
  RunObserver obs;
  obs.on_subiteration = [&](const SubiterationView& v) {
    const auto [lo, hi] = std::minmax_element(v.f.begin(), v.f.end());
    res.min_pixel = std::min(res.min_pixel, *lo);
    res.max_pixel = std::max(res.max_pixel, *hi);
    if (tracker) tracker->observe(v);
    if (cfg.outputs.subiteration_rows || v.i == m) {
      auto row = make_row(v.k, v.i, v.f, v.elapsed_s);
      if (v.i == m && tracker && tracker->last_iteration()) {
        row.theta = tracker->last_iteration()->smooth;
        row.theta_tilde = tracker->last_iteration()->variable;
      }
      res.trace.push_back(std::move(row));
    }
  };
  auto state = solver.run(solver.initial_state(f0), alg.iterations, obs);
  res.final_image = std::move(state.f);
  if (tracker) res.angles = tracker->diagnostics();
  return res;
}

std::string trace_csv(const std::string& algorithm, const std::vector<std::string>& roi_labels,
                      const std::vector<TraceRow>& rows) {
  std::string out = "algorithm,k,i,objective,nrmsd_global";
  for (const auto& l : roi_labels) out += ",nrmsd_roi_" + l;
  out += ",theta_k,theta_tilde_k\n";
  auto opt = [](const std::optional<double>& v) { return v ? fmt_double(*v) : std::string(); };
  for (const auto& r : rows) {
    out += algorithm + "," + std::to_string(r.k) + "," + std::to_string(r.i) + "," +
           fmt_double(r.objective) + "," + opt(r.nrmsd_global);
    for (std::size_t n = 0; n < roi_labels.size(); ++n)
      out += "," + (n < r.nrmsd_roi.size() ? fmt_double(r.nrmsd_roi[n]) : std::string());
    out += "," + opt(r.theta) + "," + opt(r.theta_tilde) + "\n";
  }
  return out;
}

namespace {

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error(ErrorKind::Io, "cannot write " + path.string());
  os << text;
}

void write_image(const std::filesystem::path& path, const std::vector<double>& f) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error(ErrorKind::Io, "cannot write " + path.string());
  binio::write_array<double>(os, f);
}

std::string timing_csv(const std::string& algorithm, const std::vector<TraceRow>& rows) {
  std::string out = "algorithm,k,i,wall_time_s\n";
  for (const auto& r : rows)
    out += algorithm + "," + std::to_string(r.k) + "," + std::to_string(r.i) + "," +
           fmt_double(r.wall_time_s) + "\n";
  return out;
}

std::string angles_csv(const std::string& algorithm, const AngleDiagnostics& d) {
  std::string out = "algorithm,k,i,theta,theta_tilde\n";
  auto opt = [](const std::optional<double>& v) { return v ? fmt_double(*v) : std::string(); };
  for (const auto& s : d.samples)
    out += algorithm + "," + std::to_string(s.k) + "," + std::to_string(s.i) + "," + opt(s.smooth) +
           "," + opt(s.variable) + "\n";
  return out;
}

}  // namespace

Checkpoint load_reference(const ExperimentConfig& cfg) {
  const auto path = cfg.reference_path();
  if (!std::filesystem::exists(path))
    throw Error(ErrorKind::ReferenceMissing,
                "no reference image at " + path.string() +
                    "; run `recon reference <config>` first (or set outputs.nrmsd: false)");
  auto ck = load_checkpoint(path);
  if (ck.config_hash != cfg.reference_hash())
    throw Error(ErrorKind::ReferenceMissing,
                "reference " + path.string() +
                    " was produced by a different configuration; rerun `recon reference <config>`");
  if (ck.rows != cfg.geometry.rows || ck.cols != cfg.geometry.cols)
    throw Error(ErrorKind::ReferenceMissing, "reference grid does not match the geometry");
  return ck;
}

Checkpoint emit_reference(const ExperimentConfig& cfg, const Problem& problem) {
  AlgorithmConfig ref;
  ref.name = "reference";
  ref.variant = Variant::Identity;
  ref.subsets = cfg.reference.subsets;
  ref.relaxation = {cfg.reference.lambda0, cfg.reference.a};
  ref.t = cfg.t;
  ref.upper_bound = resolve_upper_bound(cfg, problem);
  ref.iterations = cfg.reference.iterations;
  const auto objective = problem.objective(cfg, ref.subsets);
  const std::vector<double> f0(problem.geometry.pixels(), cfg.initial_value);
  SdpBsrem solver(objective, ref, f0);
  auto state = solver.run(solver.initial_state(f0), ref.iterations);

  Checkpoint ck;
  ck.iteration = ref.iterations;
  ck.config_hash = cfg.reference_hash();
  ck.rows = problem.geometry.rows;
  ck.cols = problem.geometry.cols;
  ck.image = std::move(state.f);
  std::filesystem::create_directories(cfg.outputs.directory);
  save_checkpoint(cfg.reference_path(), ck);
  return ck;
}

Checkpoint emit_reference(const ExperimentConfig& cfg) {
  cfg.validate();
  std::filesystem::create_directories(cfg.outputs.directory);
  return emit_reference(cfg, prepare_problem(cfg));
}

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  const auto& dir = cfg.outputs.directory;
  std::filesystem::create_directories(dir);

  std::optional<Checkpoint> reference;
  if (cfg.outputs.nrmsd) reference = load_reference(cfg);

  const Problem problem = prepare_problem(cfg);
  ExperimentResult result;
  for (const auto& roi : problem.phantom.rois) result.roi_labels.push_back(roi.label);

  json manifest;
  manifest["name"] = cfg.name;
  manifest["software_version"] = kSoftwareVersion;
  char hash_hex[17];
  std::snprintf(hash_hex, sizeof hash_hex, "%016llx", static_cast<unsigned long long>(cfg.hash()));
  manifest["config_hash"] = hash_hex;
  manifest["seed"] = cfg.simulation.seed;
  manifest["geometry"] = geometry_json(cfg.geometry);
  manifest["simulation"] = simulation_json(cfg.simulation);
  manifest["model"] = {{"beta", cfg.model.beta}, {"gamma_r", cfg.model.gamma_r},
                       {"epsilon", cfg.model.epsilon}, {"neighborhood", cfg.neighborhood}};
  manifest["roi_labels"] = result.roi_labels;
  manifest["image_dtype"] = "float64-le";
  manifest["trace_key"] = {"k", "i"};
  json inventory = json::array();

  if (cfg.outputs.export_data) {
    export_emission_data(dir / "emission.json", problem.data, problem.geometry);
    inventory.push_back("emission.json");
    inventory.push_back("emission_counts.bin");
    inventory.push_back("emission_background.bin");
  }
  if (reference) {
    manifest["reference"] = {{"path", cfg.reference_path().filename().string()},
                             {"iterations", reference->iteration}};
  }

  for (const auto& alg : cfg.algorithms) {
    auto res = run_algorithm(cfg, problem, alg, reference ? &reference->image : nullptr);
    const auto stem = file_stem_for(alg.name);
    const auto trace_file = "trace_" + stem + ".csv";
    const auto timing_file = "timing_" + stem + ".csv";
    const auto image_file = "image_" + stem + ".bin";
    write_text(dir / trace_file, trace_csv(alg.name, result.roi_labels, res.trace));
    write_text(dir / timing_file, timing_csv(alg.name, res.trace));
    write_image(dir / image_file, res.final_image);
    json entry = algorithm_json(alg);
    entry["upper_bound"] = res.upper_bound;
    entry["final_objective"] = res.trace.back().objective;
    entry["files"] = {{"trace", trace_file}, {"timing", timing_file}, {"image", image_file}};
    inventory.push_back(trace_file);
    inventory.push_back(timing_file);
    inventory.push_back(image_file);
    if (res.angles) {
      const auto angles_file = "angles_" + stem + ".csv";
      write_text(dir / angles_file, angles_csv(alg.name, *res.angles));
      entry["files"]["angles"] = angles_file;
      inventory.push_back(angles_file);
    }
    manifest["algorithms"].push_back(entry);
    result.algorithms.push_back(std::move(res));
  }
  manifest["files"] = inventory;
  result.manifest = dir / "manifest.json";
  write_text(result.manifest, manifest.dump(2) + "\n");
  return result;
}

}  // namespace sdpet
