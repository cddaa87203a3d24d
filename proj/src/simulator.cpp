#include "sdpet/simulator.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

#include "json.hpp"

#include "sdpet/binary_io.hpp"
#include "sdpet/error.hpp"
#include "sdpet/kernels.hpp"
#include "sdpet/random.hpp"

namespace sdpet {

void SimulationSpec::validate() const {
  if (!(total_counts > 0.0) || !std::isfinite(total_counts))
    throw Error(ErrorKind::InvalidSpec, "total counts must be positive");
  if (!(scatter_fraction >= 0.0 && scatter_fraction < 1.0))
    throw Error(ErrorKind::InvalidSpec, "scatter fraction must lie in [0, 1)");
  if (!(random_fraction >= 0.0 && random_fraction < 1.0))
    throw Error(ErrorKind::InvalidSpec, "random fraction must lie in [0, 1)");
  if (!(psf_fwhm_mm >= 0.0)) throw Error(ErrorKind::InvalidSpec, "PSF FWHM must be >= 0");
  if (!(scatter_fwhm_bins >= 0.0))
    throw Error(ErrorKind::InvalidSpec, "scatter smoothing FWHM must be >= 0");
}

namespace {

struct Disk {
  double row, col, radius;
};

Mask rasterize(std::size_t rows, std::size_t cols, const Disk& d) {
  Mask m(rows, cols);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) {
      const double dr = static_cast<double>(r) - d.row;
      const double dc = static_cast<double>(c) - d.col;
      if (dr * dr + dc * dc <= d.radius * d.radius) m.set(r, c);
    }
  return m;
}

double sigma_from_fwhm(double fwhm) { return fwhm / (2.0 * std::sqrt(2.0 * std::numbers::ln2)); }

std::vector<double> gaussian_kernel(double sigma) {
  const auto half = static_cast<std::ptrdiff_t>(std::ceil(4.0 * sigma));
  std::vector<double> k(static_cast<std::size_t>(2 * half + 1));
  double total = 0.0;
  for (std::ptrdiff_t i = -half; i <= half; ++i) {
    const double v = std::exp(-0.5 * static_cast<double>(i * i) / (sigma * sigma));
    k[static_cast<std::size_t>(i + half)] = v;
    total += v;
  }
  for (auto& v : k) v /= total;
  return k;
}

// Half-sample symmetric reflection, repeated for kernels wider than the signal.
std::size_t reflect(std::ptrdiff_t i, std::size_t n) {
  const auto period = static_cast<std::ptrdiff_t>(2 * n);
  auto m = i % period;
  if (m < 0) m += period;
  return static_cast<std::size_t>(m < static_cast<std::ptrdiff_t>(n) ? m : period - 1 - m);
}

// Convolve `count` lines of length n, element (line, pos) at base + line*line_stride + pos*stride.
void convolve_lines(std::vector<double>& data, std::size_t count, std::size_t line_stride,
                    std::size_t n, std::size_t stride, const std::vector<double>& kernel) {
  const auto half = static_cast<std::ptrdiff_t>(kernel.size() / 2);
  std::vector<double> line(n);
  for (std::size_t l = 0; l < count; ++l) {
    const std::size_t base = l * line_stride;
    for (std::size_t i = 0; i < n; ++i) line[i] = data[base + i * stride];
    for (std::size_t i = 0; i < n; ++i) {
      double acc = 0.0;
      for (std::ptrdiff_t k = -half; k <= half; ++k)
        acc += kernel[static_cast<std::size_t>(k + half)] *
               line[reflect(static_cast<std::ptrdiff_t>(i) - k, n)];
      data[base + i * stride] = acc;
    }
  }
}

}  // namespace

Phantom make_uniform_phantom(const ScannerGeometry& geom) {
  if (geom.rows < 64 || geom.cols < 64)
    throw Error(ErrorKind::InvalidPhantom, "uniform phantom needs at least a 64x64 grid");
  const std::size_t rows = geom.rows, cols = geom.cols;
  const double dim = static_cast<double>(std::min(rows, cols));
  const double scale = dim / 256.0;
  const double cr = 0.5 * static_cast<double>(rows - 1);
  const double cc = 0.5 * static_cast<double>(cols - 1);

  Phantom ph;
  ph.label = "uniform";
  ph.activity = Image(rows, cols, geom.pixel_size);
  ph.support = rasterize(rows, cols, {cr, cc, 0.4 * dim});
  for (std::size_t j = 0; j < ph.activity.size(); ++j) ph.activity.data[j] = ph.support.data[j] ? 1.0 : 0.0;

  struct Insert {
    const char* label;
    double radius_px;
    double value;
  };
  const Insert inserts[] = {{"hot_r4", 4, 10.0},   {"hot_r6", 6, 10.0},
                            {"cold_r8", 8, 0.0},   {"cold_r10", 10, 0.0},
                            {"hot_r12", 12, 10.0}, {"hot_r14", 14, 10.0}};
  const double ring = 56.0 * scale;
  Mask all(rows, cols);
  for (std::size_t n = 0; n < std::size(inserts); ++n) {
    const double phi = 2.0 * std::numbers::pi * static_cast<double>(n) / 6.0;
    const Disk d{cr - ring * std::sin(phi), cc + ring * std::cos(phi), inserts[n].radius_px * scale};
    Mask m = rasterize(rows, cols, d);
    for (std::size_t j = 0; j < m.data.size(); ++j)
      if (m.data[j]) {
        ph.activity.data[j] = inserts[n].value;
        all.data[j] = 1;
      }
    ph.rois.push_back({inserts[n].label, std::move(m)});
  }
  Mask bg = rasterize(rows, cols, {cr, cc, 25.0 * scale});
  for (std::size_t j = 0; j < bg.data.size(); ++j) all.data[j] |= bg.data[j];
  ph.rois.push_back({"background", std::move(bg)});
  ph.rois.push_back({"all", std::move(all)});
  return ph;
}

Image blur_psf(const Image& f, double fwhm_mm, double pixel_size) {
  if (fwhm_mm < 0.0) throw Error(ErrorKind::InvalidSpec, "PSF FWHM must be >= 0");
  if (fwhm_mm == 0.0) return f;
  const auto kernel = gaussian_kernel(sigma_from_fwhm(fwhm_mm) / pixel_size);
  Image out = f;
  convolve_lines(out.data, f.rows, f.cols, f.cols, 1, kernel);  // along rows
  convolve_lines(out.data, f.cols, 1, f.rows, f.cols, kernel);  // along columns
  return out;
}

std::vector<double> smooth_radial(const std::vector<double>& sino, std::size_t n_angles,
                                  std::size_t n_radial, double fwhm_bins) {
  std::vector<double> out = sino;
  if (fwhm_bins <= 0.0) return out;
  convolve_lines(out, n_angles, n_radial, n_radial, 1, gaussian_kernel(sigma_from_fwhm(fwhm_bins)));
  return out;
}

Image attenuation_map(const Phantom& phantom, double mu_per_mm) {
  Image mu(phantom.activity.rows, phantom.activity.cols, phantom.activity.pixel_size);
  for (std::size_t j = 0; j < mu.size(); ++j) mu.data[j] = phantom.support.data[j] ? mu_per_mm : 0.0;
  return mu;
}

EmissionData simulate_data(const Phantom& phantom, const SystemMatrix& a, const SimulationSpec& spec) {
  spec.validate();
  const auto& geom = a.geometry;
  if (phantom.activity.rows != geom.rows || phantom.activity.cols != geom.cols)
    throw Error(ErrorKind::Shape, "phantom does not match the system matrix grid");

  const double tc = spec.total_counts;
  const double randoms_total = spec.random_fraction * tc;
  const double scatter_total = spec.scatter_fraction * (1.0 - spec.random_fraction) * tc;
  const double trues_total = (1.0 - spec.scatter_fraction) * (1.0 - spec.random_fraction) * tc;

  EmissionData d;
  d.spec = spec;
  const Image blurred = blur_psf(phantom.activity, spec.psf_fwhm_mm, geom.pixel_size);
  d.trues_mean = forward_project(a, blurred.data);
  const double trues_raw = kernels::sum(d.trues_mean);
  if (!(trues_raw > 0.0)) throw Error(ErrorKind::InvalidPhantom, "phantom projects to zero counts");
  for (auto& v : d.trues_mean) v *= trues_total / trues_raw;

  const std::size_t p = a.rows();
  d.scatter_mean.assign(p, 0.0);
  if (spec.scatter_fraction > 0.0) {
    const double fwhm = spec.scatter_fwhm_bins > 0.0 ? spec.scatter_fwhm_bins
                                                     : static_cast<double>(geom.n_radial) / 4.0;
    d.scatter_mean = smooth_radial(d.trues_mean, geom.n_angles, geom.n_radial, fwhm);
    const double raw = kernels::sum(d.scatter_mean);
    for (auto& v : d.scatter_mean) v *= scatter_total / raw;
  }
  d.randoms_mean.assign(p, randoms_total / static_cast<double>(p));

  d.background.resize(p);
  std::vector<double> mean(p);
  for (std::size_t i = 0; i < p; ++i) {
    d.background[i] = std::max(d.scatter_mean[i] + d.randoms_mean[i], kBackgroundFloor);
    mean[i] = d.trues_mean[i] + d.scatter_mean[i] + d.randoms_mean[i];
  }

  d.counts.resize(p);
  if (!spec.noise) {
    d.counts = mean;
    return d;
  }
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t ii = 0; ii < static_cast<std::ptrdiff_t>(p); ++ii) {
    const auto i = static_cast<std::size_t>(ii);
    if (mean[i] <= 0.0) {
      d.counts[i] = 0.0;
      continue;
    }
    CounterRng rng(spec.seed, i);
    std::poisson_distribution<long long> draw(mean[i]);
    d.counts[i] = static_cast<double>(draw(rng));
  }
  return d;
}

Phantom read_phantom_file(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw Error(ErrorKind::Io, "cannot open phantom file " + path.string());
  std::size_t rows = 0, cols = 0;
  double ps = 0.0;
  for (int n = 0; n < 3; ++n) {
    std::string key;
    if (!(is >> key)) throw Error(ErrorKind::InvalidPhantom, "truncated phantom header");
    if (key == "rows") is >> rows;
    else if (key == "cols") is >> cols;
    else if (key == "pixel_size_mm") is >> ps;
    else throw Error(ErrorKind::InvalidPhantom, "unknown phantom header key '" + key + "'");
  }
  if (!is || rows == 0 || cols == 0 || !(ps > 0.0))
    throw Error(ErrorKind::InvalidPhantom, "bad phantom header in " + path.string());
  Phantom ph;
  ph.label = path.stem().string();
  ph.activity = Image(rows, cols, ps);
  ph.support = Mask(rows, cols);
  for (std::size_t j = 0; j < rows * cols; ++j) {
    double v;
    if (!(is >> v)) throw Error(ErrorKind::InvalidPhantom, "phantom file has too few values");
    if (!(v >= 0.0) || !std::isfinite(v))
      throw Error(ErrorKind::InvalidPhantom, "phantom values must be finite and nonnegative");
    ph.activity.data[j] = v;
    ph.support.data[j] = v > 0.0;
  }
  return ph;
}

void write_phantom_file(const std::filesystem::path& path, const Image& activity) {
  std::ofstream os(path);
  if (!os) throw Error(ErrorKind::Io, "cannot write " + path.string());
  os << "rows " << activity.rows << "\ncols " << activity.cols << "\npixel_size_mm "
     << activity.pixel_size << "\n";
  os.precision(17);
  for (std::size_t r = 0; r < activity.rows; ++r) {
    for (std::size_t c = 0; c < activity.cols; ++c) os << (c ? " " : "") << activity(r, c);
    os << "\n";
  }
}

namespace {

void write_raw(const std::filesystem::path& path, const std::vector<double>& v) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error(ErrorKind::Io, "cannot write " + path.string());
  binio::write_array<double>(os, v);
}

std::vector<double> read_raw(const std::filesystem::path& path, std::size_t n) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error(ErrorKind::Io, "cannot open " + path.string());
  return binio::read_array<double>(is, n);
}

}  // namespace

void export_emission_data(const std::filesystem::path& manifest, const EmissionData& data,
                          const ScannerGeometry& geom) {
  const auto dir = manifest.parent_path();
  const auto stem = manifest.stem().string();
  const auto counts_file = stem + "_counts.bin";
  const auto background_file = stem + "_background.bin";
  write_raw(dir / counts_file, data.counts);
  write_raw(dir / background_file, data.background);
  nlohmann::json j;
  j["format"] = "sdpet-emission/1";
  j["n_angles"] = geom.n_angles;
  j["n_radial"] = geom.n_radial;
  j["bins"] = data.counts.size();
  j["dtype"] = "float64-le";
  j["counts"] = counts_file;
  j["background"] = background_file;
  j["simulation"] = {{"total_counts", data.spec.total_counts},
                     {"scatter_fraction", data.spec.scatter_fraction},
                     {"random_fraction", data.spec.random_fraction},
                     {"psf_fwhm_mm", data.spec.psf_fwhm_mm},
                     {"scatter_fwhm_bins", data.spec.scatter_fwhm_bins},
                     {"seed", data.spec.seed},
                     {"noise", data.spec.noise}};
  std::ofstream os(manifest);
  if (!os) throw Error(ErrorKind::Io, "cannot write " + manifest.string());
  os << j.dump(2) << "\n";
}

EmissionData import_emission_data(const std::filesystem::path& manifest) {
  std::ifstream is(manifest);
  if (!is) throw Error(ErrorKind::Io, "cannot open " + manifest.string());
  const auto j = nlohmann::json::parse(is);
  const auto dir = manifest.parent_path();
  const std::size_t n = j.at("bins").get<std::size_t>();
  EmissionData d;
  d.counts = read_raw(dir / j.at("counts").get<std::string>(), n);
  d.background = read_raw(dir / j.at("background").get<std::string>(), n);
  const auto& s = j.at("simulation");
  d.spec.total_counts = s.at("total_counts");
  d.spec.scatter_fraction = s.at("scatter_fraction");
  d.spec.random_fraction = s.at("random_fraction");
  d.spec.psf_fwhm_mm = s.at("psf_fwhm_mm");
  d.spec.scatter_fwhm_bins = s.at("scatter_fwhm_bins");
  d.spec.seed = s.at("seed");
  d.spec.noise = s.at("noise");
  return d;
}

}  // namespace sdpet
