#include "sdpet/projector.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>

#include "sdpet/binary_io.hpp"
#include "sdpet/error.hpp"
#include "sdpet/hash.hpp"
#include "sdpet/kernels.hpp"

namespace sdpet {

ScannerGeometry ScannerGeometry::desk_scale() {
  ScannerGeometry g;
  g.n_angles = 72;
  g.n_radial = 144;
  g.rows = 64;
  g.cols = 64;
  g.pixel_size = g.fov / 64.0;
  return g;
}

void ScannerGeometry::validate() const {
  if (n_detectors == 0 || n_angles == 0 || n_radial == 0 || rows == 0 || cols == 0 ||
      rays_per_bin == 0)
    throw Error(ErrorKind::InvalidGeometry, "all counts must be >= 1");
  if (!(fov > 0.0) || !(pixel_size > 0.0) || !(detector_width > 0.0))
    throw Error(ErrorKind::InvalidGeometry, "fov, pixel size and detector width must be positive");
  const double extent = static_cast<double>(std::min(rows, cols)) * pixel_size;
  if (extent < fov - pixel_size * (1.0 + 1e-9))
    throw Error(ErrorKind::InvalidGeometry, "image grid does not cover the field of view");
}

double ScannerGeometry::angle(std::size_t a) const noexcept {
  return std::numbers::pi * static_cast<double>(a) / static_cast<double>(n_angles);
}

std::uint64_t ScannerGeometry::hash() const {
  Fnv1a h;
  h.text("geometry/v1")
      .value<std::uint64_t>(n_detectors)
      .value(detector_width)
      .value(fov)
      .value<std::uint64_t>(n_angles)
      .value<std::uint64_t>(n_radial)
      .value<std::uint64_t>(rows)
      .value<std::uint64_t>(cols)
      .value(pixel_size)
      .value<std::uint64_t>(rays_per_bin);
  return h.digest();
}

std::vector<std::pair<std::uint32_t, double>> trace_line(std::size_t rows, std::size_t cols,
                                                         double pixel_size, double theta,
                                                         double s) {
  std::vector<std::pair<std::uint32_t, double>> out;
  const double half_w = 0.5 * static_cast<double>(cols) * pixel_size;
  const double half_h = 0.5 * static_cast<double>(rows) * pixel_size;
  const double px = s * std::cos(theta);
  const double py = s * std::sin(theta);
  const double dx = -std::sin(theta);
  const double dy = std::cos(theta);
  constexpr double kParallel = 1e-15;

  double tmin = -std::numeric_limits<double>::infinity();
  double tmax = std::numeric_limits<double>::infinity();
  auto clip = [&](double p, double d, double lo, double hi) {
    if (std::abs(d) < kParallel) return p >= lo && p <= hi;
    const double ta = (lo - p) / d;
    const double tb = (hi - p) / d;
    tmin = std::max(tmin, std::min(ta, tb));
    tmax = std::min(tmax, std::max(ta, tb));
    return true;
  };
  if (!clip(px, dx, -half_w, half_w) || !clip(py, dy, -half_h, half_h) || !(tmax > tmin)) return out;

  std::vector<double> ts{tmin, tmax};
  if (std::abs(dx) >= kParallel)
    for (std::size_t c = 1; c < cols; ++c) {
      const double t = (-half_w + static_cast<double>(c) * pixel_size - px) / dx;
      if (t > tmin && t < tmax) ts.push_back(t);
    }
  if (std::abs(dy) >= kParallel)
    for (std::size_t r = 1; r < rows; ++r) {
      const double t = (-half_h + static_cast<double>(r) * pixel_size - py) / dy;
      if (t > tmin && t < tmax) ts.push_back(t);
    }
  std::sort(ts.begin(), ts.end());

  const double min_len = 1e-12 * pixel_size;
  for (std::size_t e = 0; e + 1 < ts.size(); ++e) {
    const double len = ts[e + 1] - ts[e];
    if (len <= min_len) continue;
    const double mid = 0.5 * (ts[e] + ts[e + 1]);
    const double x = px + mid * dx;
    const double y = py + mid * dy;
    auto col = static_cast<std::ptrdiff_t>(std::floor((x + half_w) / pixel_size));
    auto row = static_cast<std::ptrdiff_t>(std::floor((half_h - y) / pixel_size));
    col = std::clamp<std::ptrdiff_t>(col, 0, static_cast<std::ptrdiff_t>(cols) - 1);
    row = std::clamp<std::ptrdiff_t>(row, 0, static_cast<std::ptrdiff_t>(rows) - 1);
    out.emplace_back(static_cast<std::uint32_t>(static_cast<std::size_t>(row) * cols +
                                                static_cast<std::size_t>(col)),
                     len);
  }
  return out;
}

std::uint64_t matrix_key(const ScannerGeometry& geom, const std::optional<Image>& attenuation_map) {
  Fnv1a h;
  h.value(geom.hash());
  if (attenuation_map) h.text("mu").doubles(attenuation_map->data);
  return h.digest();
}

SystemMatrix build_system_matrix(const ScannerGeometry& geom,
                                 const std::optional<Image>& attenuation_map) {
  geom.validate();
  if (attenuation_map &&
      (attenuation_map->rows != geom.rows || attenuation_map->cols != geom.cols))
    throw Error(ErrorKind::Shape, "attenuation map does not match the image grid");

  const std::size_t p = geom.bins();
  const double spacing = geom.radial_spacing();
  const double centre = 0.5 * static_cast<double>(geom.n_radial - 1);
  const double weight = 1.0 / static_cast<double>(geom.rays_per_bin);
  std::vector<std::vector<std::pair<std::uint32_t, double>>> row_entries(p);

#pragma omp parallel for schedule(dynamic, 16)
  for (std::ptrdiff_t ii = 0; ii < static_cast<std::ptrdiff_t>(p); ++ii) {
    const auto i = static_cast<std::size_t>(ii);
    const std::size_t a = i / geom.n_radial;
    const std::size_t r = i % geom.n_radial;
    const double theta = geom.angle(a);
    const double s0 = (static_cast<double>(r) - centre) * spacing;
    std::vector<std::pair<std::uint32_t, double>> hits;
    for (std::size_t m = 0; m < geom.rays_per_bin; ++m) {
      const double s = s0 + ((static_cast<double>(m) + 0.5) * weight - 0.5) * geom.detector_width;
      for (auto [pix, len] : trace_line(geom.rows, geom.cols, geom.pixel_size, theta, s))
        hits.emplace_back(pix, len * weight);
    }
    std::stable_sort(hits.begin(), hits.end(),
                     [](const auto& x, const auto& y) { return x.first < y.first; });
    auto& row = row_entries[i];
    for (const auto& [pix, v] : hits) {
      if (!row.empty() && row.back().first == pix) row.back().second += v;
      else row.emplace_back(pix, v);
    }
    if (attenuation_map) {
      double line_integral = 0.0;
      for (const auto& [pix, v] : row) line_integral += v * attenuation_map->data[pix];
      const double scale = std::exp(-line_integral);
      for (auto& e : row) e.second *= scale;
    }
  }

  SystemMatrix sm;
  sm.geometry = geom;
  sm.key = matrix_key(geom, attenuation_map);
  auto& a = sm.forward;
  a.rows = p;
  a.cols = geom.pixels();
  a.row_ptr.assign(1, 0);
  a.row_ptr.reserve(p + 1);
  for (const auto& row : row_entries) {
    for (const auto& [pix, v] : row) {
      a.col_idx.push_back(pix);
      a.values.push_back(v);
    }
    a.row_ptr.push_back(a.values.size());
  }
  sm.adjoint = a.transpose();
  return sm;
}

std::vector<double> forward_project(const SystemMatrix& a, std::span<const double> f) {
  if (f.size() != a.cols())
    throw Error(ErrorKind::Shape, "image length " + std::to_string(f.size()) + " != " +
                                      std::to_string(a.cols()));
  std::vector<double> y(a.rows());
  kernels::spmv(a.forward, f, y);
  return y;
}

std::vector<double> back_project(const SystemMatrix& a, std::span<const double> y) {
  if (y.size() != a.rows())
    throw Error(ErrorKind::Shape, "sinogram length " + std::to_string(y.size()) + " != " +
                                      std::to_string(a.rows()));
  std::vector<double> f(a.cols());
  kernels::spmv(a.adjoint, y, f);
  return f;
}

std::vector<std::size_t> bit_reversal_order(std::size_t m) {
  std::size_t bits = 0;
  while ((std::size_t{1} << bits) < m) ++bits;
  std::vector<std::size_t> order;
  order.reserve(m);
  for (std::size_t v = 0; v < (std::size_t{1} << bits); ++v) {
    std::size_t rev = 0;
    for (std::size_t b = 0; b < bits; ++b)
      if (v & (std::size_t{1} << b)) rev |= std::size_t{1} << (bits - 1 - b);
    if (rev < m) order.push_back(rev);
  }
  return order;
}

SubsetPartition partition_subsets(const ScannerGeometry& geom, std::size_t m) {
  if (m == 0 || m > geom.n_angles || geom.n_angles % m != 0)
    throw Error(ErrorKind::InvalidSubsets, "subset count " + std::to_string(m) +
                                               " must divide the number of angles (" +
                                               std::to_string(geom.n_angles) + ")");
  SubsetPartition part;
  part.count = m;
  part.index_sets.resize(m);
  for (std::size_t a = 0; a < geom.n_angles; ++a) {
    auto& set = part.index_sets[a % m];
    for (std::size_t r = 0; r < geom.n_radial; ++r) set.push_back(a * geom.n_radial + r);
  }
  part.access_order = bit_reversal_order(m);
  return part;
}

namespace {
const std::string kMatrixMagic = "SDPSM1";
}

void save_matrix_cache(const std::filesystem::path& path, const SystemMatrix& a) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error(ErrorKind::Io, "cannot write " + path.string());
  binio::write_magic(os, kMatrixMagic);
  binio::write_u64(os, a.key);
  binio::write_u64(os, a.rows());
  binio::write_u64(os, a.cols());
  binio::write_u64(os, a.forward.nnz());
  binio::write_array<std::uint64_t>(os, a.forward.row_ptr);
  std::vector<std::uint64_t> cols(a.forward.col_idx.begin(), a.forward.col_idx.end());
  binio::write_array<std::uint64_t>(os, cols);
  binio::write_array<double>(os, a.forward.values);
  if (!os) throw Error(ErrorKind::Io, "failed writing " + path.string());
}

std::optional<SystemMatrix> load_matrix_cache(const std::filesystem::path& path,
                                              const ScannerGeometry& geom, std::uint64_t key) {
  std::ifstream is(path, std::ios::binary);
  if (!is || !binio::read_magic(is, kMatrixMagic)) return std::nullopt;
  if (binio::read_u64(is) != key) return std::nullopt;
  const auto p = binio::read_u64(is);
  const auto q = binio::read_u64(is);
  const auto nnz = binio::read_u64(is);
  if (p != geom.bins() || q != geom.pixels()) return std::nullopt;
  SystemMatrix sm;
  sm.geometry = geom;
  sm.key = key;
  sm.forward.rows = p;
  sm.forward.cols = q;
  sm.forward.row_ptr = binio::read_array<std::uint64_t>(is, p + 1);
  const auto cols = binio::read_array<std::uint64_t>(is, nnz);
  sm.forward.col_idx.assign(cols.begin(), cols.end());
  sm.forward.values = binio::read_array<double>(is, nnz);
  if (sm.forward.row_ptr.back() != nnz) return std::nullopt;
  sm.adjoint = sm.forward.transpose();
  return sm;
}

SystemMatrix cached_system_matrix(const std::filesystem::path& path, const ScannerGeometry& geom,
                                  const std::optional<Image>& attenuation_map) {
  const auto key = matrix_key(geom, attenuation_map);
  if (auto cached = load_matrix_cache(path, geom, key)) return std::move(*cached);
  auto a = build_system_matrix(geom, attenuation_map);
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  save_matrix_cache(path, a);
  return a;
}

}  // namespace sdpet
