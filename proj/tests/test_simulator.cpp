#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numbers>

#include "doctest.h"
#include "sdpet/error.hpp"
#include "sdpet/kernels.hpp"
#include "sdpet/simulator.hpp"
#include "support.hpp"

using namespace sdpet;

namespace {

const SystemMatrix& desk_matrix() {
  static const SystemMatrix a = [] {
    const auto g = ScannerGeometry::desk_scale();
    const auto ph = make_uniform_phantom(g);
    return build_system_matrix(g, attenuation_map(ph));
  }();
  return a;
}

double total(const std::vector<double>& v) { return kernels::serial::sum(v); }

// Full width at half maximum of a sampled symmetric peak, by linear
// interpolation of the half-max crossings.
double measured_fwhm(const std::vector<double>& line) {
  const auto peak = std::max_element(line.begin(), line.end());
  const auto c = static_cast<std::size_t>(peak - line.begin());
  const double half = 0.5 * *peak;
  std::size_t r = c;
  while (line[r + 1] > half) ++r;
  const double right = r + (line[r] - half) / (line[r] - line[r + 1]);
  std::size_t l = c;
  while (line[l - 1] > half) --l;
  const double left = l - (line[l] - half) / (line[l] - line[l - 1]);
  return right - left;
}

}  // namespace

TEST_CASE("uniform phantom contrast and insert sizes") {
  const auto ph = make_uniform_phantom(ScannerGeometry{});
  std::size_t hot = 0;
  double hot_area = 0.0, hot_perimeter = 0.0;
  for (const auto& roi : ph.rois) {
    const bool is_hot = roi.label.starts_with("hot");
    const bool is_cold = roi.label.starts_with("cold");
    if (!is_hot && !is_cold) continue;
    for (std::size_t j = 0; j < roi.mask.data.size(); ++j) {
      if (!roi.mask.data[j]) continue;
      CHECK(ph.activity.data[j] == (is_hot ? 10.0 : 0.0));
      if (is_hot) ++hot;
    }
    if (is_hot) {
      const double r = std::stod(roi.label.substr(roi.label.find('r') + 1));
      hot_area += std::numbers::pi * r * r;
      hot_perimeter += 2.0 * std::numbers::pi * r;
    }
  }
  CHECK(hot_area == doctest::Approx(std::numbers::pi * (16 + 36 + 144 + 196)));
  CHECK(std::abs(static_cast<double>(hot) - hot_area) <= 4.0 * hot_perimeter);

  const auto bg = std::find_if(ph.rois.begin(), ph.rois.end(), [](const Roi& r) { return r.label == "background"; });
  REQUIRE(bg != ph.rois.end());
  for (std::size_t j = 0; j < bg->mask.data.size(); ++j)
    if (bg->mask.data[j]) CHECK(ph.activity.data[j] == 1.0);
  CHECK(ph.rois.size() == 8);
  CHECK_THROWS_AS(make_uniform_phantom(testing::tiny_geometry()), Error);
}

TEST_CASE("PSF blur") {
  Image impulse(65, 65, 1.17);
  impulse(32, 32) = 1.0;
  SUBCASE("zero width is the identity") {
    const auto out = blur_psf(impulse, 0.0, 1.17);
    CHECK(out.data == impulse.data);
  }
  SUBCASE("measured FWHM") {
    const auto out = blur_psf(impulse, 6.59, 1.17);
    std::vector<double> row(out.data.begin() + 32 * 65, out.data.begin() + 33 * 65);
    std::vector<double> col(65);
    for (std::size_t r = 0; r < 65; ++r) col[r] = out(r, 32);
    CHECK(std::abs(measured_fwhm(row) - 6.59 / 1.17) < 0.05 * 6.59 / 1.17);
    CHECK(std::abs(measured_fwhm(col) - 6.59 / 1.17) < 0.05 * 6.59 / 1.17);
    // sigma = FWHM / (2 sqrt(2 ln 2))
    CHECK(6.59 / (2.0 * std::sqrt(2.0 * std::log(2.0))) / 1.17 == doctest::Approx(2.392).epsilon(1e-3));
  }
  SUBCASE("mass conservation, including near the border") {
    const auto f = testing::uniform_vector(40 * 30, 0.0, 3.0, 9);
    Image img(40, 30, 2.0);
    img.data = f;
    const auto out = blur_psf(img, 6.59, 2.0);
    CHECK(testing::rel_err(total(out.data), total(f)) < 1e-12);
    Image corner(16, 16, 1.17);
    corner(0, 0) = 5.0;
    CHECK(testing::rel_err(total(blur_psf(corner, 6.59, 1.17).data), 5.0) < 1e-12);
  }
  CHECK_THROWS_AS(blur_psf(impulse, -1.0, 1.17), Error);
}

TEST_CASE("simulation fractions are exact on expectations") {
  const auto& a = desk_matrix();
  const auto ph = make_uniform_phantom(a.geometry);
  SimulationSpec spec;
  spec.total_counts = 6.8e6;
  spec.noise = false;
  const auto d = simulate_data(ph, a, spec);
  const double t = total(d.trues_mean), s = total(d.scatter_mean), r = total(d.randoms_mean);
  CHECK(std::abs(s / (t + s) - 0.25) < 1e-10);
  CHECK(std::abs(r / (t + s + r) - 0.25) < 1e-10);
  CHECK(testing::rel_err(total(d.counts), 6.8e6) < 1e-10);
  for (std::size_t i = 0; i < d.background.size(); ++i)
    CHECK(d.background[i] == d.scatter_mean[i] + d.randoms_mean[i]);
}

TEST_CASE("degenerate fractions: trues only with a floored background") {
  const auto& a = desk_matrix();
  const auto ph = make_uniform_phantom(a.geometry);
  SimulationSpec spec;
  spec.total_counts = 1e5;
  spec.scatter_fraction = spec.random_fraction = 0.0;
  spec.noise = false;
  const auto d = simulate_data(ph, a, spec);
  CHECK(d.counts == d.trues_mean);
  CHECK(std::ranges::all_of(d.background, [](double g) { return g == kBackgroundFloor; }));
}

TEST_CASE("Poisson realisations are seed deterministic") {
  const auto& a = desk_matrix();
  const auto ph = make_uniform_phantom(a.geometry);
  SimulationSpec spec;
  spec.total_counts = 6.8e5;
  const auto first = simulate_data(ph, a, spec);
  CHECK(simulate_data(ph, a, spec).counts == first.counts);
  for (std::uint64_t seed = 2; seed <= 21; ++seed) {
    spec.seed = seed;
    const auto d = simulate_data(ph, a, spec);
    CHECK(d.counts != first.counts);
    CHECK(std::abs(total(d.counts) - 6.8e5) / 6.8e5 < 0.02);
    CHECK(std::ranges::all_of(d.counts, [](double g) { return g >= 0.0 && g == std::floor(g); }));
  }
}

TEST_CASE("simulation spec validation") {
  SimulationSpec spec;
  CHECK_NOTHROW(spec.validate());
  spec.total_counts = -1.0;
  CHECK_THROWS_AS(spec.validate(), Error);
  spec = SimulationSpec{};
  spec.scatter_fraction = 1.0;
  CHECK_THROWS_AS(spec.validate(), Error);
  spec = SimulationSpec{};
  spec.random_fraction = -0.1;
  CHECK_THROWS_AS(spec.validate(), Error);
}

TEST_CASE("phantom file and emission export round trips") {
  const auto dir = std::filesystem::temp_directory_path() / "sdpet_sim_test";
  std::filesystem::create_directories(dir);
  const auto g = ScannerGeometry::desk_scale();
  const auto ph = make_uniform_phantom(g);
  write_phantom_file(dir / "ph.txt", ph.activity);
  const auto back = read_phantom_file(dir / "ph.txt");
  CHECK(back.activity.rows == 64);
  CHECK(back.activity.data == ph.activity.data);

  SimulationSpec spec;
  spec.total_counts = 1e5;
  const auto d = simulate_data(ph, desk_matrix(), spec);
  export_emission_data(dir / "em.json", d, g);
  const auto e = import_emission_data(dir / "em.json");
  CHECK(e.counts == d.counts);
  CHECK(e.background == d.background);
  std::filesystem::remove_all(dir);
}
