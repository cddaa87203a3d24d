#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "sdpet/error.hpp"
#include "sdpet/experiments.hpp"

using namespace sdpet;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("sdpet_exp_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

// Small desk-scale experiment: three algorithms, a handful of iterations.
std::string small_config(const fs::path& out, bool nrmsd, int reference_iterations = 6) {
  std::ostringstream y;
  y << "name: small\n"
       "simulation: {total_counts: 425000, seed: 5}\n"
       "algorithms:\n"
       "  - {variant: BSREM, subsets: 24, a: 1/35, iterations: 3}\n"
       "  - {variant: SDP-P1, subsets: 24, a: 0.5, nu1: 1.8, nu2: 2.5, iterations: 3}\n"
       "  - {variant: SDP-P2, subsets: 12, a: 0.35, rho: 2, delta1: 7, nu1: 1.4, nu2: 2.3, iterations: 3}\n"
       "reference: {iterations: "
    << reference_iterations
    << "}\n"
       "outputs: {directory: "
    << out.string() << ", nrmsd: " << (nrmsd ? "true" : "false") << ", angles: true}\n";
  return y.str();
}

}  // namespace

TEST_CASE("config parsing") {
  const auto cfg = parse_config(
      "name: t\n"
      "model: {beta: 0.8, gamma_r: 2, neighborhood: 4}\n"
      "algorithms:\n"
      "  - {variant: SDP-P2, subsets: 12, a: 1/5, rho: 5, delta1: 5, nu1: 0.8, nu2: 2.2, iterations: 7}\n",
      "/tmp");
  CHECK(cfg.violations().empty());
  CHECK(cfg.model.beta == 0.8);
  CHECK(cfg.neighborhood == 4);
  REQUIRE(cfg.algorithms.size() == 1);
  const auto& a = cfg.algorithms[0];
  CHECK(a.variant == Variant::P2);
  CHECK(a.name == "SDP-P2(12)");
  CHECK(a.relaxation.a == 0.2);
  CHECK(a.delta2 == 5.0);  // defaults to delta1
  CHECK(a.iterations == 7);
  CHECK(cfg.geometry.rows == 64);
  CHECK(cfg.outputs.directory == fs::path("/tmp") / "out");
}

TEST_CASE("validation lists every violation") {
  const auto cfg = parse_config(
      "bogus_key: 1\n"
      "model: {beta: -1}\n"
      "reconstruction: {t: 0}\n"
      "algorithms:\n"
      "  - {variant: SDP-P1, subsets: 5, iterations: 0, nu1: 3, nu2: 2}\n"
      "  - {variant: SDP-X, iterations: 4}\n",
      "/tmp");
  const auto v = cfg.violations();
  CHECK(v.size() >= 6);
  try {
    cfg.validate();
    FAIL("expected a validation error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Validation);
    const std::string msg = e.what();
    for (const char* needle : {"bogus_key", "model.beta", "reconstruction.t", ".iterations", ".subsets",
                               "nu1/nu2", "SDP-X"})
      CHECK_MESSAGE(msg.find(needle) != std::string::npos, needle);
  }
  CHECK_FALSE(parse_config("algorithms: []\n", "/tmp").violations().empty());
  CHECK_FALSE(parse_config("name: x\n", "/tmp").violations().empty());
  CHECK_THROWS_AS(parse_config("a: [1, 2\n", "/tmp"), Error);
}

TEST_CASE("shipped configs") {
  const fs::path root = SDPET_SOURCE_DIR;
  const auto hi = load_config(root / "configs/uniform-high-count.yaml");
  CHECK(hi.violations().empty());
  CHECK(hi.model.beta == 0.1);
  CHECK(hi.model.gamma_r == 2.0);
  CHECK(hi.neighborhood == 8);
  REQUIRE(hi.algorithms.size() == 3);
  CHECK(hi.algorithms[0].name == "BSREM(24)");
  CHECK(hi.algorithms[0].variant == Variant::Identity);
  CHECK(hi.algorithms[1].name == "SDP-P1(24)");
  CHECK(hi.algorithms[1].variant == Variant::P1);
  CHECK(hi.algorithms[2].name == "SDP-P2(24)");
  CHECK(hi.algorithms[2].variant == Variant::P2);
  for (const auto& a : hi.algorithms) CHECK(a.subsets == 24);
  CHECK(hi.geometry.rows == 64);
  CHECK(hi.geometry.n_angles == 72);
  CHECK(hi.geometry.n_radial == 144);

  auto full = load_config(root / "configs/uniform-high-count-full.yaml");
  CHECK(full.violations().empty());
  CHECK(full.geometry.rows == 256);
  CHECK(full.simulation.total_counts == 6.8e6);
  full.apply_desk_scale();
  CHECK(full.geometry.rows == 64);
  CHECK(full.simulation.total_counts == doctest::Approx(6.8e6 / 16.0));

  const auto lo = load_config(root / "configs/uniform-low-count.yaml");
  CHECK(lo.violations().empty());
  CHECK(lo.model.beta == 0.8);
}

TEST_CASE("config hashes") {
  auto a = parse_config(small_config("/tmp/x", false), "/tmp");
  auto b = a;
  CHECK(a.hash() == b.hash());
  b.simulation.seed = 6;
  CHECK(a.hash() != b.hash());
  CHECK(a.reference_hash() != b.reference_hash());
  b = a;
  b.algorithms[0].iterations = 9;
  CHECK(a.hash() != b.hash());
  CHECK(a.reference_hash() == b.reference_hash());
}

TEST_CASE("missing reference is an explicit error") {
  const auto dir = scratch("missing");
  const auto cfg = parse_config(small_config(dir, true), dir);
  try {
    run_experiment(cfg);
    FAIL("expected a reference error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::ReferenceMissing);
    CHECK(std::string(e.what()).find("recon reference") != std::string::npos);
  }
  fs::remove_all(dir);
}

TEST_CASE("experiment outputs, determinism and reference round trip") {
  const auto dir1 = scratch("run1");
  const auto dir2 = scratch("run2");
  const auto cfg1 = parse_config(small_config(dir1, true), dir1);
  const auto cfg2 = parse_config(small_config(dir2, true), dir2);

  const auto problem = prepare_problem(cfg1);
  const auto in_memory = emit_reference(cfg1, problem);
  CHECK(fs::exists(cfg1.reference_path()));
  const auto reloaded = load_reference(cfg1);
  CHECK(reloaded.image == in_memory.image);
  const auto& alg = cfg1.algorithms[1];
  const auto r_mem = run_algorithm(cfg1, problem, alg, &in_memory.image);
  const auto r_disk = run_algorithm(cfg1, problem, alg, &reloaded.image);
  REQUIRE(r_mem.trace.size() == r_disk.trace.size());
  for (std::size_t n = 0; n < r_mem.trace.size(); ++n) {
    CHECK(r_mem.trace[n].nrmsd_global == r_disk.trace[n].nrmsd_global);
    CHECK(r_mem.trace[n].nrmsd_roi == r_disk.trace[n].nrmsd_roi);
  }

  emit_reference(cfg2);
  const auto res1 = run_experiment(cfg1);
  const auto res2 = run_experiment(cfg2);
  REQUIRE(res1.algorithms.size() == 3);
  for (const char* f : {"trace_BSREM_24.csv", "trace_SDP-P1_24.csv", "trace_SDP-P2_12.csv",
                        "angles_SDP-P1_24.csv", "image_SDP-P2_12.bin", "emission_counts.bin"}) {
    REQUIRE(fs::exists(dir1 / f));
    CHECK_MESSAGE(slurp(dir1 / f) == slurp(dir2 / f), f);
  }
  CHECK(fs::exists(dir1 / "timing_BSREM_24.csv"));

  const auto trace = slurp(dir1 / "trace_SDP-P2_12.csv");
  CHECK(trace.starts_with("algorithm,k,i,objective,nrmsd_global,nrmsd_roi_hot_r4,"));
  CHECK(trace.find("theta_k,theta_tilde_k\n") != std::string::npos);
  CHECK(std::count(trace.begin(), trace.end(), '\n') == 1 + 1 + 3);

  const auto manifest = slurp(res1.manifest);
  for (const char* key : {"config_hash", "software_version", "seed", "files", "trace_SDP-P1_24.csv"})
    CHECK_MESSAGE(manifest.find(key) != std::string::npos, key);

  // Stale reference: a different seed no longer matches the stored checkpoint.
  auto stale = cfg1;
  stale.simulation.seed = 99;
  CHECK_THROWS_AS(load_reference(stale), Error);

  fs::remove_all(dir1);
  fs::remove_all(dir2);
}
