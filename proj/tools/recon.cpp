#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "sdpet/error.hpp"
#include "sdpet/experiments.hpp"

using namespace sdpet;

namespace {

struct Overrides {
  std::optional<std::uint64_t> seed;
  std::string out_dir;
  bool desk_scale = false;
};

ExperimentConfig load(const std::string& path, const Overrides& o) {
  auto cfg = load_config(path);
  if (o.seed) cfg.simulation.seed = *o.seed;
  if (!o.out_dir.empty()) cfg.outputs.directory = o.out_dir;
  if (o.desk_scale) cfg.apply_desk_scale();
  return cfg;
}

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Validation:
    case ErrorKind::Config:
    case ErrorKind::InvalidGeometry:
    case ErrorKind::InvalidSubsets:
    case ErrorKind::InvalidPhantom:
    case ErrorKind::InvalidSpec:
      return 2;
    case ErrorKind::NumericalFailure:
    case ErrorKind::Domain:
    case ErrorKind::DegenerateImage:
    case ErrorKind::UndefinedMetric:
      return 3;
    case ErrorKind::ReferenceMissing:
      return 4;
    default:
      return 1;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"SDP-BSREM PET reconstruction experiments"};
  app.require_subcommand(1);

  Overrides o;
  std::uint64_t seed = 0;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--seed", seed, "override simulation.seed")
        ->each([&](const std::string&) { o.seed = seed; });
    sub->add_option("--out-dir", o.out_dir, "override outputs.directory");
    sub->add_flag("--desk-scale", o.desk_scale, "force the 64x64 desk-scale geometry");
  };

  std::string config;
  std::string phantom_out;

  auto* run = app.add_subcommand("run", "run every configured algorithm and write traces");
  run->add_option("config", config, "experiment YAML")->required()->check(CLI::ExistingFile);
  add_common(run);

  auto* reference = app.add_subcommand("reference", "compute the converged reference image");
  reference->add_option("config", config, "experiment YAML")->required()->check(CLI::ExistingFile);
  add_common(reference);

  auto* validate = app.add_subcommand("validate", "check a config and list every problem");
  validate->add_option("config", config, "experiment YAML")->required()->check(CLI::ExistingFile);
  add_common(validate);

  auto* phantom = app.add_subcommand("phantom", "write the configured phantom");
  phantom->add_option("config", config, "experiment YAML")->required()->check(CLI::ExistingFile);
  phantom->add_option("--out", phantom_out, "output phantom file")->required();
  add_common(phantom);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    auto cfg = load(config, o);
    if (*validate) {
      const auto v = cfg.violations();
      if (v.empty()) {
        std::cout << "ok: " << config << "\n";
        return 0;
      }
      std::cerr << v.size() << " problem(s) in " << config << ":\n";
      for (const auto& s : v) std::cerr << "  - " << s << "\n";
      return 2;
    }
    if (*phantom) {
      cfg.validate();
      const auto ph = make_phantom(cfg);
      write_phantom_file(phantom_out, ph.activity);
      std::cout << "wrote " << phantom_out << "\n";
      return 0;
    }
    if (*reference) {
      const auto ck = emit_reference(cfg);
      std::cout << "reference (" << ck.iteration << " iterations) -> " << cfg.reference_path().string()
                << "\n";
      return 0;
    }
    const auto res = run_experiment(cfg);
    for (const auto& alg : res.algorithms) {
      const auto& last = alg.trace.back();
      std::printf("%-16s k=%zu objective=%.10g", alg.name.c_str(), last.k, last.objective);
      if (last.nrmsd_global) std::printf(" nrmsd=%.4g", *last.nrmsd_global);
      std::printf("\n");
    }
    std::cout << "manifest: " << res.manifest.string() << "\n";
    return 0;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
