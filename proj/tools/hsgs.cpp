// Command-line front end: basis, run, ensemble, check, export.
#include <CLI11.hpp>
#include <iostream>

#include "hsgs/cli_io.hpp"
#include "hsgs/error.hpp"

int main(int argc, char** argv) {
  using namespace hsgs;
  CLI::App app{"Galerkin simulation of the stochastic hydrostatic equations"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);

  std::string config, cache_dir;
  std::vector<std::string> overrides;
  auto common = [&](CLI::App* sub, bool need_config) {
    auto* opt = sub->add_option("-c,--config", config, "INI configuration file");
    if (need_config) opt->check(CLI::ExistingFile);
    sub->add_option("-s,--set", overrides, "override, section.key=value (repeatable)");
    sub->add_option("--cache-dir", cache_dir, "basis cache directory (default $HSGS_CACHE_DIR)");
  };

  auto* basis = app.add_subcommand("basis", "build (or load) the basis and print its eigenvalues");
  common(basis, true);

  std::string manifest, out_dir;
  auto* run = app.add_subcommand("run", "integrate one path; writes ledger.csv, manifest.json, checkpoints");
  common(run, true);
  run->add_option("--manifest", manifest, "rerun the configuration recorded in a manifest")->check(CLI::ExistingFile);
  run->add_option("-o,--out", out_dir, "output directory");

  int paths = 16, threads = 0;
  bool per_path = false;
  auto* ens = app.add_subcommand("ensemble", "integrate independent paths and summarise them");
  common(ens, true);
  ens->add_option("-n,--paths", paths, "number of paths")->check(CLI::PositiveNumber);
  ens->add_option("-j,--threads", threads, "worker threads (0 = all cores)");
  ens->add_flag("--per-path", per_path, "also write one ledger per path");
  ens->add_option("-o,--out", out_dir, "output directory");

  CheckOptions check_opt;
  auto* check = app.add_subcommand("check", "run the inequality and noise suites");
  common(check, true);
  check->add_option("--suite", check_opt.suite, "holder|interpolation|logsobolev|nonlinear|poincare|noise|stability|all");
  check->add_option("--fixture", check_opt.fixture, "calibration fixture (JSON)");
  check->add_flag("--calibrate", check_opt.calibrate, "recompute the fixture (seed 20240601, 500 samples) first");
  check->add_option("--report", check_opt.out, "write the JSON report here instead of stdout");
  check->add_option("--samples", check_opt.samples, "family size");

  std::string checkpoint, what = "all";
  auto* exp = app.add_subcommand("export", "dump the fields of a checkpoint as CSV");
  common(exp, true);
  exp->add_option("checkpoint", checkpoint, "checkpoint file")->required()->check(CLI::ExistingFile);
  exp->add_option("--field", what, "v|T|w|p_s|p|vbar|vtilde|all");
  exp->add_option("-o,--out", out_dir, "output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  return run_guarded(std::cerr, [&]() -> int {
    if (run->parsed() && !manifest.empty()) {
      if (!config.empty() || !overrides.empty()) throw ConfigError("--manifest excludes --config and --set");
      return cmd_rerun(manifest, out_dir.empty() ? "hsgs_out" : out_dir, std::cout);
    }
    if (config.empty()) throw ConfigError("a configuration file is required (--config)");
    if (!cache_dir.empty()) overrides.push_back("basis.cache_dir=" + cache_dir);
    if (!out_dir.empty() && !exp->parsed()) overrides.push_back("output.dir=" + out_dir);
    RunSpec spec = parse_config(config, overrides);
    if (basis->parsed()) return cmd_basis(spec, std::cout);
    if (run->parsed()) return cmd_run(spec, std::cout);
    if (ens->parsed()) return cmd_ensemble(spec, paths, threads, per_path, std::cout);
    if (check->parsed()) return cmd_check(spec, check_opt, std::cout);
    return cmd_export(spec, checkpoint, what, out_dir, std::cout);
  });
}
