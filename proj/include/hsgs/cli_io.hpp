#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "hsgs/galerkin_sde.hpp"

namespace hsgs {

inline constexpr const char* kVersion = "0.1.0";

/// Process exit codes.
enum ExitCode { kExitOk = 0, kExitUsage = 1, kExitNumerical = 2, kExitSuite = 3 };

struct ForcingSpec {
  std::string type = "none";  ///< none | random
  double amplitude = 0.0;
  std::uint64_t seed = 7;
};

struct InitialSpec {
  std::string type = "random";  ///< zero | random | checkpoint
  double h1 = 1.0;              ///< target ||U_0||_{H1}
  double h2z = 2.0;             ///< target ||U_0||_{H2_z L2}
  double decay = 1.5;
  std::string path;             ///< checkpoint file for type = checkpoint
};

/// Everything a run needs, resolved from the config file and overrides.
struct RunSpec {
  SimConfig sim;
  NoiseParams noise;
  ForcingSpec forcing;
  InitialSpec initial;
  std::string out_dir = "hsgs_out";
  std::string cache_dir;  ///< basis cache; empty disables caching
  double moment_q = 2.0;  ///< q of the viscosity smallness condition
  double c_bdg = 1.0;     ///< surrogate for the constant c_B of that condition
  std::vector<std::string> warnings;

  /// Canonical "section.key = value" text of every resolved setting (sorted, fixed formatting).
  std::string snapshot() const;
};

/// Parses INI text with "section.key=value" overrides applied on top. Throws ConfigError or RangeError.
/// Unknown sections or keys are errors. Does not evaluate warnings that need the basis.
RunSpec parse_config_text(const std::string& ini, const std::vector<std::string>& overrides = {});
/// Reads the file, then parse_config_text. Cache dir defaults to $HSGS_CACHE_DIR.
RunSpec parse_config(const std::string& path, const std::vector<std::string>& overrides = {});

/// Everything built from a RunSpec.
struct Setup {
  BasisPtr basis;
  ContextPtr ctx;
  std::shared_ptr<const NoiseModel> noise;
  Forcing forcing;
};
Setup build_setup(const RunSpec& spec);

/// Smallness of the viscosities against the noise intensity: nu > eta^2 ((q-1)/2 + q c_B^2).
/// Appends human-readable warnings; never throws for a violation.
void check_preconditions(RunSpec& spec, const NoiseModel* noise);

/// Initial state for path `path`.
State make_initial(const RunSpec& spec, const Setup& setup, std::uint64_t path, std::mt19937_64& rng);

struct RunManifest {
  std::string snapshot;
  std::string version = kVersion;
  std::uint64_t basis_key = 0;
  std::vector<std::uint64_t> seeds;
  std::map<std::string, std::string> outputs;
  double wall_seconds = 0;
  std::vector<long> steps;

  /// Hash of the reproducibility-relevant fields (snapshot, version, basis key, seeds).
  std::string hash() const;
  std::string to_json() const;
  static RunManifest from_json(const std::string& text);
};

/// 17-significant-digit decimal.
std::string fmt17(double x);

// ---- commands (return an ExitCode; diagnostics go to `log`) ----

int cmd_basis(const RunSpec& spec, std::ostream& log);
int cmd_run(RunSpec spec, std::ostream& log);
/// Re-runs the configuration recorded in a manifest into out_dir.
int cmd_rerun(const std::string& manifest_path, const std::string& out_dir, std::ostream& log);
int cmd_ensemble(RunSpec spec, int n_paths, int threads, bool per_path, std::ostream& log);

struct CheckOptions {
  std::string suite = "all";  ///< holder | interpolation | logsobolev | nonlinear | poincare | noise | all
  std::string fixture;        ///< calibration fixture path
  bool calibrate = false;     ///< rewrite the fixture (seed 20240601, 500 samples) before checking
  std::string out;            ///< JSON report file; empty prints to log
  int samples = 60;           ///< family size for the uncalibrated suites
};
int cmd_check(const RunSpec& spec, const CheckOptions& opt, std::ostream& log);

/// Dumps fields of a checkpoint: what in {v, T, w, p_s, p, vbar, vtilde, all}.
int cmd_export(const RunSpec& spec, const std::string& checkpoint, const std::string& what, const std::string& out_dir,
               std::ostream& log);

/// Maps library exceptions to exit codes with a message on `log`.
int run_guarded(std::ostream& log, const std::function<int()>& body);

}  // namespace hsgs
