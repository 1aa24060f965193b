#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "hsgs/estimates.hpp"
#include "hsgs/noise.hpp"

namespace hsgs {

enum class CutoffMode { Raw, LinfL4, H1L4 };

std::string to_string(CutoffMode m);
/// Accepts raw, cutoff_linf_l4, cutoff_h1_l4. Throws ConfigError.
CutoffMode parse_cutoff_mode(const std::string& s);

struct SimConfig {
  PhysicalConstants phys;
  CylinderDomain domain;
  int n = 16, n_z = 4;
  int K = 0;
  double dt = 1e-3;
  double t_end = 1e-2;  ///< 0 is allowed and means "initial sample only"
  CutoffMode mode = CutoffMode::Raw;
  double rho = 1e3;  ///< scale of the L^inf_z L^4 cut-off
  double mu = 1e3;   ///< scale of the H^1_z L^4 cut-off
  double blowup_N = std::numeric_limits<double>::infinity();
  std::uint64_t seed = 1;
  std::vector<double> ledger_q{2, 4, 6, 132};
  int ledger_stride = 1;     ///< sample the ledger every this many steps (and at the last step)
  int checkpoint_every = 0;  ///< steps between checkpoints; 0 writes none
  bool advection = true;     ///< false drops theta(U) B(U, U) (linear test problems)
  double dealias = 1.5;

  /// Throws RangeError on dt <= 0, 0 < t_end < dt, rho, mu or N not positive, bad stride or q.
  void validate() const;
  long n_steps() const;
};

/// Smooth bump: 1 on |x| <= lambda/2, 0 on |x| >= lambda, C-infinity in between. Throws RangeError if lambda <= 0.
double cutoff_theta(double x, double lambda);
/// d theta_lambda / dx.
double cutoff_theta_prime(double x, double lambda);
/// sup |theta_lambda'| = 4 / lambda for the bump above.
double cutoff_theta_prime_bound(double lambda);

/// theta_rho(||U||_{L^inf_z L^4}) or theta_mu(||U||_{H^1_z L^4}); 1 in raw mode.
double cutoff_state(const NormEngine& ne, const State& s, const SimConfig& cfg);

/// Band-limited random state with prescribed ||U||_{H^1} and ||U||_{H^2_z L^2} (H2 >= the H1 part it implies).
/// The barotropic and baroclinic parts are scaled separately. Throws RangeError when unattainable.
State initial_state(BasisPtr b, std::mt19937_64& rng, double h1_norm, double h2z_norm, double decay = 1.5);

/// Time series of the monitored norms. Columns are fixed by the configuration.
struct EnergyLedger {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
  bool stopped = false;
  double stop_time = std::numeric_limits<double>::quiet_NaN();
  std::string stop_reason;

  int column(const std::string& name) const;  ///< throws ConfigError when absent
  std::vector<double> series(const std::string& name) const;
  /// First line "# manifest <hash>", then the header, then one row per sample, 17 significant digits.
  void write_csv(std::ostream& os, const std::string& manifest_hash) const;
};

/// Ledger column names for a configuration.
std::vector<std::string> ledger_columns(const SimConfig& cfg);

/// First sample time at which the blow-up functional reaches N (non-finite counts as reached).
std::optional<double> blowup_monitor(const EnergyLedger& ledger, double N);

struct StepResult {
  State state;
  bool blowup = false;  ///< non-finite coefficients
  double theta = 1.0;
};

struct PathIO {
  std::string checkpoint_dir;  ///< empty disables checkpoints
  std::string prefix = "path";
  std::uint64_t config_hash = 0;
};

struct PathResult {
  State final_state;
  EnergyLedger ledger;
  std::vector<std::string> checkpoints;
  long steps = 0;
};

/// Semi-implicit Euler-Maruyama for dU + [A_H U + theta(U) B(U,U) + F(U)] dt = sigma(U) dW.
class Simulator {
 public:
  /// noise may be null when cfg.K == 0. Throws ConfigError on mismatches.
  Simulator(SimConfig cfg, ContextPtr ctx, std::shared_ptr<const NoiseModel> noise, Forcing forcing);

  const SimConfig& config() const { return cfg_; }
  const OperatorContext& ctx() const { return *ctx_; }
  BasisPtr basis() const { return ctx_->basis; }
  const NormEngine& norms() const { return ne_; }

  /// One step of size dt with Wiener increments dW (length K).
  StepResult step(const State& s, const Vec& dW, double dt) const;
  StepResult step(const State& s, const Vec& dW) const { return step(s, dW, cfg_.dt); }
  /// The same step written for d_z U with the differentiated operators.
  DzState step_dz(const State& s, const Vec& dW, double dt) const;

  /// Integrate from `initial` until t_end or until the monitor fires. Path `path` draws from path_rng(seed, path).
  PathResult run_path(const State& initial, std::uint64_t path = 0, const PathIO& io = {}) const;

 private:
  SimConfig cfg_;
  ContextPtr ctx_;
  std::shared_ptr<const NoiseModel> noise_;
  Forcing forcing_;
  NormEngine ne_;
  Vec damp_T_;  // nu_T * lambda per temperature row

  struct Running;
  void sample(const State& s, long step, const Running& run, double theta, EnergyLedger& led) const;
};

// ---- ensembles ----

/// Order-fixed compensated sum.
class KahanSum {
 public:
  void add(double x);
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0, comp_ = 0;
};

struct ColumnStats {
  double mean = 0, variance = 0, q10 = 0, q50 = 0, q90 = 0;
  int count = 0;
};

struct EnsembleReport {
  std::vector<std::string> columns;
  std::vector<PathResult> paths;
  std::vector<std::string> errors;  ///< per path; empty when the path ran
  /// Per sample index and column, over the paths that reached that sample.
  std::vector<std::vector<ColumnStats>> per_sample;
  /// Over paths, of the last row of each ledger.
  std::vector<ColumnStats> final_stats;
  /// Over paths, of sup_t ||U||^2_{L2}.
  ColumnStats sup_l2_sq;
  int stopped = 0;
  std::string to_json() const;
};

using InitialGenerator = std::function<State(std::uint64_t path, std::mt19937_64& rng)>;

/// Stream for the initial data of path `path`, disjoint from the noise streams path_rng(seed, path).
std::mt19937_64 initial_rng(std::uint64_t seed, std::uint64_t path);

/// Runs n_paths independent paths on `threads` workers (0 = hardware concurrency).
EnsembleReport run_ensemble(const Simulator& sim, int n_paths, const InitialGenerator& initial, int threads = 0);

ColumnStats column_stats(std::vector<double> values);

struct SweepPoint {
  double scale = 0;
  double eta = 0;
  double mean_sup_l2_sq = 0;
  int stopped = 0;
};

/// Mean sup ||U||^2_{L2} for noise amplitudes scaled by each factor (same seeds per point).
std::vector<SweepPoint> noise_amplitude_sweep(const SimConfig& cfg, ContextPtr ctx, const NoiseParams& base,
                                              const std::vector<double>& scales, int n_paths,
                                              const InitialGenerator& initial, const Forcing& forcing);

}  // namespace hsgs
