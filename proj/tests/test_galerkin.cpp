#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <sstream>

#include "hsgs/error.hpp"
#include "hsgs/galerkin_sde.hpp"

using namespace hsgs;

namespace {

ContextPtr context(const PhysicalConstants& pc = {}) {
  static BasisPtr b = build_basis(CylinderDomain{1.0, 1.0, 1.0, 10, 10, 6}, 10, 3);
  return OperatorContext::make(b, pc);
}

SimConfig base_config(double dt, double t_end) {
  SimConfig c;
  c.n = 10;
  c.n_z = 3;
  c.dt = dt;
  c.t_end = t_end;
  c.ledger_q = {2, 4};
  return c;
}

std::string csv(const EnergyLedger& l) {
  std::ostringstream os;
  l.write_csv(os, "0");
  return os.str();
}

// Additive noise along one barotropic basis element: sigma e_0 = eps * (Stokes mode m, c_0).
std::shared_ptr<const NoiseModel> additive_noise(ContextPtr ctx, int m, double eps) {
  const TensorBasis& b = *ctx->basis;
  NoiseMode md = NoiseMode::zero(*b.grid);
  md.chi.x[kSlotU] = b.stokes.modes.col(m).head(b.n_xface());
  md.chi.y[kSlotV] = b.stokes.modes.col(m).tail(b.n_yface());
  const double h = b.grid->domain().h;
  md.chi_profile = Profile::constant(h, eps / std::sqrt(h));
  return std::make_shared<const NoiseModel>(ctx, std::vector<NoiseMode>{md});
}

}  // namespace

TEST_CASE("cut-off function") {
  const double rho = 3.0;
  CHECK(cutoff_theta(0.4 * rho, rho) == 1.0);
  CHECK(cutoff_theta(1.2 * rho, rho) == 0.0);
  CHECK(cutoff_theta(0.5 * rho, rho) == 1.0);
  CHECK(cutoff_theta(rho, rho) == 0.0);
  CHECK(cutoff_theta(-0.45 * rho, rho) == 1.0);
  const double mid = cutoff_theta(0.75 * rho, rho);
  CHECK(mid > 0.0);
  CHECK(mid < 1.0);
  CHECK(mid == doctest::Approx(0.5).epsilon(1e-14));  // symmetric step
  double prev = 1.0, worst = 0.0;
  const double e = 1e-6;
  for (int i = 0; i <= 2000; ++i) {
    const double x = rho * (0.45 + 0.6 * i / 2000.0);
    const double t = cutoff_theta(x, rho);
    CHECK(t <= prev);
    prev = t;
    const double fd = (cutoff_theta(x + e, rho) - cutoff_theta(x - e, rho)) / (2 * e);
    CHECK(std::abs(cutoff_theta_prime(x, rho) - fd) <= 1e-5 * std::abs(fd) + 1e-8);
    worst = std::max(worst, std::abs(cutoff_theta_prime(x, rho)));
  }
  CHECK(worst <= cutoff_theta_prime_bound(rho) * (1 + 1e-12));
  CHECK(worst >= 0.99 * cutoff_theta_prime_bound(rho));
  // flat contact at both ends
  CHECK(std::abs(cutoff_theta_prime(0.5 * rho * (1 + 1e-3), rho)) < 1e-100);
  CHECK(std::abs(cutoff_theta_prime(rho * (1 - 1e-3), rho)) < 1e-100);
  CHECK_THROWS_AS(cutoff_theta(1.0, 0.0), RangeError);
}

TEST_CASE("cut-off of a state") {
  auto ctx = context();
  NormEngine ne(ctx->basis);
  SimConfig cfg = base_config(1e-3, 1e-3);
  cfg.mode = CutoffMode::LinfL4;
  cfg.rho = 2.0;
  CHECK(cutoff_state(ne, State::zero(ctx->basis), cfg) == 1.0);
  std::mt19937_64 rng(1);
  const State s = random_state(ctx->basis, rng);
  const double n = ne.linf_l4(s);
  CHECK(cutoff_state(ne, (2 * cfg.rho / n) * s, cfg) == 0.0);
  double prev = 1.0;
  for (double a = 0; a <= 4.0 / n; a += 0.05 / n) {
    const double t = cutoff_state(ne, a * s, cfg);
    CHECK(t <= prev);
    prev = t;
  }
  cfg.mode = CutoffMode::H1L4;
  cfg.mu = ne.h1z_l4(s);
  CHECK(cutoff_state(ne, s, cfg) == 0.0);
  CHECK(cutoff_state(ne, 0.5 * s, cfg) == 1.0);
  cfg.mode = CutoffMode::Raw;
  CHECK(cutoff_state(ne, 100.0 * s, cfg) == 1.0);
  CHECK(parse_cutoff_mode(to_string(CutoffMode::H1L4)) == CutoffMode::H1L4);
  CHECK_THROWS_AS(parse_cutoff_mode("soft"), ConfigError);
}

TEST_CASE("configuration invariants") {
  SimConfig c = base_config(1e-3, 1e-2);
  CHECK_NOTHROW(c.validate());
  CHECK(c.n_steps() == 10);
  c.dt = -1e-3;
  CHECK_THROWS_AS(c.validate(), RangeError);
  c = base_config(1e-2, 5e-3);
  CHECK_THROWS_AS(c.validate(), RangeError);
  c = base_config(1e-3, 0.0);
  CHECK_NOTHROW(c.validate());
  CHECK(c.n_steps() == 0);
  c.rho = 0;
  CHECK_THROWS_AS(c.validate(), RangeError);
  c = base_config(1e-3, 1e-3);
  c.blowup_N = 0;
  CHECK_THROWS_AS(c.validate(), RangeError);
}

TEST_CASE("single step examples") {
  PhysicalConstants pc;
  pc.nu_v = 0.7;
  pc.nu_T = 0.3;
  auto ctx = context(pc);
  auto b = ctx->basis;
  SimConfig cfg = base_config(1e-2, 1e-2);
  cfg.advection = false;
  const Simulator sim(cfg, ctx, nullptr, Forcing::zero(*b));
  State s = State::zero(b);
  s.v(3, 0) = 1.0;
  s.v(2, 2) = -2.0;
  s.T(4, 1) = 0.5;
  const State r = sim.step(s, Vec(), cfg.dt).state;
  CHECK(r.v(3, 0) == 1.0 / (1 + cfg.dt * pc.nu_v * b->vel_eig(3, 0)));
  CHECK(r.v(2, 2) == -2.0 / (1 + cfg.dt * pc.nu_v * b->vel_eig(2, 2)));
  CHECK(r.T(4, 1) == 0.5 / (1 + cfg.dt * pc.nu_T * b->temp_eig(4)));
  CHECK(r.v.cwiseAbs().sum() == doctest::Approx(std::abs(r.v(3, 0)) + std::abs(r.v(2, 2))));
  // vanishing step size: identity
  std::mt19937_64 rng(2);
  const State u = random_state(b, rng);
  SimConfig full = base_config(1e-3, 1e-3);
  const Simulator nl(full, ctx, nullptr, Forcing::zero(*b));
  const State id = nl.step(u, Vec(), 1e-14).state;
  CHECK((id - u).norm() <= 1e-10 * u.norm());
  CHECK_THROWS_AS(nl.step(u, Vec::Zero(2), 1e-3), ConfigError);
  // non-finite data is a blow-up signal
  State bad = u;
  bad.v(0, 1) = std::numeric_limits<double>::infinity();
  StepResult br;
  CHECK_NOTHROW(br = nl.step(bad, Vec(), 1e-3));
  CHECK(br.blowup);
}

TEST_CASE("OU law of an additively forced mode") {
  PhysicalConstants pc;
  auto ctx0 = context();
  const double lam = ctx0->basis->vel_eig(0, 0);
  pc.nu_v = 20.0 / lam;  // nu lambda = 20
  auto ctx = context(pc);
  const double eps = 0.05, a = 20.0, dt = 1e-3, T = 0.1;
  SimConfig cfg = base_config(dt, T);
  cfg.K = 1;
  cfg.advection = false;
  const Simulator sim(cfg, ctx, additive_noise(ctx, 0, eps), Forcing::zero(*ctx->basis));
  const int paths = 2000;
  KahanSum m1, m2;
  double leak = 0;
  for (int p = 0; p < paths; ++p) {
    std::mt19937_64 rng = path_rng(77, p);
    State s = State::zero(ctx->basis);
    s.v(0, 0) = 1.0;
    for (long k = 0; k < cfg.n_steps(); ++k) s = sim.step(s, wiener_increments(rng, 1, dt)).state;
    m1.add(s.v(0, 0));
    m2.add(s.v(0, 0) * s.v(0, 0));
    leak = std::max(leak, s.v.bottomRows(ctx->basis->n - 1).cwiseAbs().maxCoeff() + s.T.cwiseAbs().maxCoeff());
  }
  const double mean = m1.value() / paths, var = m2.value() / paths - mean * mean;
  const double mean_exact = std::exp(-a * T), var_exact = eps * eps * (1 - std::exp(-2 * a * T)) / (2 * a);
  MESSAGE("mean " << mean << " vs " << mean_exact << ", variance " << var << " vs " << var_exact);
  CHECK(leak < 1e-13);
  CHECK(std::abs(mean - mean_exact) <= 0.05 * mean_exact);
  CHECK(std::abs(var - var_exact) <= 0.1 * var_exact);  // 2000 paths: sampling error about 3%
}

TEST_CASE("d_z shadow of one step") {
  PhysicalConstants pc;
  pc.k0 = 1.3;
  pc.beta_T = 0.2;
  pc.g = 2.0;
  auto ctx = context(pc);
  auto b = ctx->basis;
  NoiseParams np;
  np.family = "trig";
  np.K = 4;
  np.psi = 0.3;
  np.phi = 0.2;
  np.psiT = 0.2;
  np.zeta = 0.2;
  np.nu = 0.1;
  np.chi = 0.1;
  np.gamma = 0.2;
  np.theta = 0.1;
  np.zeta_hat = 0.1;
  np.nu_hat = 0.1;
  np.chi_hat = 0.1;
  auto noise = std::make_shared<const NoiseModel>(make_noise(ctx, np));
  std::mt19937_64 rng(3);
  Forcing f = Forcing::zero(*b);
  f.fv = 0.1 * random_state(b, rng).v;
  f.fv.col(0).setZero();
  f.fT = 0.1 * random_state(b, rng).T;
  for (CutoffMode mode : {CutoffMode::Raw, CutoffMode::LinfL4}) {
    SimConfig cfg = base_config(1e-2, 1e-2);
    cfg.K = 4;
    cfg.mode = mode;
    cfg.rho = 1.0;
    const Simulator sim(cfg, ctx, noise, f);
    const State u = random_state(b, rng);
    const Vec dW = wiener_increments(rng, 4, cfg.dt);
    const DzState lhs = dz_coefficients(sim.step(u, dW).state);
    const DzState rhs = sim.step_dz(u, dW, cfg.dt);
    const double scale = std::sqrt(lhs.dot(lhs));
    const DzState diff{lhs.v - rhs.v, lhs.T - rhs.T};
    CHECK(std::sqrt(diff.dot(diff)) <= 1e-10 * scale);
  }
}

TEST_CASE("run_path basics") {
  auto ctx = context();
  auto b = ctx->basis;
  std::mt19937_64 rng(4);
  const State u0 = random_state(b, rng);
  SUBCASE("t_end = 0") {
    const Simulator sim(base_config(1e-3, 0.0), ctx, nullptr, Forcing::zero(*b));
    const PathResult r = sim.run_path(u0);
    CHECK(r.ledger.rows.size() == 1);
    CHECK(r.steps == 0);
    CHECK(r.final_state.v == u0.v);
    CHECK(r.final_state.T == u0.T);
    CHECK(r.ledger.columns.size() == r.ledger.rows[0].size());
  }
  SUBCASE("strong viscosity without noise dissipates") {
    PhysicalConstants pc;
    pc.nu_v = pc.nu_T = 50.0;
    auto c2 = context(pc);
    const Simulator sim(base_config(1e-3, 0.05), c2, nullptr, Forcing::zero(*b));
    const PathResult r = sim.run_path(u0);
    CHECK(r.ledger.rows.size() == 51);
    // the horizontally constant temperature mode is undamped, so equality holds up to round-off late in the run
    for (std::string col : {"l2", "h1", "grad_h"}) {
      const auto s = r.ledger.series(col);
      for (size_t i = 1; i < s.size(); ++i) CHECK_MESSAGE(s[i] <= s[i - 1] * (1 + 1e-12), col << " step " << i);
    }
    CHECK(r.final_state.norm() <= u0.norm());
    for (const char* col : {"int_AH_sq", "int_H1zH1xy_sq", "int_vLinf_sq", "blowup_functional"}) {
      const auto s = r.ledger.series(col);
      for (size_t i = 1; i < s.size(); ++i) CHECK(s[i] >= s[i - 1]);
    }
    CHECK_FALSE(r.ledger.stopped);
  }
  SUBCASE("determinism, stride and checkpoints") {
    NoiseParams np;
    np.family = "trig";
    np.K = 3;
    np.psi = 0.3;
    np.chi = 0.2;
    auto noise = std::make_shared<const NoiseModel>(make_noise(ctx, np));
    SimConfig cfg = base_config(1e-3, 2e-2);
    cfg.K = 3;
    cfg.seed = 99;
    cfg.ledger_stride = 4;
    cfg.checkpoint_every = 10;
    const Simulator sim(cfg, ctx, noise, Forcing::zero(*b));
    const auto dir = std::filesystem::temp_directory_path() / "hsgs_test_ckpt";
    std::filesystem::remove_all(dir);
    PathIO io;
    io.checkpoint_dir = dir.string();
    io.config_hash = 1234;
    const PathResult a = sim.run_path(u0, 0, io), c = sim.run_path(u0, 0);
    CHECK(csv(a.ledger) == csv(c.ledger));
    CHECK(a.ledger.series("step") == std::vector<double>{0, 4, 8, 12, 16, 20});
    REQUIRE(a.checkpoints.size() == 3);
    std::uint64_t hash = 0;
    const State back = read_checkpoint(a.checkpoints.back(), b, &hash);
    CHECK(hash == 1234);
    CHECK(back.v == a.final_state.v);
    const PathResult other = sim.run_path(u0, 1);
    CHECK(csv(other.ledger) != csv(a.ledger));
    for (double d : a.ledger.series("div_vbar")) CHECK(d <= 1e-10);
    std::filesystem::remove_all(dir);
  }
}

TEST_CASE("deterministic energy decay with advection and rotation") {
  PhysicalConstants pc;
  pc.k0 = 2.0;
  pc.nu_v = 0.05;
  auto ctx = context(pc);
  auto b = ctx->basis;
  std::mt19937_64 rng(5);
  State s = random_state(b, rng);
  s.T.setZero();
  SimConfig cfg = base_config(1e-3, 0.2);
  const Simulator sim(cfg, ctx, nullptr, Forcing::zero(*b));
  NormEngine ne(b);
  double prev = ne.l2(s, Part::Velocity);
  int bad = 0;
  for (int k = 0; k < 200; ++k) {
    s = sim.step(s, Vec()).state;
    const double now = ne.l2(s, Part::Velocity);
    if (now > prev * (1 + 1e-12)) ++bad;
    prev = now;
  }
  CHECK(bad == 0);
  CHECK(s.T.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("cut-off with a huge scale reproduces the raw run") {
  auto ctx = context();
  auto b = ctx->basis;
  NoiseParams np;
  np.family = "trig";
  np.K = 2;
  np.psi = 0.2;
  np.chi = 0.1;
  auto noise = std::make_shared<const NoiseModel>(make_noise(ctx, np));
  std::mt19937_64 rng(6);
  const State u0 = random_state(b, rng);
  SimConfig raw = base_config(1e-3, 1e-2);
  raw.K = 2;
  const PathResult r = Simulator(raw, ctx, noise, Forcing::zero(*b)).run_path(u0);
  const double typical = r.ledger.series("linf_l4")[0];
  for (CutoffMode m : {CutoffMode::LinfL4, CutoffMode::H1L4}) {
    SimConfig cut = raw;
    cut.mode = m;
    cut.rho = cut.mu = 1e3 * typical;
    const PathResult c = Simulator(cut, ctx, noise, Forcing::zero(*b)).run_path(u0);
    CHECK((c.final_state - r.final_state).norm() <= 1e-12 * r.final_state.norm());
  }
  // an active cut-off changes the trajectory
  SimConfig tight = raw;
  tight.mode = CutoffMode::LinfL4;
  tight.rho = 0.6 * typical;
  const PathResult t = Simulator(tight, ctx, noise, Forcing::zero(*b)).run_path(u0);
  CHECK((t.final_state - r.final_state).norm() > 1e-8);
  for (double th : t.ledger.series("theta")) CHECK((th >= 0 && th <= 1));
}

TEST_CASE("blow-up monitor") {
  auto ctx = context();
  auto b = ctx->basis;
  std::mt19937_64 rng(7);
  const State u0 = random_state(b, rng);
  NormEngine ne(b);
  const double h1sq = std::pow(ne.h1(u0), 2);
  SUBCASE("threshold below the initial functional fires at t = 0") {
    SimConfig cfg = base_config(1e-3, 1e-2);
    cfg.blowup_N = 0.5 * h1sq;
    const PathResult r = Simulator(cfg, ctx, nullptr, Forcing::zero(*b)).run_path(u0);
    CHECK(r.ledger.stopped);
    CHECK(r.ledger.stop_time == 0.0);
    CHECK(r.ledger.rows.size() == 1);
    CHECK(blowup_monitor(r.ledger, cfg.blowup_N).value() == 0.0);
  }
  SUBCASE("monotone in N on a stressed run; never fires with infinite N") {
    PhysicalConstants pc;
    pc.nu_v = pc.nu_T = 0.01;
    auto c2 = OperatorContext::make(b, pc);
    NoiseParams np;
    np.family = "trig";
    np.K = 4;
    np.decay = 0;
    np.psi = 1.5;
    np.zeta = 1.0;
    auto noise = std::make_shared<const NoiseModel>(make_noise(c2, np));
    SimConfig cfg = base_config(1e-2, 1.0);
    cfg.K = 4;
    const PathResult r = Simulator(cfg, c2, noise, Forcing::zero(*b)).run_path(0.3 * u0);
    CHECK_FALSE(blowup_monitor(r.ledger, std::numeric_limits<double>::infinity()).has_value());
    double prev = -1;
    for (double N : {1.0, 10.0, 100.0}) {
      const auto t = blowup_monitor(r.ledger, N);
      const double tt = t.value_or(std::numeric_limits<double>::infinity());
      CHECK(tt >= prev);
      prev = tt;
    }
    // online stop agrees with the replay
    cfg.blowup_N = 10.0;
    const PathResult s = Simulator(cfg, c2, noise, Forcing::zero(*b)).run_path(0.3 * u0);
    const auto replay = blowup_monitor(r.ledger, 10.0);
    CHECK(s.ledger.stopped == replay.has_value());
    if (replay) CHECK(s.ledger.stop_time == doctest::Approx(*replay));
  }
}

TEST_CASE("initial data generator") {
  auto b = context()->basis;
  std::mt19937_64 rng(8);
  const State s = initial_state(b, rng, 2.0, 3.0);
  const double h1 = spectral_norm2(s, 0, 0) + spectral_norm2(s, 0, 1) + spectral_norm2(s, 1, 0);
  const double h2 = spectral_norm2(s, 0, 0) + spectral_norm2(s, 1, 0) + spectral_norm2(s, 2, 0);
  CHECK(std::sqrt(h1) == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(std::sqrt(h2) == doctest::Approx(3.0).epsilon(1e-12));
  CHECK_THROWS_AS(initial_state(b, rng, 100.0, 1e-3), RangeError);
}

TEST_CASE("ensembles") {
  auto ctx = context();
  auto b = ctx->basis;
  std::mt19937_64 rng(9);
  const State u0 = random_state(b, rng);
  auto fixed = [&](std::uint64_t, std::mt19937_64&) { return u0; };
  SUBCASE("one path equals its ledger") {
    NoiseParams np;
    np.family = "trig";
    np.K = 2;
    np.chi = 0.3;
    auto noise = std::make_shared<const NoiseModel>(make_noise(ctx, np));
    SimConfig cfg = base_config(1e-3, 5e-3);
    cfg.K = 2;
    const Simulator sim(cfg, ctx, noise, Forcing::zero(*b));
    const EnsembleReport rep = run_ensemble(sim, 1, fixed, 1);
    const PathResult single = sim.run_path(u0, 0);
    REQUIRE(rep.per_sample.size() == single.ledger.rows.size());
    for (size_t i = 0; i < single.ledger.rows.size(); ++i)
      for (size_t c = 0; c < rep.columns.size(); ++c) {
        const double x = single.ledger.rows[i][c];
        if (std::isfinite(x)) CHECK(rep.per_sample[i][c].mean == x);
      }
  }
  SUBCASE("no noise: zero variance; failures are recorded") {
    const Simulator sim(base_config(1e-3, 3e-3), ctx, nullptr, Forcing::zero(*b));
    auto gen = [&](std::uint64_t p, std::mt19937_64&) {
      if (p == 2) throw NumericalError("bad initial data");
      return u0;
    };
    const EnsembleReport rep = run_ensemble(sim, 4, gen, 2);
    CHECK(rep.errors[2] == "bad initial data");
    CHECK(rep.errors[0].empty());
    const int cl = 2;  // l2
    CHECK(rep.final_stats[cl].count == 3);
    CHECK(rep.final_stats[cl].variance == 0.0);
    CHECK(rep.to_json().find("bad initial data") != std::string::npos);
  }
  SUBCASE("statistics helpers") {
    const ColumnStats st = column_stats({4, 1, 3, 2, 5, std::nan("")});
    CHECK(st.count == 5);
    CHECK(st.mean == 3.0);
    CHECK(st.variance == 2.5);
    CHECK(st.q50 == 3.0);
    CHECK(st.q10 == doctest::Approx(1.4));
    KahanSum k;
    k.add(1.0);
    for (int i = 0; i < 1000000; ++i) k.add(1e-16);
    CHECK(k.value() == doctest::Approx(1.0 + 1e-10).epsilon(1e-15));
  }
  SUBCASE("amplitude sweep is reported") {
    SimConfig cfg = base_config(1e-3, 5e-3);
    cfg.K = 2;
    NoiseParams np;
    np.family = "trig";
    np.psi = 0.2;
    np.chi = 0.2;
    const auto pts = noise_amplitude_sweep(cfg, ctx, np, {0.0, 1.0, 2.0}, 3, fixed, Forcing::zero(*b));
    REQUIRE(pts.size() == 3);
    CHECK(pts[0].eta == 0.0);
    for (const auto& p : pts) MESSAGE("scale " << p.scale << " eta " << p.eta << " mean sup L2^2 " << p.mean_sup_l2_sq);
  }
}
