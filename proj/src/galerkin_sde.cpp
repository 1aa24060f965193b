#include "hsgs/galerkin_sde.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <json.hpp>
#include <mutex>
#include <ostream>
#include <thread>

#include "hsgs/error.hpp"

namespace hsgs {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string q_label(double q) {
  if (std::isinf(q)) return "inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", q);
  return buf;
}

// exp(-1/t) for t > 0, the standard smooth step building block.
double psi(double t) { return t > 0 ? std::exp(-1.0 / t) : 0.0; }
double psi_prime(double t) { return t > 0 ? std::exp(-1.0 / t) / (t * t) : 0.0; }

}  // namespace

std::string to_string(CutoffMode m) {
  switch (m) {
    case CutoffMode::Raw: return "raw";
    case CutoffMode::LinfL4: return "cutoff_linf_l4";
    case CutoffMode::H1L4: return "cutoff_h1_l4";
  }
  return "raw";
}

CutoffMode parse_cutoff_mode(const std::string& s) {
  if (s == "raw") return CutoffMode::Raw;
  if (s == "cutoff_linf_l4") return CutoffMode::LinfL4;
  if (s == "cutoff_h1_l4") return CutoffMode::H1L4;
  throw ConfigError("unknown mode '" + s + "' (raw, cutoff_linf_l4, cutoff_h1_l4)");
}

void SimConfig::validate() const {
  if (!(dt > 0) || !std::isfinite(dt)) throw RangeError("dt must be positive");
  if (!(t_end >= 0) || !std::isfinite(t_end)) throw RangeError("t_end must be finite and non-negative");
  if (t_end > 0 && t_end < dt * (1 - 1e-12)) throw RangeError("t_end must be at least dt");
  if (!(rho > 0) || !(mu > 0)) throw RangeError("cut-off scales rho and mu must be positive");
  if (!(blowup_N > 0)) throw RangeError("blow-up threshold N must be positive");
  if (n < 1 || n_z < 1) throw RangeError("n and n_z must be at least 1");
  if (K < 0) throw RangeError("K must be non-negative");
  if (ledger_stride < 1) throw RangeError("ledger stride must be at least 1");
  if (checkpoint_every < 0) throw RangeError("checkpoint cadence must be non-negative");
  for (double q : ledger_q)
    if (!(q >= 1)) throw RangeError("ledger exponents must be >= 1");
}

long SimConfig::n_steps() const {
  const double r = t_end / dt;
  const long k = std::lround(r);
  return std::abs(r - k) <= 1e-9 * std::max(1.0, r) ? k : static_cast<long>(std::ceil(r));
}

double cutoff_theta(double x, double lambda) {
  if (!(lambda > 0)) throw RangeError("cut-off scale must be positive");
  const double r = std::abs(x) / lambda;
  if (r <= 0.5) return 1.0;
  if (r >= 1.0) return 0.0;
  // t runs from 0 at r = 1/2 to 1 at r = 1
  const double t = 2 * (r - 0.5), a = psi(1 - t), b = psi(t);
  return a / (a + b);
}

double cutoff_theta_prime(double x, double lambda) {
  if (!(lambda > 0)) throw RangeError("cut-off scale must be positive");
  const double r = std::abs(x) / lambda;
  if (r <= 0.5 || r >= 1.0) return 0.0;
  const double t = 2 * (r - 0.5), a = psi(1 - t), b = psi(t);
  const double da = -psi_prime(1 - t), db = psi_prime(t);
  const double dtheta_dt = (da * (a + b) - a * (da + db)) / ((a + b) * (a + b));
  return dtheta_dt * 2 / lambda * (x < 0 ? -1.0 : 1.0);
}

double cutoff_theta_prime_bound(double lambda) {
  if (!(lambda > 0)) throw RangeError("cut-off scale must be positive");
  return 4.0 / lambda;
}

double cutoff_state(const NormEngine& ne, const State& s, const SimConfig& cfg) {
  switch (cfg.mode) {
    case CutoffMode::Raw: return 1.0;
    case CutoffMode::LinfL4: return cutoff_theta(ne.linf_l4(s), cfg.rho);
    case CutoffMode::H1L4: return cutoff_theta(ne.h1z_l4(s), cfg.mu);
  }
  return 1.0;
}

State initial_state(BasisPtr b, std::mt19937_64& rng, double h1_norm, double h2z_norm, double decay) {
  if (!(h1_norm >= 0) || !(h2z_norm >= 0)) throw RangeError("initial norms must be non-negative");
  const State r = random_state(b, rng, decay);
  const State P = vertical_average(r), Q = baroclinic_remainder(r);
  // ||aP + bQ||^2_{H1} = a^2 H1(P) + b^2 H1(Q); ||.||^2_{H2_z L2} = a^2 L2(P) + b^2 H2zL2(Q)
  const double p1 = spectral_norm2(P, 0, 0) + spectral_norm2(P, 0, 1);
  const double p2 = spectral_norm2(P, 0, 0);
  const double q1 = spectral_norm2(Q, 0, 0) + spectral_norm2(Q, 0, 1) + spectral_norm2(Q, 1, 0);
  const double q2 = spectral_norm2(Q, 0, 0) + spectral_norm2(Q, 1, 0) + spectral_norm2(Q, 2, 0);
  const double H1 = h1_norm * h1_norm, H2 = h2z_norm * h2z_norm;
  const double det = p1 * q2 - p2 * q1;
  if (std::abs(det) <= 1e-14 * p1 * q2) throw RangeError("initial_state: degenerate sample");
  const double a2 = (H1 * q2 - H2 * q1) / det, b2 = (p1 * H2 - p2 * H1) / det;
  if (a2 < 0 || b2 < 0)
    throw RangeError("initial_state: H1 and H2_z L2 targets are incompatible for this basis");
  return std::sqrt(a2) * P + std::sqrt(b2) * Q;
}

// ---- ledger ----

int EnergyLedger::column(const std::string& name) const {
  const auto it = std::find(columns.begin(), columns.end(), name);
  if (it == columns.end()) throw ConfigError("ledger has no column '" + name + "'");
  return static_cast<int>(it - columns.begin());
}

std::vector<double> EnergyLedger::series(const std::string& name) const {
  const int c = column(name);
  std::vector<double> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back(r[c]);
  return out;
}

void EnergyLedger::write_csv(std::ostream& os, const std::string& manifest_hash) const {
  os << "# manifest " << manifest_hash << '\n';
  for (size_t i = 0; i < columns.size(); ++i) os << (i ? "," : "") << columns[i];
  os << '\n';
  char buf[40];
  for (const auto& r : rows) {
    for (size_t i = 0; i < r.size(); ++i) {
      std::snprintf(buf, sizeof buf, "%.17g", r[i]);
      os << (i ? "," : "") << buf;
    }
    os << '\n';
  }
}

std::vector<std::string> ledger_columns(const SimConfig& cfg) {
  std::vector<std::string> c = {"step", "t", "l2", "grad_h", "dz", "dzz", "h1", "linf_l4", "h1z_l4"};
  for (double q : cfg.ledger_q) c.push_back("v_L" + q_label(q));
  for (const char* s : {"vbar_h1", "vtilde_l4", "grad_ps", "int_AH_sq", "int_H1zH1xy_sq", "int_vLinf_sq",
                        "sup_h1_sq", "blowup_functional", "theta", "div_vbar", "stopped", "stop_time"})
    c.push_back(s);
  return c;
}

std::optional<double> blowup_monitor(const EnergyLedger& ledger, double N) {
  if (ledger.rows.empty() || std::isinf(N)) return std::nullopt;  // N = inf is the never-fire sentinel
  const int cf = ledger.column("blowup_functional"), ct = ledger.column("t");
  for (const auto& r : ledger.rows)
    if (!(r[cf] < N)) return r[ct];  // NaN and +inf count as reached
  return std::nullopt;
}

// ---- simulator ----

struct Simulator::Running {
  double int_ah = 0, int_h1h1 = 0, int_vinf = 0, sup_h1 = 0;
  bool stopped = false;
  double stop_time = kNaN;
  double functional() const { return sup_h1 + int_ah + int_h1h1; }
};

Simulator::Simulator(SimConfig cfg, ContextPtr ctx, std::shared_ptr<const NoiseModel> noise, Forcing forcing)
    : cfg_(std::move(cfg)), ctx_(std::move(ctx)), noise_(std::move(noise)), forcing_(std::move(forcing)),
      ne_(ctx_->basis) {
  cfg_.validate();
  const TensorBasis& b = *ctx_->basis;
  if (cfg_.K > 0 && (!noise_ || noise_->K() != cfg_.K)) throw ConfigError("noise model does not have K modes");
  if (noise_ && noise_->K() != cfg_.K) throw ConfigError("noise model does not have K modes");
  if (noise_ && &noise_->basis() != &b) throw ConfigError("noise model lives on a different basis");
  if (forcing_.fv.rows() != b.n || forcing_.fv.cols() != b.n_z + 1 || forcing_.fT.rows() != b.n ||
      forcing_.fT.cols() != b.n_z)
    throw ConfigError("forcing shape does not match the basis");
  damp_T_.resize(b.n);
  for (int m = 0; m < b.n; ++m) damp_T_[m] = ctx_->phys.nu_T * b.temp_eig(m);
}

StepResult Simulator::step(const State& s, const Vec& dW, double dt) const {
  if (dW.size() != cfg_.K) throw ConfigError("step: increments must have length K");
  if (!(dt > 0)) throw RangeError("step: dt must be positive");
  const TensorBasis& b = *ctx_->basis;
  StepResult out;
  State rhs = s;
  try {
    out.theta = cutoff_state(ne_, s, cfg_);
    if (cfg_.advection && out.theta != 0) rhs -= (dt * out.theta) * nonlinear_B(*ctx_, s, s);
    rhs -= dt * assemble_F(*ctx_, s, forcing_);
    if (cfg_.K > 0) rhs += sigma_increment(*noise_, s, dW);
  } catch (const NumericalError&) {
    // overflowing data makes the projection solves fail: same outcome as a non-finite state
    out.blowup = true;
    out.state = s;
    out.state.v.setConstant(kNaN);
    out.state.T.setConstant(kNaN);
    out.state.time = s.time + dt;
    return out;
  }
  const double nv = ctx_->phys.nu_v;
  for (int m = 0; m < b.n; ++m) {
    for (int k = 0; k <= b.n_z; ++k) rhs.v(m, k) /= 1 + dt * nv * b.vel_eig(m, k);
    rhs.T.row(m) /= 1 + dt * damp_T_[m];
  }
  rhs.time = s.time + dt;
  out.blowup = !rhs.finite();
  out.state = std::move(rhs);
  return out;
}

DzState Simulator::step_dz(const State& s, const Vec& dW, double dt) const {
  if (dW.size() != cfg_.K) throw ConfigError("step_dz: increments must have length K");
  const TensorBasis& b = *ctx_->basis;
  const OperatorContext& c = *ctx_;
  const double theta = cutoff_state(ne_, s, cfg_);
  DzState d = dz_coefficients(s);
  if (cfg_.advection && theta != 0) {
    const DzState nb = nonlinear_B_dz(c, s, s);
    d.v -= dt * theta * nb.v;
    d.T -= dt * theta * nb.T;
  }
  // d_z F: Coriolis acts on the Dirichlet x s_k shadow, d_z of -beta_T g int_z^0 grad T is +beta_T g grad T,
  // and the forcing is differentiated like a state.
  const DzState ds = dz_coefficients(s);
  const double bg = c.phys.beta_T * c.phys.g;
  d.v -= dt * (c.phys.k0 * (c.rot_dirichlet * ds.v) + bg * (c.grad_coupling * s.T));
  State fs = State::zero(ctx_->basis);
  fs.v = forcing_.fv;
  fs.T = forcing_.fT;
  const DzState df = dz_coefficients(fs);
  d.v += dt * df.v;
  d.T += dt * df.T;
  if (cfg_.K > 0) {
    const DzState dn = sigma_increment_dz(*noise_, s, dW);
    d.v += dn.v;
    d.T += dn.T;
  }
  // velocity shadow: Dirichlet eigenvalues; temperature shadow: Neumann eigenvalues
  for (int m = 0; m < b.n; ++m) {
    d.v.row(m) /= 1 + dt * c.phys.nu_v * b.dirichlet.eigenvalues[m];
    d.T.row(m) /= 1 + dt * damp_T_[m];
  }
  return d;
}

void Simulator::sample(const State& s, long step, const Running& run, double theta, EnergyLedger& led) const {
  const TensorBasis& b = *ctx_->basis;
  const DiscreteGrid& g = *b.grid;
  std::vector<double> r;
  r.reserve(led.columns.size());
  r.push_back(static_cast<double>(step));
  r.push_back(static_cast<double>(step) * cfg_.dt);
  const bool ok = s.finite();
  auto val = [&](auto f) {
    if (!ok) return kNaN;
    try {
      return f();
    } catch (const NumericalError&) {
      return kNaN;
    }
  };
  r.push_back(val([&] { return ne_.l2(s); }));
  r.push_back(val([&] { return ne_.norm(s, {2, 2, 0, 1}); }));
  r.push_back(val([&] { return ne_.norm(s, {2, 2, 1, 0}); }));
  r.push_back(val([&] { return ne_.norm(s, {2, 2, 2, 0}); }));
  r.push_back(val([&] { return ne_.h1(s); }));
  r.push_back(val([&] { return ne_.linf_l4(s); }));
  r.push_back(val([&] { return ne_.h1z_l4(s); }));
  for (double q : cfg_.ledger_q) r.push_back(val([&] { return ne_.norm(s, {q, q, 0, 0}, Part::Velocity); }));
  r.push_back(val([&] { return ne_.h1(s, Part::Barotropic); }));
  r.push_back(val([&] { return ne_.norm(s, {4, 4, 0, 0}, Part::Baroclinic); }));
  r.push_back(val([&] {
    const Vec ps = recover_surface_pressure(*ctx_, s);
    Vec gx, gy;
    g.grad_neumann(ps, gx, gy);
    return std::sqrt(g.dot(Stagger::XFace, gx, gx) + g.dot(Stagger::YFace, gy, gy));
  }));
  r.push_back(run.int_ah);
  r.push_back(run.int_h1h1);
  r.push_back(run.int_vinf);
  r.push_back(run.sup_h1);
  r.push_back(run.functional());
  r.push_back(theta);
  r.push_back(val([&] { return horizontal_divergence(g, barotropic_field(s), 0).cwiseAbs().maxCoeff(); }));
  r.push_back(run.stopped ? 1.0 : 0.0);
  r.push_back(run.stop_time);
  led.rows.push_back(std::move(r));
}

PathResult Simulator::run_path(const State& initial, std::uint64_t path, const PathIO& io) const {
  if (initial.basis != ctx_->basis) throw ConfigError("initial state lives on a different basis");
  PathResult res;
  res.ledger.columns = ledger_columns(cfg_);
  std::mt19937_64 rng = path_rng(cfg_.seed, path);
  const long n_steps = cfg_.n_steps();
  const double dt = cfg_.dt;

  if (!io.checkpoint_dir.empty() && cfg_.checkpoint_every > 0) std::filesystem::create_directories(io.checkpoint_dir);
  auto checkpoint = [&](const State& s, long k) {
    if (io.checkpoint_dir.empty() || cfg_.checkpoint_every <= 0) return;
    char name[64];
    std::snprintf(name, sizeof name, "_%08ld.ckpt", k);
    const std::string p = (std::filesystem::path(io.checkpoint_dir) / (io.prefix + name)).string();
    write_checkpoint(p, s, io.config_hash);
    res.checkpoints.push_back(p);
  };

  Running run;
  State s = initial;
  s.time = 0.0;
  double theta = cutoff_state(ne_, s, cfg_);
  // Left-endpoint integrands of the current state.
  auto integrands = [&](const State& u, double& ah, double& h1h1, double& vinf, double& h1) {
    ah = spectral_norm2(u, 0, 2);
    h1h1 = spectral_norm2(u, 0, 0) + spectral_norm2(u, 0, 1) + spectral_norm2(u, 1, 0) + spectral_norm2(u, 1, 1);
    h1 = spectral_norm2(u, 0, 0) + spectral_norm2(u, 0, 1) + spectral_norm2(u, 1, 0);
    const double vi = ne_.norm(u, {kInf, kInf, 0, 0}, Part::Velocity);
    vinf = vi * vi;
  };
  double ah, h1h1, vinf, h1;
  integrands(s, ah, h1h1, vinf, h1);
  run.sup_h1 = h1;
  if (!std::isinf(cfg_.blowup_N) && !(run.functional() < cfg_.blowup_N)) {
    run.stopped = true;
    run.stop_time = 0.0;
    res.ledger.stop_reason = "blow-up functional reached N";
  }
  sample(s, 0, run, theta, res.ledger);
  checkpoint(s, 0);

  long k = 0;
  while (!run.stopped && k < n_steps) {
    const Vec dW = wiener_increments(rng, cfg_.K, dt);
    StepResult st = step(s, dW, dt);
    ++k;
    st.state.time = static_cast<double>(k) * dt;
    run.int_ah += dt * ah;
    run.int_h1h1 += dt * h1h1;
    run.int_vinf += dt * vinf;
    if (st.blowup) {
      run.stopped = true;
      run.stop_time = st.state.time;
      run.sup_h1 = std::numeric_limits<double>::infinity();
      res.ledger.stop_reason = "non-finite state";
      s = std::move(st.state);
      sample(s, k, run, st.theta, res.ledger);
      break;
    }
    s = std::move(st.state);
    integrands(s, ah, h1h1, vinf, h1);
    run.sup_h1 = std::max(run.sup_h1, h1);
    if (!std::isinf(cfg_.blowup_N) && !(run.functional() < cfg_.blowup_N)) {
      run.stopped = true;
      run.stop_time = s.time;
      res.ledger.stop_reason = "blow-up functional reached N";
    }
    theta = cfg_.mode == CutoffMode::Raw ? 1.0 : cutoff_state(ne_, s, cfg_);
    if (run.stopped || k % cfg_.ledger_stride == 0 || k == n_steps) sample(s, k, run, theta, res.ledger);
    if (cfg_.checkpoint_every > 0 && (k % cfg_.checkpoint_every == 0 || k == n_steps || run.stopped)) checkpoint(s, k);
  }
  res.ledger.stopped = run.stopped;
  res.ledger.stop_time = run.stop_time;
  res.final_state = std::move(s);
  res.steps = k;
  return res;
}

// ---- ensembles ----

void KahanSum::add(double x) {
  const double y = x - comp_;
  const double t = sum_ + y;
  comp_ = (t - sum_) - y;
  sum_ = t;
}

ColumnStats column_stats(std::vector<double> values) {
  ColumnStats st;
  std::vector<double> fin;
  for (double v : values)
    if (std::isfinite(v)) fin.push_back(v);
  st.count = static_cast<int>(fin.size());
  if (fin.empty()) {
    st.mean = st.variance = st.q10 = st.q50 = st.q90 = kNaN;
    return st;
  }
  // shifted by the first value: identical samples give an exact mean and zero variance
  const double v0 = fin[0];
  KahanSum s;
  for (double v : fin) s.add(v - v0);
  const double dmean = s.value() / fin.size();
  st.mean = v0 + dmean;
  KahanSum s2;
  for (double v : fin) s2.add((v - v0 - dmean) * (v - v0 - dmean));
  st.variance = fin.size() > 1 ? s2.value() / (fin.size() - 1) : 0.0;
  std::sort(fin.begin(), fin.end());
  auto quant = [&](double p) {
    const double pos = p * (fin.size() - 1);
    const size_t i = static_cast<size_t>(std::floor(pos));
    const double f = pos - i;
    return i + 1 < fin.size() ? fin[i] * (1 - f) + fin[i + 1] * f : fin[i];
  };
  st.q10 = quant(0.1);
  st.q50 = quant(0.5);
  st.q90 = quant(0.9);
  return st;
}

std::mt19937_64 initial_rng(std::uint64_t seed, std::uint64_t path) {
  return path_rng(seed ^ 0x9e3779b97f4a7c15ULL, path);
}

EnsembleReport run_ensemble(const Simulator& sim, int n_paths, const InitialGenerator& initial, int threads) {
  if (n_paths < 1) throw RangeError("ensemble needs at least one path");
  EnsembleReport rep;
  rep.columns = ledger_columns(sim.config());
  rep.paths.resize(n_paths);
  rep.errors.assign(n_paths, "");
  if (threads <= 0) threads = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  threads = std::min(threads, n_paths);
  std::atomic<int> next{0};
  auto worker = [&] {
    for (int p = next++; p < n_paths; p = next++) {
      try {
        std::mt19937_64 irng = initial_rng(sim.config().seed, p);
        rep.paths[p] = sim.run_path(initial(p, irng), p);
      } catch (const std::exception& e) {
        rep.errors[p] = e.what();
      }
    }
  };
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  const int nc = static_cast<int>(rep.columns.size());
  size_t max_rows = 0;
  for (int p = 0; p < n_paths; ++p)
    if (rep.errors[p].empty()) max_rows = std::max(max_rows, rep.paths[p].ledger.rows.size());
  rep.per_sample.resize(max_rows);
  for (size_t i = 0; i < max_rows; ++i) {
    rep.per_sample[i].resize(nc);
    for (int c = 0; c < nc; ++c) {
      std::vector<double> vals;
      for (int p = 0; p < n_paths; ++p)
        if (rep.errors[p].empty() && i < rep.paths[p].ledger.rows.size()) vals.push_back(rep.paths[p].ledger.rows[i][c]);
      rep.per_sample[i][c] = column_stats(std::move(vals));
    }
  }
  rep.final_stats.resize(nc);
  std::vector<double> sup_l2;
  for (int c = 0; c < nc; ++c) {
    std::vector<double> vals;
    for (int p = 0; p < n_paths; ++p)
      if (rep.errors[p].empty() && !rep.paths[p].ledger.rows.empty()) vals.push_back(rep.paths[p].ledger.rows.back()[c]);
    rep.final_stats[c] = column_stats(std::move(vals));
  }
  const int cl = rep.paths.empty() ? 0 : static_cast<int>(std::find(rep.columns.begin(), rep.columns.end(), "l2") - rep.columns.begin());
  for (int p = 0; p < n_paths; ++p) {
    if (!rep.errors[p].empty()) continue;
    double m = 0;
    for (const auto& r : rep.paths[p].ledger.rows)
      if (std::isfinite(r[cl])) m = std::max(m, r[cl] * r[cl]);
    sup_l2.push_back(m);
    if (rep.paths[p].ledger.stopped) ++rep.stopped;
  }
  rep.sup_l2_sq = column_stats(std::move(sup_l2));
  return rep;
}

std::string EnsembleReport::to_json() const {
  using json = nlohmann::json;
  auto stats = [](const ColumnStats& s) {
    auto num = [](double x) { return std::isfinite(x) ? json(x) : json(nullptr); };
    return json{{"mean", num(s.mean)}, {"variance", num(s.variance)}, {"q10", num(s.q10)},
                {"q50", num(s.q50)},   {"q90", num(s.q90)},           {"count", s.count}};
  };
  json j;
  j["paths"] = static_cast<int>(paths.size());
  j["stopped"] = stopped;
  json errs = json::array();
  for (size_t p = 0; p < errors.size(); ++p)
    if (!errors[p].empty()) errs.push_back({{"path", p}, {"error", errors[p]}});
  j["errors"] = errs;
  json fin = json::object();
  for (size_t c = 0; c < columns.size() && c < final_stats.size(); ++c) fin[columns[c]] = stats(final_stats[c]);
  j["final"] = fin;
  j["sup_l2_sq"] = stats(sup_l2_sq);
  return j.dump(2);
}

std::vector<SweepPoint> noise_amplitude_sweep(const SimConfig& cfg, ContextPtr ctx, const NoiseParams& base,
                                              const std::vector<double>& scales, int n_paths,
                                              const InitialGenerator& initial, const Forcing& forcing) {
  std::vector<SweepPoint> out;
  for (double a : scales) {
    NoiseParams p = base;
    for (double* x : {&p.psi, &p.phi, &p.psiT, &p.zeta, &p.nu, &p.chi, &p.gamma, &p.theta, &p.zeta_hat, &p.nu_hat,
                      &p.chi_hat})
      *x *= a;
    p.K = cfg.K;
    auto model = std::make_shared<const NoiseModel>(make_noise(ctx, p));
    const Simulator sim(cfg, ctx, model, forcing);
    const EnsembleReport rep = run_ensemble(sim, n_paths, initial, 1);
    out.push_back({a, model->eta(), rep.sup_l2_sq.mean, rep.stopped});
  }
  return out;
}

}  // namespace hsgs
