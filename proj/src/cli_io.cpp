#include "hsgs/cli_io.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <chrono>
#include <cinttypes>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <json.hpp>
#include <sstream>

#include "hsgs/binio.hpp"
#include "hsgs/error.hpp"

namespace hsgs {

using json = nlohmann::json;
namespace fs = std::filesystem;

std::string fmt17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

double to_double(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  double x = 0;
  try {
    x = std::stod(v, &used);
  } catch (const std::exception&) {
    throw ConfigError(key + ": not a number: '" + v + "'");
  }
  if (used != v.size()) throw ConfigError(key + ": not a number: '" + v + "'");
  return x;
}

long long to_int(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  long long x = 0;
  try {
    x = std::stoll(v, &used);
  } catch (const std::exception&) {
    throw ConfigError(key + ": not an integer: '" + v + "'");
  }
  if (used != v.size()) throw ConfigError(key + ": not an integer: '" + v + "'");
  return x;
}

std::uint64_t to_u64(const std::string& key, const std::string& v) {
  if (v.empty() || v[0] == '-') throw ConfigError(key + ": not an unsigned integer: '" + v + "'");
  std::size_t used = 0;
  std::uint64_t x = 0;
  try {
    x = std::stoull(v, &used);
  } catch (const std::exception&) {
    throw ConfigError(key + ": not an unsigned integer: '" + v + "'");
  }
  if (used != v.size()) throw ConfigError(key + ": not an unsigned integer: '" + v + "'");
  return x;
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError(key + ": not a boolean: '" + v + "'");
}

std::vector<double> to_list(const std::string& key, const std::string& v) {
  std::vector<double> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(to_double(key, trim(item)));
  if (out.empty()) throw ConfigError(key + ": empty list");
  return out;
}

std::string list_str(const std::vector<double>& xs) {
  std::string s;
  for (std::size_t i = 0; i < xs.size(); ++i) s += (i ? "," : "") + fmt17(xs[i]);
  return s;
}

using Setter = std::function<void(RunSpec&, const std::string& key, const std::string& value)>;
using Getter = std::function<std::string(const RunSpec&)>;

struct KeyDef {
  std::string key;  // section.name
  Setter set;
  Getter get;  // null: not part of the snapshot (does not affect results)
};

#define HSGS_DOUBLE(k, field)                                                                  \
  KeyDef {                                                                                     \
    k, [](RunSpec& r, const std::string& n, const std::string& v) { r.field = to_double(n, v); }, \
        [](const RunSpec& r) { return fmt17(r.field); }                                        \
  }
#define HSGS_INT(k, field)                                                                                    \
  KeyDef {                                                                                                    \
    k, [](RunSpec& r, const std::string& n, const std::string& v) { r.field = static_cast<int>(to_int(n, v)); }, \
        [](const RunSpec& r) { return std::to_string(r.field); }                                              \
  }
#define HSGS_STRING(k, field)                                                                \
  KeyDef {                                                                                   \
    k, [](RunSpec& r, const std::string&, const std::string& v) { r.field = v; },            \
        [](const RunSpec& r) { return r.field; }                                             \
  }

const std::vector<KeyDef>& key_table() {
  static const std::vector<KeyDef> table = {
      HSGS_DOUBLE("domain.Lx", sim.domain.Lx),
      HSGS_DOUBLE("domain.Ly", sim.domain.Ly),
      HSGS_DOUBLE("domain.h", sim.domain.h),
      HSGS_INT("domain.Nx", sim.domain.Nx),
      HSGS_INT("domain.Ny", sim.domain.Ny),
      HSGS_INT("domain.Nz", sim.domain.Nz),
      HSGS_INT("basis.n", sim.n),
      HSGS_INT("basis.n_z", sim.n_z),
      HSGS_DOUBLE("basis.dealias", sim.dealias),
      KeyDef{"basis.cache_dir", [](RunSpec& r, const std::string&, const std::string& v) { r.cache_dir = v; },
             nullptr},
      HSGS_DOUBLE("physics.nu_v", sim.phys.nu_v),
      HSGS_DOUBLE("physics.nu_T", sim.phys.nu_T),
      HSGS_DOUBLE("physics.k0", sim.phys.k0),
      HSGS_DOUBLE("physics.rho0", sim.phys.rho0),
      HSGS_DOUBLE("physics.beta_T", sim.phys.beta_T),
      HSGS_DOUBLE("physics.g", sim.phys.g),
      HSGS_DOUBLE("physics.T_r", sim.phys.T_r),
      HSGS_DOUBLE("time.dt", sim.dt),
      HSGS_DOUBLE("time.t_end", sim.t_end),
      KeyDef{"time.mode",
             [](RunSpec& r, const std::string&, const std::string& v) { r.sim.mode = parse_cutoff_mode(v); },
             [](const RunSpec& r) { return to_string(r.sim.mode); }},
      HSGS_DOUBLE("time.rho", sim.rho),
      HSGS_DOUBLE("time.mu", sim.mu),
      HSGS_DOUBLE("time.blowup_N", sim.blowup_N),
      KeyDef{"time.seed", [](RunSpec& r, const std::string& n, const std::string& v) { r.sim.seed = to_u64(n, v); },
             [](const RunSpec& r) { return std::to_string(r.sim.seed); }},
      KeyDef{"time.ledger_q",
             [](RunSpec& r, const std::string& n, const std::string& v) { r.sim.ledger_q = to_list(n, v); },
             [](const RunSpec& r) { return list_str(r.sim.ledger_q); }},
      HSGS_INT("time.ledger_stride", sim.ledger_stride),
      HSGS_INT("time.checkpoint_every", sim.checkpoint_every),
      KeyDef{"time.advection",
             [](RunSpec& r, const std::string& n, const std::string& v) { r.sim.advection = to_bool(n, v); },
             [](const RunSpec& r) { return std::string(r.sim.advection ? "true" : "false"); }},
      HSGS_STRING("noise.family", noise.family),
      HSGS_INT("noise.K", noise.K),
      HSGS_DOUBLE("noise.decay", noise.decay),
      HSGS_DOUBLE("noise.psi", noise.psi),
      HSGS_DOUBLE("noise.phi", noise.phi),
      HSGS_DOUBLE("noise.phi_var", noise.phi_var),
      HSGS_DOUBLE("noise.psiT", noise.psiT),
      HSGS_DOUBLE("noise.zeta", noise.zeta),
      HSGS_DOUBLE("noise.nu", noise.nu),
      HSGS_DOUBLE("noise.chi", noise.chi),
      HSGS_DOUBLE("noise.gamma", noise.gamma),
      HSGS_DOUBLE("noise.theta", noise.theta),
      HSGS_DOUBLE("noise.zeta_hat", noise.zeta_hat),
      HSGS_DOUBLE("noise.nu_hat", noise.nu_hat),
      HSGS_DOUBLE("noise.chi_hat", noise.chi_hat),
      HSGS_STRING("forcing.type", forcing.type),
      HSGS_DOUBLE("forcing.amplitude", forcing.amplitude),
      KeyDef{"forcing.seed",
             [](RunSpec& r, const std::string& n, const std::string& v) { r.forcing.seed = to_u64(n, v); },
             [](const RunSpec& r) { return std::to_string(r.forcing.seed); }},
      HSGS_STRING("initial.type", initial.type),
      HSGS_DOUBLE("initial.h1", initial.h1),
      HSGS_DOUBLE("initial.h2z", initial.h2z),
      HSGS_DOUBLE("initial.decay", initial.decay),
      HSGS_STRING("initial.path", initial.path),
      KeyDef{"output.dir", [](RunSpec& r, const std::string&, const std::string& v) { r.out_dir = v; }, nullptr},
      HSGS_DOUBLE("checks.moment_q", moment_q),
      HSGS_DOUBLE("checks.c_bdg", c_bdg),
  };
  return table;
}

#undef HSGS_DOUBLE
#undef HSGS_INT
#undef HSGS_STRING

const KeyDef& find_key(const std::string& key) {
  for (const auto& k : key_table())
    if (k.key == key) return k;
  throw ConfigError("unknown configuration key '" + key + "'");
}

void validate_spec(RunSpec& r) {
  r.sim.domain.validate();
  if (!(r.sim.phys.nu_v > 0) || !(r.sim.phys.nu_T > 0)) throw ConfigError("physics: nu_v and nu_T must be positive");
  if (r.sim.phys.k0 < 0) throw ConfigError("physics: k0 must be non-negative");
  if (!(r.sim.dt > 0)) throw RangeError("time.dt must be positive, got " + fmt17(r.sim.dt));
  if (r.sim.n < 1 || r.sim.n_z < 1) throw ConfigError("basis: n and n_z must be at least 1");
  r.noise.validate();
  r.sim.K = r.noise.family == "none" ? 0 : r.noise.K;
  r.sim.validate();
  if (r.forcing.type != "none" && r.forcing.type != "random")
    throw ConfigError("forcing.type must be none or random, got '" + r.forcing.type + "'");
  if (r.initial.type != "zero" && r.initial.type != "random" && r.initial.type != "checkpoint")
    throw ConfigError("initial.type must be zero, random or checkpoint, got '" + r.initial.type + "'");
  if (r.initial.type == "checkpoint" && r.initial.path.empty())
    throw ConfigError("initial.path is required for initial.type = checkpoint");
  if (!(r.moment_q >= 2)) throw RangeError("checks.moment_q must be at least 2");
  if (!(r.c_bdg > 0)) throw RangeError("checks.c_bdg must be positive");
}

std::uint64_t parse_hex(const std::string& h) { return h.empty() ? 0 : std::stoull(h, nullptr, 16); }

std::string hex16(std::uint64_t x) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016" PRIx64, x);
  return buf;
}

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream os(p, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + p.string());
  os << text;
  if (!os) throw std::runtime_error("write failed: " + p.string());
}

std::string read_text(const std::string& p) {
  std::ifstream is(p, std::ios::binary);
  if (!is) throw ConfigError("cannot read " + p);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

void write_ledger(const fs::path& p, const EnergyLedger& led, const std::string& hash) {
  std::ofstream os(p, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + p.string());
  led.write_csv(os, hash);
  if (!os) throw std::runtime_error("write failed: " + p.string());
}

RunManifest base_manifest(const RunSpec& spec, const Setup& setup) {
  RunManifest m;
  m.snapshot = spec.snapshot();
  m.basis_key = setup.basis->cache_key();
  m.seeds = {spec.sim.seed, spec.forcing.seed};
  return m;
}

void print_warnings(const RunSpec& spec, std::ostream& log) {
  for (const auto& w : spec.warnings) log << "warning: " << w << "\n";
}

}  // namespace

std::string RunSpec::snapshot() const {
  std::string out, section;
  for (const auto& k : key_table()) {
    if (!k.get) continue;
    const auto dot = k.key.find('.');
    const auto sec = k.key.substr(0, dot);
    if (sec != section) {
      out += (section.empty() ? "" : "\n") + std::string("[") + sec + "]\n";
      section = sec;
    }
    out += k.key.substr(dot + 1) + " = " + k.get(*this) + "\n";
  }
  return out;
}

RunSpec parse_config_text(const std::string& ini, const std::vector<std::string>& overrides) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  try {
    std::istringstream is(ini);
    pt::ini_parser::read_ini(is, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  RunSpec r;
  for (const auto& [section, body] : tree) {
    if (body.empty() && !body.data().empty()) throw ConfigError("config: key '" + section + "' outside a section");
    for (const auto& [name, value] : body) {
      const std::string key = section + "." + name;
      find_key(key).set(r, key, trim(value.data()));
    }
  }
  for (const auto& o : overrides) {
    const auto eq = o.find('=');
    if (eq == std::string::npos) throw ConfigError("override '" + o + "' is not section.key=value");
    const auto key = trim(o.substr(0, eq));
    find_key(key).set(r, key, trim(o.substr(eq + 1)));
  }
  if (r.cache_dir.empty())
    if (const char* env = std::getenv("HSGS_CACHE_DIR")) r.cache_dir = env;
  validate_spec(r);
  return r;
}

RunSpec parse_config(const std::string& path, const std::vector<std::string>& overrides) {
  return parse_config_text(read_text(path), overrides);
}

Setup build_setup(const RunSpec& spec) {
  Setup s;
  const std::optional<std::string> cache =
      spec.cache_dir.empty() ? std::nullopt : std::optional<std::string>(spec.cache_dir);
  s.basis = build_basis(spec.sim.domain, spec.sim.n, spec.sim.n_z, spec.sim.dealias, cache);
  s.ctx = OperatorContext::make(s.basis, spec.sim.phys, spec.sim.dealias);
  if (spec.sim.K > 0) s.noise = std::make_shared<const NoiseModel>(make_noise(s.ctx, spec.noise));
  s.forcing = Forcing::zero(*s.basis);
  if (spec.forcing.type == "random" && spec.forcing.amplitude != 0) {
    std::mt19937_64 rng(spec.forcing.seed);
    const State f = random_state(s.basis, rng, 1.5);
    const double scale = spec.forcing.amplitude / f.norm();
    s.forcing.fv = scale * f.v;
    s.forcing.fT = scale * f.T;
  }
  return s;
}

void check_preconditions(RunSpec& spec, const NoiseModel* noise) {
  const double eta = noise ? noise->eta_report().eta_growth : 0.0;
  const double q = spec.moment_q, c = spec.c_bdg;
  const double bound = eta * eta * ((q - 1) / 2 + q * c * c);
  auto check = [&](const char* name, double nu) {
    if (nu <= bound)
      spec.warnings.push_back(std::string(name) + " = " + fmt17(nu) + " does not exceed eta^2((q-1)/2 + q c_B^2) = " +
                              fmt17(bound) + " (eta = " + fmt17(eta) + ", q = " + fmt17(q) + ", c_B = " + fmt17(c) +
                              "); the noise may be too large for the energy estimates");
  };
  check("nu_v", spec.sim.phys.nu_v);
  check("nu_T", spec.sim.phys.nu_T);
  if (noise && spec.noise.phi_var != 0)
    spec.warnings.push_back("noise.phi_var != 0: z-dependent Phi breaks the d_z growth conditions");
  if (noise && spec.noise.theta != 0)
    spec.warnings.push_back("noise.theta != 0: Theta breaks the d_z growth conditions");
}

State make_initial(const RunSpec& spec, const Setup& setup, std::uint64_t, std::mt19937_64& rng) {
  if (spec.initial.type == "zero") return State::zero(setup.basis);
  if (spec.initial.type == "checkpoint") return read_checkpoint(spec.initial.path, setup.basis);
  return initial_state(setup.basis, rng, spec.initial.h1, spec.initial.h2z, spec.initial.decay);
}

std::string RunManifest::hash() const {
  binio::Fnv1a h;
  h.str(snapshot);
  h.str(version);
  h.u64(basis_key);
  h.u64(seeds.size());
  for (auto s : seeds) h.u64(s);
  return hex16(h.value());
}

std::string RunManifest::to_json() const {
  json j;
  j["version"] = version;
  j["hash"] = hash();
  j["snapshot"] = snapshot;
  j["basis_key"] = hex16(basis_key);
  j["seeds"] = seeds;
  j["outputs"] = outputs;
  j["wall_seconds"] = wall_seconds;
  j["steps"] = steps;
  return j.dump(2) + "\n";
}

RunManifest RunManifest::from_json(const std::string& text) {
  RunManifest m;
  try {
    const json j = json::parse(text);
    m.version = j.at("version").get<std::string>();
    m.snapshot = j.at("snapshot").get<std::string>();
    m.basis_key = parse_hex(j.at("basis_key").get<std::string>());
    m.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
    m.outputs = j.value("outputs", std::map<std::string, std::string>{});
    m.wall_seconds = j.value("wall_seconds", 0.0);
    m.steps = j.value("steps", std::vector<long>{});
    if (j.contains("hash") && j["hash"].get<std::string>() != m.hash())
      throw ConfigError("manifest: recorded hash does not match its contents");
  } catch (const json::exception& e) {
    throw ConfigError(std::string("manifest: ") + e.what());
  }
  return m;
}

// ---- commands ----

int cmd_basis(const RunSpec& spec, std::ostream& log) {
  // Without a configured cache the basis file goes to the output directory.
  RunSpec local = spec;
  if (local.cache_dir.empty()) local.cache_dir = spec.out_dir;
  fs::create_directories(local.cache_dir);
  const auto t0 = std::chrono::steady_clock::now();
  const Setup setup = build_setup(local);
  const auto& b = *setup.basis;
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const std::string path = basis_cache_path(local.cache_dir, spec.sim.domain, spec.sim.n, spec.sim.n_z);
  if (!fs::exists(path)) throw std::runtime_error("basis cache file was not written: " + path);
  log << "basis key " << hex16(b.cache_key()) << " n " << b.n << " n_z " << b.n_z << " (" << fmt17(secs) << " s)\n";
  log << "cache " << path << "\n";
  log << "family,m,eigenvalue,residual\n";
  for (const auto* f : {&b.stokes, &b.dirichlet, &b.neumann}) {
    const char* name = f == &b.stokes ? "stokes" : f == &b.dirichlet ? "dirichlet" : "neumann";
    for (int m = 0; m < b.n; ++m)
      log << name << "," << m + 1 << "," << fmt17(f->eigenvalues[m]) << ","
          << (m < f->residuals.size() ? fmt17(f->residuals[m]) : std::string("nan")) << "\n";
  }
  return kExitOk;
}

int cmd_run(RunSpec spec, std::ostream& log) {
  const auto t0 = std::chrono::steady_clock::now();
  const Setup setup = build_setup(spec);
  check_preconditions(spec, setup.noise.get());
  print_warnings(spec, log);

  RunManifest man = base_manifest(spec, setup);
  const std::string hash = man.hash();
  const fs::path out(spec.out_dir);
  fs::create_directories(out);
  PathIO io;
  if (spec.sim.checkpoint_every > 0) {
    io.checkpoint_dir = (out / "checkpoints").string();
    fs::create_directories(io.checkpoint_dir);
  }
  io.config_hash = parse_hex(hash);

  const Simulator sim(spec.sim, setup.ctx, setup.noise, setup.forcing);
  auto irng = initial_rng(spec.sim.seed, 0);
  const State u0 = make_initial(spec, setup, 0, irng);
  const PathResult res = sim.run_path(u0, 0, io);

  write_ledger(out / "ledger.csv", res.ledger, hash);
  const bool finite = res.final_state.finite();
  if (finite) write_checkpoint((out / "final.ckpt").string(), res.final_state, io.config_hash);

  man.outputs["ledger"] = "ledger.csv";
  if (finite) man.outputs["final"] = "final.ckpt";
  if (!io.checkpoint_dir.empty()) man.outputs["checkpoints"] = "checkpoints";
  man.steps = {res.steps};
  man.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  write_text(out / "manifest.json", man.to_json());

  log << "run " << hash << ": " << res.steps << " steps, " << res.ledger.rows.size() << " samples";
  if (res.ledger.stopped) log << ", stopped at t = " << fmt17(res.ledger.stop_time) << " (" << res.ledger.stop_reason << ")";
  log << "\n";
  if (!finite) {
    log << "error: the path left the finite range\n";
    return kExitNumerical;
  }
  return kExitOk;
}

int cmd_rerun(const std::string& manifest_path, const std::string& out_dir, std::ostream& log) {
  const RunManifest m = RunManifest::from_json(read_text(manifest_path));
  if (m.version != kVersion) log << "warning: manifest version " << m.version << " differs from " << kVersion << "\n";
  RunSpec spec = parse_config_text(m.snapshot);
  spec.out_dir = out_dir;
  if (spec.snapshot() != m.snapshot) throw ConsistencyError("manifest snapshot does not round-trip");
  if (m.seeds != std::vector<std::uint64_t>{spec.sim.seed, spec.forcing.seed})
    throw ConfigError("manifest seeds disagree with its snapshot");
  const auto expect_key = basis_cache_key(spec.sim.domain, spec.sim.n, spec.sim.n_z);
  if (m.basis_key != expect_key) throw ConfigError("manifest basis key disagrees with its snapshot");
  return cmd_run(spec, log);
}

int cmd_ensemble(RunSpec spec, int n_paths, int threads, bool per_path, std::ostream& log) {
  if (n_paths < 1) throw RangeError("ensemble: need at least one path");
  const auto t0 = std::chrono::steady_clock::now();
  const Setup setup = build_setup(spec);
  check_preconditions(spec, setup.noise.get());
  print_warnings(spec, log);

  RunManifest man = base_manifest(spec, setup);
  man.snapshot += "\n[ensemble]\npaths = " + std::to_string(n_paths) + "\n";
  const std::string hash = man.hash();
  const fs::path out(spec.out_dir);
  fs::create_directories(out);

  const Simulator sim(spec.sim, setup.ctx, setup.noise, setup.forcing);
  const auto rep = run_ensemble(
      sim, n_paths, [&](std::uint64_t p, std::mt19937_64& rng) { return make_initial(spec, setup, p, rng); }, threads);

  json j;
  j["manifest"] = hash;
  j["report"] = json::parse(rep.to_json());
  write_text(out / "ensemble.json", j.dump(2) + "\n");

  {
    std::ofstream os(out / "ensemble_mean.csv", std::ios::binary);
    if (!os) throw std::runtime_error("cannot write ensemble_mean.csv");
    os << "# manifest " << hash << "\n";
    for (std::size_t c = 0; c < rep.columns.size(); ++c) os << (c ? "," : "") << rep.columns[c];
    os << ",paths\n";
    for (const auto& row : rep.per_sample) {
      for (std::size_t c = 0; c < row.size(); ++c) os << (c ? "," : "") << fmt17(row[c].mean);
      os << "," << (row.empty() ? 0 : row[0].count) << "\n";
    }
  }
  man.outputs["report"] = "ensemble.json";
  man.outputs["mean"] = "ensemble_mean.csv";
  int failed = 0;
  for (int p = 0; p < n_paths; ++p) {
    if (!rep.errors[p].empty()) {
      ++failed;
      log << "path " << p << " failed: " << rep.errors[p] << "\n";
      man.steps.push_back(0);
      continue;
    }
    man.steps.push_back(rep.paths[p].steps);
    if (per_path) {
      char name[32];
      std::snprintf(name, sizeof name, "path_%06d.csv", p);
      write_ledger(out / name, rep.paths[p].ledger, hash);
    }
  }
  if (per_path) man.outputs["paths"] = "path_*.csv";
  man.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  write_text(out / "manifest.json", man.to_json());
  log << "ensemble " << hash << ": " << n_paths << " paths, " << rep.stopped << " stopped, " << failed
      << " failed\n";
  return failed > 0 ? kExitNumerical : kExitOk;
}

namespace {

SuiteReport stability_report(const CalibrationFixture& fx) {
  SuiteReport rep;
  rep.suite = "stability";
  rep.seed = fx.seed;
  for (const auto& [name, base] : fx.base) {
    InequalityResult r;
    r.name = name;
    const auto it = fx.doubled.find(name);
    r.samples = 1;
    r.reference = 2.0;
    if (it == fx.doubled.end() || !(base > 0)) {
      r.constant = std::numeric_limits<double>::quiet_NaN();
      r.pass = false;
    } else {
      r.constant = it->second / base;
      r.pass = r.constant <= 2.0 && r.constant >= 0.5;
    }
    r.violations = r.pass ? 0 : 1;
    rep.results.push_back(r);
  }
  rep.notes.push_back("constant = doubled / base; must lie in [1/2, 2]");
  return rep;
}

json noise_suite(const RunSpec& spec, const Setup& setup, int samples, bool& pass) {
  json j;
  j["suite"] = "noise";
  if (!setup.noise) {
    j["pass"] = true;
    j["note"] = "no noise directions";
    pass = true;
    return j;
  }
  const auto& m = *setup.noise;
  std::mt19937_64 rng(spec.sim.seed);
  const GrowthReport g = check_growth(m, samples, rng);
  double defect = h_div_defect(m);
  for (const auto& s : sample_family(setup.basis, spec.sim.seed, samples)) defect = std::max(defect, leray_defect(m, s));
  pass = g.pass() && defect <= 1e-10;
  j["growth"] = json::parse(g.to_json());
  j["leray_defect"] = defect;
  j["pass"] = pass;
  return j;
}

}  // namespace

int cmd_check(const RunSpec& spec, const CheckOptions& opt, std::ostream& log) {
  static const std::vector<std::string> suites = {"holder", "interpolation", "logsobolev", "nonlinear", "poincare",
                                                  "noise",  "stability",     "all"};
  if (std::find(suites.begin(), suites.end(), opt.suite) == suites.end())
    throw ConfigError("check: unknown suite '" + opt.suite + "'");
  if (opt.samples < 2) throw RangeError("check: need at least two samples");
  const auto want = [&](const char* s) { return opt.suite == "all" || opt.suite == s; };
  const std::optional<std::string> cache =
      spec.cache_dir.empty() ? std::nullopt : std::optional<std::string>(spec.cache_dir);

  RunManifest man;
  man.snapshot = spec.snapshot();
  man.basis_key = basis_cache_key(spec.sim.domain, spec.sim.n, spec.sim.n_z);
  man.seeds = {spec.sim.seed};
  json out = json::array();
  bool pass = true;
  auto add = [&](const SuiteReport& r) {
    out.push_back(json::parse(r.to_json()));
    pass = pass && r.pass();
    log << r.suite << ": " << (r.pass() ? "pass" : "FAIL") << "\n";
  };

  const bool calibrated = want("holder") || want("interpolation") || want("logsobolev") || want("nonlinear");
  if (calibrated || want("stability") || opt.calibrate) {
    if (opt.fixture.empty()) throw ConfigError("check: a calibration fixture path is required");
    if (opt.calibrate) {
      log << "calibrating (seed 20240601, 500 samples)\n";
      calibrate(20240601, 500, cache).save(opt.fixture);
    }
    const auto fx = CalibrationFixture::load(opt.fixture);
    if (calibrated) {
      const auto b = build_basis(fx.base_domain, fx.base_n, fx.base_nz, 1.5, cache);
      const auto reps = run_calibrated_suites(b, spec.sim.seed, opt.samples, &fx.base, 1.1);
      const std::map<std::string, std::string> names = {{"holder", "holder"},
                                                        {"interpolation", "interpolation"},
                                                        {"log_sobolev", "logsobolev"},
                                                        {"nonlinearity", "nonlinear"}};
      for (const auto& r : reps) {
        const auto it = names.find(r.suite);
        if (opt.suite == "all" || (it != names.end() && it->second == opt.suite) || r.suite == opt.suite) add(r);
      }
    }
    if (want("stability")) add(stability_report(fx));
  }
  if (want("poincare") || want("noise")) {
    const Setup setup = build_setup(spec);
    if (want("poincare")) {
      const int n = setup.basis->n;
      std::vector<int> levels;
      for (int l : {std::max(1, n / 4), std::max(1, n / 2)})
        if (levels.empty() || levels.back() != l) levels.push_back(l);
      add(check_poincare(sample_family(setup.basis, spec.sim.seed, opt.samples), levels,
                         {{0.0, 0.5}, {0.0, 1.0}, {0.5, 1.0}}, spec.sim.seed));
    }
    if (want("noise")) {
      bool ok = true;
      out.push_back(noise_suite(spec, setup, std::min(opt.samples, 20), ok));
      pass = pass && ok;
      log << "noise: " << (ok ? "pass" : "FAIL") << "\n";
    }
  }
  const json doc = {{"manifest", man.hash()}, {"pass", pass}, {"suites", out}};
  const std::string text = doc.dump(2) + "\n";
  if (opt.out.empty())
    log << text;
  else
    write_text(opt.out, text);
  return pass ? kExitOk : kExitSuite;
}

namespace {

struct ExportSink {
  std::ofstream os;
  ExportSink(const fs::path& p, const std::string& hash) : os(p, std::ios::binary) {
    if (!os) throw std::runtime_error("cannot write " + p.string());
    os << "# manifest " << hash << "\ncomponent,x,y,z,value\n";
  }
  void field(const DiscreteGrid& g, const GridField& f, const std::vector<std::string>& names) {
    for (std::size_t c = 0; c < f.comps.size(); ++c) {
      const auto& comp = f.comps[c];
      const auto xy = g.coords(comp.stagger);
      for (Eigen::Index z = 0; z < comp.values.cols(); ++z)
        for (Eigen::Index i = 0; i < comp.values.rows(); ++i)
          os << names[c] << "," << fmt17(xy[i].first) << "," << fmt17(xy[i].second) << "," << fmt17(f.z[z]) << ","
             << fmt17(comp.values(i, z)) << "\n";
    }
  }
};

}  // namespace

int cmd_export(const RunSpec& spec, const std::string& checkpoint, const std::string& what, const std::string& out_dir,
               std::ostream& log) {
  static const std::vector<std::string> fields = {"v", "T", "w", "p_s", "p", "vbar", "vtilde"};
  if (what != "all" && std::find(fields.begin(), fields.end(), what) == fields.end())
    throw ConfigError("export: unknown field '" + what + "'");
  const Setup setup = build_setup(spec);
  std::uint64_t h = 0;
  const State s = read_checkpoint(checkpoint, setup.basis, &h);
  const std::string hash = hex16(h);
  const auto& g = *setup.basis->grid;
  const fs::path out(out_dir);
  fs::create_directories(out);
  const auto want = [&](const char* f) { return what == "all" || what == f; };

  Vec ps;
  if (want("p_s") || want("p")) ps = recover_surface_pressure(*setup.ctx, s);
  if (want("v")) ExportSink(out / "v.csv", hash).field(g, velocity_field(s), {"u", "v"});
  if (want("T")) ExportSink(out / "T.csv", hash).field(g, temperature_field(s), {"T"});
  if (want("w")) {
    const GridField w = diagnose_w(s);
    ExportSink(out / "w.csv", hash).field(g, w, {"w"});
    const Eigen::Index bottom = 0, top = w.comps[0].values.cols() - 1;
    log << "w lid check: max|w(-h)| = " << fmt17(w.comps[0].values.col(bottom).cwiseAbs().maxCoeff())
        << ", max|w(0)| = " << fmt17(w.comps[0].values.col(top).cwiseAbs().maxCoeff()) << "\n";
  }
  if (want("p_s")) {
    GridField f;
    f.comps.push_back({Stagger::Center, ps});
    f.z = Vec::Zero(1);
    f.wz = Vec::Ones(1);
    ExportSink(out / "p_s.csv", hash).field(g, f, {"p_s"});
  }
  if (want("p")) ExportSink(out / "p.csv", hash).field(g, reconstruct_pressure(ps, s, spec.sim.phys), {"p"});
  if (want("vbar")) ExportSink(out / "vbar.csv", hash).field(g, barotropic_field(s), {"u", "v"});
  if (want("vtilde")) ExportSink(out / "vtilde.csv", hash).field(g, velocity_field(baroclinic_remainder(s)), {"u", "v"});
  log << "exported " << what << " from " << checkpoint << " (manifest " << hash << ") to " << out_dir << "\n";
  return kExitOk;
}

int run_guarded(std::ostream& log, const std::function<int()>& body) {
  try {
    return body();
  } catch (const ConfigError& e) {
    log << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const RangeError& e) {
    log << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const NumericalError& e) {
    log << "numerical error: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const ConsistencyError& e) {
    log << "consistency error: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const std::exception& e) {
    log << "error: " << e.what() << "\n";
    return kExitNumerical;
  }
}

}  // namespace hsgs
