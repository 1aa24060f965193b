#include "hsgs/state.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>

#include "hsgs/binio.hpp"
#include "hsgs/error.hpp"

namespace hsgs {

// ---- State arithmetic ----

State State::zero(BasisPtr b) {
  State s;
  s.v = Mat::Zero(b->n, b->n_z + 1);
  s.T = Mat::Zero(b->n, b->n_z);
  s.basis = std::move(b);
  return s;
}

Vec State::flat() const {
  Vec x(size());
  x.head(v.size()) = v.reshaped();
  x.tail(T.size()) = T.reshaped();
  return x;
}

State State::from_flat(BasisPtr b, const Vec& x) {
  State s = zero(std::move(b));
  if (x.size() != s.size()) throw ConfigError("state: flat vector has wrong size");
  s.v.reshaped() = x.head(s.v.size());
  s.T.reshaped() = x.tail(s.T.size());
  return s;
}

namespace {
void same_basis(const State& a, const State& b) {
  if (a.basis != b.basis) throw ConfigError("state: operands live on different bases");
}
}  // namespace

State& State::operator+=(const State& o) {
  same_basis(*this, o);
  v += o.v;
  T += o.T;
  return *this;
}
State& State::operator-=(const State& o) {
  same_basis(*this, o);
  v -= o.v;
  T -= o.T;
  return *this;
}
State& State::operator*=(double a) {
  v *= a;
  T *= a;
  return *this;
}
State operator+(State a, const State& b) { return a += b; }
State operator-(State a, const State& b) { return a -= b; }
State operator*(double s, State a) { return a *= s; }

State random_state(BasisPtr b, std::mt19937_64& rng, double decay) {
  std::normal_distribution<double> nd;
  State s = State::zero(std::move(b));
  for (int k = 0; k < s.v.cols(); ++k)
    for (int m = 0; m < s.v.rows(); ++m) s.v(m, k) = nd(rng) / std::pow(1.0 + m + k, decay);
  for (int k = 0; k < s.T.cols(); ++k)
    for (int m = 0; m < s.T.rows(); ++m) s.T(m, k) = nd(rng) / std::pow(2.0 + m + k, decay);
  return s;
}

State truncate_Pn(const State& s, int n_prime) {
  const int n = s.basis->n;
  if (n_prime < 0 || n_prime > n)
    throw RangeError("truncate_Pn: level " + std::to_string(n_prime) + " outside [0, " + std::to_string(n) + "]");
  State p = s;
  p.v.bottomRows(n - n_prime).setZero();
  p.T.bottomRows(n - n_prime).setZero();
  return p;
}

State truncate_Qn(const State& s, int n_prime) { return s - truncate_Pn(s, n_prime); }

// ---- GridField arithmetic ----

namespace {
void same_layout(const GridField& a, const GridField& b) {
  if (a.comps.size() != b.comps.size()) throw ConfigError("grid field: component count mismatch");
  for (size_t c = 0; c < a.comps.size(); ++c)
    if (a.comps[c].stagger != b.comps[c].stagger || a.comps[c].values.rows() != b.comps[c].values.rows() ||
        a.comps[c].values.cols() != b.comps[c].values.cols())
      throw ConfigError("grid field: shape mismatch");
}
}  // namespace

GridField& GridField::operator+=(const GridField& o) {
  same_layout(*this, o);
  for (size_t c = 0; c < comps.size(); ++c) comps[c].values += o.comps[c].values;
  return *this;
}
GridField& GridField::operator-=(const GridField& o) {
  same_layout(*this, o);
  for (size_t c = 0; c < comps.size(); ++c) comps[c].values -= o.comps[c].values;
  return *this;
}
GridField& GridField::operator*=(double a) {
  for (auto& c : comps) c.values *= a;
  return *this;
}
GridField operator+(GridField a, const GridField& b) { return a += b; }
GridField operator-(GridField a, const GridField& b) { return a -= b; }
GridField operator*(double s, GridField a) { return a *= s; }

// ---- synthesis / projection ----

void synth_velocity(const TensorBasis& b, const Mat& C, const Mat& table, Mat& u, Mat& v) {
  const int nu = b.n_xface(), nv = b.n_yface(), nz = b.n_z;
  const auto& S = b.stokes.modes;
  const auto& D = b.dirichlet.modes;
  const Mat bt = C.col(0) * table.row(0);  // n x nq
  const Mat bc = C.rightCols(nz) * table.bottomRows(nz);
  u.noalias() = S.topRows(nu) * bt;
  u.noalias() += D.topRows(nu) * bc;
  v.noalias() = S.bottomRows(nv) * bt;
  v.noalias() += D.bottomRows(nv) * bc;
}

Mat project_velocity(const TensorBasis& b, const Mat& u, const Mat& v, const Mat& table, const Vec& wq) {
  const int nu = b.n_xface(), nv = b.n_yface(), nz = b.n_z;
  const double wh = b.grid->dx() * b.grid->dy();
  const Mat tw = wq.asDiagonal() * table.transpose();  // nq x (n_z+1)
  const Mat Zu = u * tw, Zv = v * tw;
  const auto& S = b.stokes.modes;
  const auto& D = b.dirichlet.modes;
  Mat C(b.n, nz + 1);
  C.col(0) = wh * (S.topRows(nu).transpose() * Zu.col(0) + S.bottomRows(nv).transpose() * Zv.col(0));
  C.rightCols(nz) =
      wh * (D.topRows(nu).transpose() * Zu.rightCols(nz) + D.bottomRows(nv).transpose() * Zv.rightCols(nz));
  return C;
}

Mat synth_temperature(const TensorBasis& b, const Mat& C, const Mat& table) { return b.neumann.modes * (C * table); }

Mat project_temperature(const TensorBasis& b, const Mat& f, const Mat& table, const Vec& wq) {
  const double wh = b.grid->dx() * b.grid->dy();
  return wh * (b.neumann.modes.transpose() * (f * (wq.asDiagonal() * table.transpose())));
}

// ---- state <-> grid ----

GridField velocity_field(const State& s, const Vec& z, const Vec& wz, int r) {
  GridField f;
  f.flavor = BoundaryFlavor::NoSlip;
  f.z = z;
  f.wz = wz;
  f.comps.resize(2);
  f.comps[0].stagger = Stagger::XFace;
  f.comps[1].stagger = Stagger::YFace;
  synth_velocity(*s.basis, s.v, s.basis->vcos.table(z, r), f.comps[0].values, f.comps[1].values);
  return f;
}

GridField velocity_field(const State& s, int r) {
  return velocity_field(s, s.basis->grid->z_nodes(), s.basis->grid->z_weights(), r);
}

GridField temperature_field(const State& s, const Vec& z, const Vec& wz, int r) {
  GridField f;
  f.flavor = BoundaryFlavor::NeumannScalar;
  f.z = z;
  f.wz = wz;
  f.comps.push_back({Stagger::Center, synth_temperature(*s.basis, s.T, s.basis->vsin.table(z, r))});
  return f;
}

GridField temperature_field(const State& s, int r) {
  return temperature_field(s, s.basis->grid->z_nodes(), s.basis->grid->z_weights(), r);
}

StateFields to_grid(const State& s) { return {velocity_field(s), temperature_field(s)}; }

State to_spectral(const GridField& v, const GridField& T, BasisPtr b) {
  const DiscreteGrid& g = *b->grid;
  const int nz = g.domain().Nz;
  if (v.comps.size() != 2 || v.comps[0].stagger != Stagger::XFace || v.comps[1].stagger != Stagger::YFace ||
      v.comps[0].values.rows() != g.size(Stagger::XFace) || v.comps[1].values.rows() != g.size(Stagger::YFace) ||
      v.comps[0].values.cols() != nz || v.comps[1].values.cols() != nz)
    throw ConfigError("to_spectral: velocity field does not match the basis grid");
  if (T.comps.size() != 1 || T.comps[0].stagger != Stagger::Center ||
      T.comps[0].values.rows() != g.size(Stagger::Center) || T.comps[0].values.cols() != nz)
    throw ConfigError("to_spectral: temperature field does not match the basis grid");
  State s = State::zero(b);
  s.v = project_velocity(*b, v.comps[0].values, v.comps[1].values, b->vcos.table(g.z_nodes()), g.z_weights());
  s.T = project_temperature(*b, T.comps[0].values, b->vsin.table(g.z_nodes()), g.z_weights());
  return s;
}

// ---- split ----

State vertical_average(const State& s) {
  State a = State::zero(s.basis);
  a.v.col(0) = s.v.col(0);
  a.time = s.time;
  return a;
}

State baroclinic_remainder(const State& s) {
  State r = s;
  r.v.col(0).setZero();
  return r;
}

namespace {
GridField planar(std::vector<GridComponent> comps, BoundaryFlavor fl) {
  GridField f;
  f.comps = std::move(comps);
  f.flavor = fl;
  f.z = Vec::Zero(1);
  f.wz = Vec::Ones(1);
  return f;
}
}  // namespace

GridField barotropic_field(const State& s) {
  const TensorBasis& b = *s.basis;
  const double scale = 1.0 / std::sqrt(b.grid->domain().h);  // (1/h) int c_0 dz
  const Vec uv = b.stokes.modes * s.v.col(0) * scale;
  return planar({{Stagger::XFace, uv.head(b.n_xface())}, {Stagger::YFace, uv.tail(b.n_yface())}},
                BoundaryFlavor::NoSlip);
}

GridField vertical_average(const GridField& f, double h) {
  std::vector<GridComponent> comps;
  for (const auto& c : f.comps) comps.push_back({c.stagger, (c.values * f.wz) / h});
  return planar(std::move(comps), f.flavor);
}

GridField baroclinic_remainder(const GridField& f, double h) {
  const GridField a = vertical_average(f, h);
  GridField r = f;
  for (size_t c = 0; c < r.comps.size(); ++c) r.comps[c].values.colwise() -= a.comps[c].values.col(0);
  return r;
}

Vec horizontal_divergence(const DiscreteGrid& g, const GridField& v, int col) {
  return g.div_neumann(v.comps[0].values.col(col), v.comps[1].values.col(col));
}

GridField diagnose_w(const State& s, const Vec& z, const Vec& wz) {
  const TensorBasis& b = *s.basis;
  const DiscreteGrid& g = *b.grid;
  const double h = g.domain().h;
  const int nu = b.n_xface(), nv = b.n_yface();
  // Divergence of the horizontal part of each vertical mode.
  Mat H(g.size(Stagger::Center), b.n_z + 1);
  for (int k = 0; k <= b.n_z; ++k) {
    const Vec hv = b.vel_modes(k) * s.v.col(k);
    H.col(k) = g.div_neumann(hv.head(nu), hv.tail(nv));
  }
  // int_{-h}^z c_0 = (z+h)/sqrt(h); int_{-h}^z c_k = (h / k pi) s_k(z).
  auto column = [&](double zl) {
    Vec w = -H.col(0) * ((zl + h) / std::sqrt(h));
    for (int k = 1; k <= b.n_z; ++k) w -= H.col(k) * (b.vsin.eval(k, zl) / b.vcos.wavenumber(k));
    return w;
  };
  GridField w;
  w.flavor = BoundaryFlavor::None;
  w.z = z;
  w.wz = wz;
  Mat vals(g.size(Stagger::Center), z.size());
  for (int l = 0; l < z.size(); ++l) vals.col(l) = column(z[l]);
  w.comps.push_back({Stagger::Center, std::move(vals)});

  const Vec top = column(0.0);
  const double modes_sup = std::max(b.stokes.modes.cwiseAbs().maxCoeff(), b.dirichlet.modes.cwiseAbs().maxCoeff());
  const double scale = std::max(1.0, s.v.cwiseAbs().sum() * modes_sup * (2.0 / g.dx() + 2.0 / g.dy()));
  if (top.cwiseAbs().maxCoeff() > 1e-10 * scale)
    throw ConsistencyError("diagnose_w: lid value of w is not zero; barotropic part is not divergence-free");
  return w;
}

GridField diagnose_w(const State& s) { return diagnose_w(s, s.basis->grid->z_nodes(), s.basis->grid->z_weights()); }

// ---- projections ----

GridField leray_project_2d(const LerayProjector& P, const GridField& f, GridField* q) {
  if (f.comps.size() != 2 || f.comps[0].stagger != Stagger::XFace || f.comps[1].stagger != Stagger::YFace)
    throw ConfigError("leray_project_2d: expected a face vector field");
  GridField out = f;
  if (q) {
    q->comps.assign(1, {Stagger::Center, Mat(P.grid().size(Stagger::Center), f.nz())});
    q->z = f.z;
    q->wz = f.wz;
    q->flavor = BoundaryFlavor::NeumannScalar;
  }
  Vec pu, pv, qq;
  for (int l = 0; l < f.nz(); ++l) {
    P.project(f.comps[0].values.col(l), f.comps[1].values.col(l), pu, pv, &qq);
    out.comps[0].values.col(l) = pu;
    out.comps[1].values.col(l) = pv;
    if (q) q->comps[0].values.col(l) = qq;
  }
  return out;
}

GridField hydrostatic_project(const LerayProjector& P, const GridField& v, double h) {
  const GridField vbar = vertical_average(v, h);
  const GridField pbar = leray_project_2d(P, vbar);
  GridField out = baroclinic_remainder(v, h);
  for (size_t c = 0; c < out.comps.size(); ++c) out.comps[c].values.colwise() += pbar.comps[c].values.col(0);
  return out;
}

// ---- pressure ----

GridField reconstruct_pressure(const Vec& p_s, const GridField& T, const PhysicalConstants& c) {
  const Mat& t = T.comps.at(0).values;
  if (p_s.size() != t.rows()) throw ConfigError("reconstruct_pressure: p_s and T shapes differ");
  const int nz = T.nz();
  const Mat rho = c.rho0 * (1.0 - c.beta_T * (t.array() - c.T_r));
  Mat I = Mat::Zero(t.rows(), nz);  // int_{z_l}^0 rho
  for (int l = nz - 2; l >= 0; --l) I.col(l) = I.col(l + 1) + 0.5 * (T.z[l + 1] - T.z[l]) * (rho.col(l) + rho.col(l + 1));
  GridField p;
  p.flavor = BoundaryFlavor::None;
  p.z = T.z;
  p.wz = T.wz;
  p.comps.push_back({Stagger::Center, (c.g * I).colwise() + p_s});
  return p;
}

GridField reconstruct_pressure(const Vec& p_s, const State& s, const PhysicalConstants& c) {
  const TensorBasis& b = *s.basis;
  const Vec& z = b.grid->z_nodes();
  const double h = b.grid->domain().h;
  // int_z^0 s_k = (h / k pi) (c_k(z) - sqrt(2/h) (-1)^k)
  Mat tab(b.n_z, z.size());
  for (int k = 1; k <= b.n_z; ++k)
    for (int l = 0; l < z.size(); ++l)
      tab(k - 1, l) = (b.vcos.eval(k, z[l]) - std::sqrt(2.0 / h) * (k % 2 == 0 ? 1.0 : -1.0)) / b.vcos.wavenumber(k);
  const Mat intT = synth_temperature(b, s.T, tab);
  Mat I(intT.rows(), z.size());
  for (int l = 0; l < z.size(); ++l)
    I.col(l) = Vec::Constant(intT.rows(), c.rho0 * (1.0 + c.beta_T * c.T_r) * (-z[l])) - c.rho0 * c.beta_T * intT.col(l);
  GridField p;
  p.flavor = BoundaryFlavor::None;
  p.z = z;
  p.wz = b.grid->z_weights();
  p.comps.push_back({Stagger::Center, (c.g * I).colwise() + p_s});
  return p;
}

// ---- checkpoints ----

namespace {
constexpr std::string_view kCkpMagic = "HSGS-CKP1";
}

void write_checkpoint(const std::string& path, const State& s, std::uint64_t config_hash) {
  const auto parent = std::filesystem::path(path).parent_path();
  if (!parent.empty()) std::filesystem::create_directories(parent);
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot write checkpoint " + path);
  binio::put_magic(os, kCkpMagic);
  binio::put_u64(os, config_hash);
  binio::put_f64(os, s.time);
  binio::put_u64(os, s.v.size());
  for (double x : s.v.reshaped()) binio::put_f64(os, x);
  binio::put_u64(os, s.T.size());
  for (double x : s.T.reshaped()) binio::put_f64(os, x);
  if (!os) throw Error("failed writing checkpoint " + path);
}

State read_checkpoint(const std::string& path, BasisPtr b, std::uint64_t* hash) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("cannot open checkpoint " + path);
  if (!binio::check_magic(is, kCkpMagic)) throw ConfigError("not a checkpoint file: " + path);
  State s = State::zero(b);
  std::uint64_t hh, nv, nt;
  if (!binio::get_u64(is, hh) || !binio::get_f64(is, s.time) || !binio::get_u64(is, nv))
    throw ConfigError("truncated checkpoint " + path);
  if (nv != static_cast<std::uint64_t>(s.v.size())) throw ConfigError("checkpoint velocity size does not match basis");
  for (double& x : s.v.reshaped())
    if (!binio::get_f64(is, x)) throw ConfigError("truncated checkpoint " + path);
  if (!binio::get_u64(is, nt) || nt != static_cast<std::uint64_t>(s.T.size()))
    throw ConfigError("checkpoint temperature size does not match basis");
  for (double& x : s.T.reshaped())
    if (!binio::get_f64(is, x)) throw ConfigError("truncated checkpoint " + path);
  if (hash) *hash = hh;
  return s;
}

}  // namespace hsgs
