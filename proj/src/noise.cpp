#include "hsgs/noise.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <json.hpp>

#include "hsgs/error.hpp"
#include "hsgs/estimates.hpp"

namespace hsgs {

namespace {

constexpr double kPi = std::numbers::pi;

double binom(int r, int i) {
  static const double t[3][3] = {{1, 0, 0}, {1, 1, 0}, {1, 2, 1}};
  return t[r][i];
}

// Columns of M scaled by the entries of p (one per vertical node).
Mat scale_cols(const Mat& M, const Vec& p) { return M * p.asDiagonal(); }

// Rows of M scaled by a planar sample.
Mat scale_rows(const Vec& a, const Mat& M) { return a.asDiagonal() * M; }

double weighted_norm2(const DiscreteGrid& g, Stagger s, const Mat& f, const Vec& wz) {
  if (f.size() == 0) return 0.0;
  return g.weights(s).dot(f.array().square().matrix() * wz);
}

void require(bool ok, const std::string& what) {
  if (!ok) throw ConfigError("noise model: " + what);
}

}  // namespace

// ---- profiles ----

double Profile::eval(double z, int r) const {
  const double xi = z + h;
  double acc = 0;
  for (size_t j = 0; j < a.size(); ++j) {
    if (a[j] == 0) continue;
    if (j == 0) {
      if (parity == Parity::Cos && r == 0) acc += a[0];
      continue;
    }
    const double kap = static_cast<double>(j) * kPi / h;
    const double ph = kap * xi + r * kPi / 2;
    acc += a[j] * std::pow(kap, r) * (parity == Parity::Cos ? std::cos(ph) : std::sin(ph));
  }
  return acc;
}

Vec Profile::eval(const Vec& z, int r) const {
  Vec out(z.size());
  for (int i = 0; i < z.size(); ++i) out[i] = eval(z[i], r);
  return out;
}

double Profile::mean() const {
  if (a.empty()) return 0.0;
  if (parity == Parity::Cos) return a[0];
  double acc = 0;
  for (size_t j = 1; j < a.size(); ++j) acc += a[j] * (1 - std::cos(j * kPi)) / (j * kPi);
  return acc;
}

double Profile::sup() const {
  if (is_zero()) return 0.0;
  double best = 0;
  const int n = 4001;
  for (int i = 0; i < n; ++i) best = std::max(best, std::abs(eval(-h + h * i / (n - 1))));
  return best;
}

bool Profile::is_zero() const {
  return std::all_of(a.begin(), a.end(), [](double x) { return x == 0; });
}

// ---- planar samples ----

namespace {
constexpr Stagger kSlotStagger[3] = {Stagger::XFace, Stagger::YFace, Stagger::Center};
}

PlanarScalar PlanarScalar::zero(const DiscreteGrid& g) {
  PlanarScalar p;
  for (int s = 0; s < 3; ++s) p.a[s] = Vec::Zero(g.size(kSlotStagger[s]));
  return p;
}

PlanarScalar PlanarScalar::sample(const DiscreteGrid& g, const std::function<double(double, double)>& f) {
  PlanarScalar p;
  for (int s = 0; s < 3; ++s) {
    const auto xy = g.coords(kSlotStagger[s]);
    p.a[s].resize(xy.size());
    for (size_t i = 0; i < xy.size(); ++i) p.a[s][i] = f(xy[i].first, xy[i].second);
  }
  return p;
}

double PlanarScalar::sup() const {
  double best = 0;
  for (const auto& v : a)
    if (v.size()) best = std::max(best, v.cwiseAbs().maxCoeff());
  return best;
}

bool PlanarScalar::is_zero() const {
  return std::all_of(a.begin(), a.end(), [](const Vec& v) { return v.isZero(0.0); });
}

PlanarVector PlanarVector::zero(const DiscreteGrid& g) { return constant(g, 0, 0); }

PlanarVector PlanarVector::constant(const DiscreteGrid& g, double ax, double ay) {
  return sample(g, [&](double, double) { return std::array<double, 2>{ax, ay}; });
}

PlanarVector PlanarVector::sample(const DiscreteGrid& g,
                                  const std::function<std::array<double, 2>(double, double)>& f) {
  PlanarVector p;
  for (int s = 0; s < 3; ++s) {
    const auto xy = g.coords(kSlotStagger[s]);
    p.x[s].resize(xy.size());
    p.y[s].resize(xy.size());
    for (size_t i = 0; i < xy.size(); ++i) {
      const auto v = f(xy[i].first, xy[i].second);
      p.x[s][i] = v[0];
      p.y[s][i] = v[1];
    }
  }
  return p;
}

double PlanarVector::sup() const {
  double best = 0;
  for (int s = 0; s < 3; ++s)
    if (x[s].size()) best = std::max(best, (x[s].array().square() + y[s].array().square()).sqrt().maxCoeff());
  return best;
}

bool PlanarVector::is_zero() const {
  for (int s = 0; s < 3; ++s)
    if (!x[s].isZero(0.0) || !y[s].isZero(0.0)) return false;
  return true;
}

NoiseMode NoiseMode::zero(const DiscreteGrid& g) {
  NoiseMode m;
  const double h = g.domain().h;
  m.psi = m.psiT = m.chi = m.theta_u = m.theta_v = PlanarVector::zero(g);
  m.nu = m.chi_hat = PlanarScalar::zero(g);
  for (Profile* p : {&m.phi_x, &m.phi_y, &m.psiT_profile, &m.zeta, &m.chi_profile}) *p = Profile::zero(h);
  for (Profile* p : {&m.theta_profile, &m.zeta_hat_profile, &m.nu_hat_profile, &m.chi_hat_profile})
    *p = Profile{Parity::Sin, h, {}};
  return m;
}

// ---- model ----

NoiseModel::NoiseModel(ContextPtr ctx, std::vector<NoiseMode> modes) : ctx_(std::move(ctx)), modes_(std::move(modes)) {
  require(ctx_ != nullptr, "missing operator context");
  const TensorBasis& b = *ctx_->basis;
  const DiscreteGrid& g = *b.grid;
  const double h = g.domain().h;
  auto check_profile = [&](const Profile& p, Parity want, const char* name) {
    require(std::abs(p.h - h) <= 1e-12 * h, std::string(name) + " profile depth differs from the domain");
    require(p.a.empty() || p.parity == want,
            std::string(name) + (want == Parity::Cos ? " needs a cosine profile (d_z = 0 on the lids)"
                                                     : " needs a sine profile (vanishing on the lids)"));
    order_ = std::max(order_, p.order());
  };
  auto check_planar = [&](const auto& p, const char* name) {
    for (int s = 0; s < 3; ++s) {
      const int n = g.size(kSlotStagger[s]);
      if constexpr (std::is_same_v<std::decay_t<decltype(p)>, PlanarScalar>) {
        require(p.a[s].size() == n, std::string(name) + " sampled on the wrong grid");
      } else {
        require(p.x[s].size() == n && p.y[s].size() == n, std::string(name) + " sampled on the wrong grid");
      }
    }
  };
  for (const auto& m : modes_) {
    check_planar(m.psi, "Psi");
    check_planar(m.psiT, "Psi^T");
    check_planar(m.chi, "chi");
    check_planar(m.theta_u, "Theta");
    check_planar(m.theta_v, "Theta");
    check_planar(m.nu, "nu");
    check_planar(m.chi_hat, "chi_hat");
    check_profile(m.phi_x, Parity::Cos, "Phi");
    check_profile(m.phi_y, Parity::Cos, "Phi");
    check_profile(m.psiT_profile, Parity::Cos, "Psi^T");
    check_profile(m.zeta, Parity::Cos, "zeta");
    check_profile(m.chi_profile, Parity::Cos, "chi");
    check_profile(m.theta_profile, Parity::Sin, "Theta");
    check_profile(m.zeta_hat_profile, Parity::Sin, "zeta_hat");
    check_profile(m.nu_hat_profile, Parity::Sin, "nu_hat");
    check_profile(m.chi_hat_profile, Parity::Sin, "chi_hat");
    require(std::isfinite(m.gamma), "gamma must be finite");
  }
  // Squares of sigma carry wavenumbers up to 2 (n_z + order); trapezoid with N intervals is exact below 2N.
  const int intervals = b.n_z + order_ + 1;
  trapezoid(h, intervals + 1, z_, wz_);
  for (int r = 0; r < 3; ++r) {
    tc_[r] = b.vcos.table(z_, r);
    ts_[r] = b.vsin.table(z_, r);
  }
  eta_ = compute_eta(*this);
}

const NoiseMode& NoiseModel::mode(int k) const {
  if (k < 0 || k >= K()) throw RangeError("noise direction " + std::to_string(k) + " out of range");
  return modes_[k];
}

void NoiseParams::validate() const {
  if (family != "none" && family != "trig" && family != "constant")
    throw ConfigError("unknown noise family '" + family + "'");
  if (K < 0) throw RangeError("noise K must be >= 0");
  if (!(decay >= 0)) throw RangeError("noise decay must be >= 0");
  for (double v : {psi, phi, phi_var, psiT, zeta, nu, chi, gamma, theta, zeta_hat, nu_hat, chi_hat})
    if (!std::isfinite(v)) throw RangeError("noise amplitudes must be finite");
}

NoiseModel make_noise(ContextPtr ctx, const NoiseParams& p) {
  p.validate();
  const TensorBasis& b = *ctx->basis;
  const DiscreteGrid& g = *b.grid;
  const double Lx = g.domain().Lx, Ly = g.domain().Ly, h = g.domain().h;
  const bool trig = p.family == "trig";
  std::vector<NoiseMode> modes;
  for (int k = 1; k <= p.K; ++k) {
    NoiseMode m = NoiseMode::zero(g);
    if (p.family == "none") {
      modes.push_back(std::move(m));
      continue;
    }
    const double al = std::pow(static_cast<double>(k), -p.decay);
    const double th = k * 2.399963229728653;  // golden angle
    const int px = (k - 1) % 3, qy = ((k - 1) / 3) % 3;
    auto shape = [&](double x, double y) {
      return trig ? std::cos(kPi * px * x / Lx) * std::cos(kPi * qy * y / Ly) : 1.0;
    };
    auto shape_t = [&](double x, double y) {
      return trig ? std::cos(kPi * qy * x / Lx) * std::cos(kPi * px * y / Ly) : 1.0;
    };
    const double cx = trig ? std::cos(th) : 1.0, cy = trig ? std::sin(th) : 0.0;
    m.psi = PlanarVector::sample(g, [&](double x, double y) {
      return std::array<double, 2>{p.psi * al * cx * shape(x, y), p.psi * al * cy * shape(x, y)};
    });
    m.phi_x = Profile{Parity::Cos, h, {p.phi * al * cx, p.phi * al * cx * p.phi_var}};
    m.phi_y = Profile{Parity::Cos, h, {p.phi * al * cy, p.phi * al * cy * p.phi_var}};
    m.psiT = PlanarVector::sample(g, [&](double x, double y) {
      return std::array<double, 2>{p.psiT * al * (trig ? -cy : 1.0) * shape_t(x, y), p.psiT * al * (trig ? cx : 0.0) * shape_t(x, y)};
    });
    m.psiT_profile = Profile::constant(h, 1.0);
    m.zeta = Profile{Parity::Cos, h, {p.zeta * al, 0.5 * p.zeta * al}};
    m.nu = PlanarScalar::sample(g, [&](double x, double y) { return p.nu * al * shape(x, y); });
    if (p.chi != 0) {
      // Barotropic part of chi is a Stokes mode, so div_H A chi = 0 on the grid.
      const Vec mode = b.stokes.modes.col((k - 1) % b.n);
      const double s = mode.cwiseAbs().maxCoeff();
      const Vec cu = mode.head(b.n_xface()) / s, cv = mode.tail(b.n_yface()) / s;
      m.chi.x[kSlotU] = p.chi * al * cu;
      m.chi.y[kSlotU] = p.chi * al * (ctx->v_to_u * cv);
      m.chi.x[kSlotV] = p.chi * al * (ctx->u_to_v * cu);
      m.chi.y[kSlotV] = p.chi * al * cv;
      m.chi.x[kSlotC] = p.chi * al * (ctx->u_to_c * cu);
      m.chi.y[kSlotC] = p.chi * al * (ctx->v_to_c * cv);
      m.chi_profile = Profile{Parity::Cos, h, {1.0, 0.5}};
    }
    m.gamma = p.gamma * al;
    m.theta_u = PlanarVector::sample(g, [&](double x, double y) { return std::array<double, 2>{0.0, p.theta * al * shape(x, y)}; });
    m.theta_v = PlanarVector::sample(g, [&](double x, double y) { return std::array<double, 2>{p.theta * al * shape(x, y), 0.0}; });
    m.theta_profile = Profile{Parity::Sin, h, {0.0, 1.0}};
    m.zeta_hat = {p.zeta_hat * al * cx, p.zeta_hat * al * cy};
    m.zeta_hat_profile = Profile{Parity::Sin, h, {0.0, 1.0}};
    m.nu_hat = {p.nu_hat * al * cx, p.nu_hat * al * cy};
    m.nu_hat_profile = Profile{Parity::Sin, h, {0.0, 1.0}};
    m.chi_hat = PlanarScalar::sample(g, [&](double x, double y) { return p.chi_hat * al * shape_t(x, y); });
    m.chi_hat_profile = Profile{Parity::Sin, h, {0.0, 1.0}};
    modes.push_back(std::move(m));
  }
  return NoiseModel(std::move(ctx), std::move(modes));
}

// ---- evaluation ----

double SigmaFields::norm2(const DiscreteGrid& g, const Vec& wz) const {
  return weighted_norm2(g, Stagger::XFace, u, wz) + weighted_norm2(g, Stagger::YFace, v, wz) +
         weighted_norm2(g, Stagger::Center, T, wz);
}

NoiseEvaluator::NoiseEvaluator(const NoiseModel& model, const State& s, int max_r) : m_(model), max_r_(max_r) {
  if (max_r < 0 || max_r > 2) throw RangeError("noise derivative order must be 0, 1 or 2");
  const TensorBasis& b = m_.basis();
  if (s.basis.get() != &b) throw ConfigError("state and noise model live on different bases");
  const OperatorContext& c = m_.ctx();
  Mat Ct = s.v, Cb = Mat::Zero(s.v.rows(), s.v.cols());
  Ct.col(0).setZero();
  Cb.col(0) = s.v.col(0);
  const int R = max_r + 1;
  for (auto* v : {&ut_, &vt_, &utx_, &uty_, &vtx_, &vty_, &T_, &Tx_, &Ty_, &utc_, &vtc_}) v->resize(R);
  for (int r = 0; r < R; ++r) {
    synth_velocity(b, Ct, m_.tc(r), ut_[r], vt_[r]);
    utx_[r] = c.dx_u * ut_[r];
    uty_[r] = c.dy_u * ut_[r];
    vtx_[r] = c.dx_v * vt_[r];
    vty_[r] = c.dy_v * vt_[r];
    utc_[r] = c.u_to_c * ut_[r];
    vtc_[r] = c.v_to_c * vt_[r];
    T_[r] = synth_temperature(b, s.T, m_.ts(r));
    Tx_[r] = c.dx_c * T_[r];
    Ty_[r] = c.dy_c * T_[r];
  }
  synth_velocity(b, Cb, m_.tc(0), ub_, vb_);
  ubx_ = c.dx_u * ub_;
  uby_ = c.dy_u * ub_;
  vbx_ = c.dx_v * vb_;
  vby_ = c.dy_v * vb_;
  ubc_ = c.u_to_c * ub_;
  vbc_ = c.v_to_c * vb_;
  ubxc_ = c.u_to_c * ubx_;
  ubyc_ = c.u_to_c * uby_;
  vbxc_ = c.v_to_c * vbx_;
  vbyc_ = c.v_to_c * vby_;
}

SigmaFields NoiseEvaluator::fields(int k, int r) const { return fields_for(m_.mode(k), r, true); }
SigmaFields NoiseEvaluator::linear_fields(int k, int r) const { return fields_for(m_.mode(k), r, false); }

SigmaFields NoiseEvaluator::fields_for(const NoiseMode& md, int r, bool affine) const {
  if (r < 0 || r > max_r_) throw RangeError("derivative order above the evaluator's precomputed range");
  const Vec& z = m_.z();
  const int nq = static_cast<int>(z.size());
  SigmaFields f;
  f.u = Mat::Zero(ut_[0].rows(), nq);
  f.v = Mat::Zero(vt_[0].rows(), nq);
  f.T = Mat::Zero(T_[0].rows(), nq);

  // sigma_1: Psi . grad vt + Phi . grad vbar + zeta vbar + nu vt + chi
  if (!md.psi.is_zero()) {
    f.u += scale_rows(md.psi.x[kSlotU], utx_[r]) + scale_rows(md.psi.y[kSlotU], uty_[r]);
    f.v += scale_rows(md.psi.x[kSlotV], vtx_[r]) + scale_rows(md.psi.y[kSlotV], vty_[r]);
  }
  if (!md.phi_x.is_zero()) {
    const Vec p = md.phi_x.eval(z, r);
    f.u += scale_cols(ubx_, p);
    f.v += scale_cols(vbx_, p);
  }
  if (!md.phi_y.is_zero()) {
    const Vec p = md.phi_y.eval(z, r);
    f.u += scale_cols(uby_, p);
    f.v += scale_cols(vby_, p);
  }
  if (!md.zeta.is_zero()) {
    const Vec p = md.zeta.eval(z, r);
    f.u += scale_cols(ub_, p);
    f.v += scale_cols(vb_, p);
  }
  if (!md.nu.is_zero()) {
    f.u += scale_rows(md.nu.a[kSlotU], ut_[r]);
    f.v += scale_rows(md.nu.a[kSlotV], vt_[r]);
  }
  if (affine && !md.chi.is_zero() && !md.chi_profile.is_zero()) {
    const Vec p = md.chi_profile.eval(z, r);
    f.u += md.chi.x[kSlotU] * p.transpose();
    f.v += md.chi.y[kSlotV] * p.transpose();
  }

  // sigma_2: Psi^T p_T . grad T + gamma T + Theta : grad vbar + zeta_hat . vbar + nu_hat . vt + chi_hat
  if (!md.psiT.is_zero() && !md.psiT_profile.is_zero()) {
    for (int i = 0; i <= r; ++i) {
      const Vec p = md.psiT_profile.eval(z, i);
      if (p.isZero(0.0)) continue;
      f.T += binom(r, i) *
             scale_cols(scale_rows(md.psiT.x[kSlotC], Tx_[r - i]) + scale_rows(md.psiT.y[kSlotC], Ty_[r - i]), p);
    }
  }
  if (md.gamma != 0) f.T += md.gamma * T_[r];
  if (!md.theta_profile.is_zero() && !(md.theta_u.is_zero() && md.theta_v.is_zero())) {
    const Mat strain = scale_rows(md.theta_u.x[kSlotC], ubxc_) + scale_rows(md.theta_u.y[kSlotC], ubyc_) +
                       scale_rows(md.theta_v.x[kSlotC], vbxc_) + scale_rows(md.theta_v.y[kSlotC], vbyc_);
    f.T += scale_cols(strain, md.theta_profile.eval(z, r));
  }
  if (!md.zeta_hat_profile.is_zero() && (md.zeta_hat[0] != 0 || md.zeta_hat[1] != 0))
    f.T += scale_cols(md.zeta_hat[0] * ubc_ + md.zeta_hat[1] * vbc_, md.zeta_hat_profile.eval(z, r));
  if (!md.nu_hat_profile.is_zero() && (md.nu_hat[0] != 0 || md.nu_hat[1] != 0)) {
    for (int i = 0; i <= r; ++i)
      f.T += binom(r, i) * scale_cols(md.nu_hat[0] * utc_[r - i] + md.nu_hat[1] * vtc_[r - i],
                                      md.nu_hat_profile.eval(z, i));
  }
  if (affine && !md.chi_hat.is_zero() && !md.chi_hat_profile.is_zero())
    f.T += md.chi_hat.a[kSlotC] * md.chi_hat_profile.eval(z, r).transpose();
  return f;
}

namespace {

GridField face_field(const NoiseModel& m, Mat u, Mat v) {
  GridField f;
  f.comps = {{Stagger::XFace, std::move(u)}, {Stagger::YFace, std::move(v)}};
  f.flavor = BoundaryFlavor::NoSlip;
  f.z = m.z();
  f.wz = m.wz();
  return f;
}

State project_fields(const NoiseModel& m, const SigmaFields& f, BasisPtr b) {
  State s = State::zero(b);
  s.v = project_velocity(*b, f.u, f.v, m.tc(0), m.wz());
  s.T = project_temperature(*b, f.T, m.ts(0), m.wz());
  return s;
}

void check_dW(const NoiseModel& m, const Vec& dW) {
  if (dW.size() != m.K()) throw ConfigError("increment length differs from the noise truncation K");
}

}  // namespace

GridField sigma1_apply(const NoiseModel& m, const State& s, int k) {
  m.mode(k);
  SigmaFields f = NoiseEvaluator(m, s).fields(k);
  return face_field(m, std::move(f.u), std::move(f.v));
}

State sigma1_projected(const NoiseModel& m, const State& s, int k) {
  m.mode(k);
  SigmaFields f = NoiseEvaluator(m, s).fields(k);
  f.T.setZero();
  return project_fields(m, f, s.basis);
}

GridField sigma2_apply(const NoiseModel& m, const State& s, int k) {
  m.mode(k);
  GridField f;
  f.comps = {{Stagger::Center, NoiseEvaluator(m, s).fields(k).T}};
  f.flavor = BoundaryFlavor::NeumannScalar;
  f.z = m.z();
  f.wz = m.wz();
  return f;
}

State sigma_projected(const NoiseModel& m, const State& s, int k) {
  m.mode(k);
  return project_fields(m, NoiseEvaluator(m, s).fields(k), s.basis);
}

State sigma_increment(const NoiseModel& m, const State& s, const Vec& dW) {
  check_dW(m, dW);
  if (m.K() == 0) return State::zero(s.basis);
  const NoiseEvaluator ev(m, s);
  SigmaFields acc = ev.fields(0);
  acc.u *= dW[0];
  acc.v *= dW[0];
  acc.T *= dW[0];
  for (int k = 1; k < m.K(); ++k) {
    if (dW[k] == 0) continue;
    const SigmaFields f = ev.fields(k);
    acc.u += dW[k] * f.u;
    acc.v += dW[k] * f.v;
    acc.T += dW[k] * f.T;
  }
  State out = project_fields(m, acc, s.basis);
  out.time = s.time;
  return out;
}

DzState sigma_increment_dz(const NoiseModel& m, const State& s, const Vec& dW) {
  check_dW(m, dW);
  const TensorBasis& b = m.basis();
  DzState d{Mat::Zero(b.n, b.n_z), Mat::Zero(b.n, b.n_z)};
  if (m.K() == 0) return d;
  const NoiseEvaluator ev(m, s, 1);
  SigmaFields acc{Mat::Zero(b.n_xface(), m.z().size()), Mat::Zero(b.n_yface(), m.z().size()),
                  Mat::Zero(b.n_center(), m.z().size())};
  for (int k = 0; k < m.K(); ++k) {
    const SigmaFields f = ev.fields(k, 1);
    acc.u += dW[k] * f.u;
    acc.v += dW[k] * f.v;
    acc.T += dW[k] * f.T;
  }
  // d_z velocity lives on Dirichlet x sin, d_z temperature on Neumann x cos (k >= 1).
  const double wh = b.grid->dx() * b.grid->dy();
  const Mat tw = m.wz().asDiagonal() * m.ts(0).transpose();
  const auto& D = b.dirichlet.modes;
  d.v = wh * (D.topRows(b.n_xface()).transpose() * (acc.u * tw) + D.bottomRows(b.n_yface()).transpose() * (acc.v * tw));
  d.T = project_temperature(b, acc.T, m.tc(0).bottomRows(b.n_z), m.wz());
  return d;
}

SigmaSplit sigma1_split(const NoiseModel& m, const State& s, int k) {
  const NoiseMode& md = m.mode(k);
  const TensorBasis& b = m.basis();
  const OperatorContext& c = m.ctx();
  // vbar on one node and its stencil gradients.
  Mat Cb = Mat::Zero(b.n, b.n_z + 1);
  Cb.col(0) = s.v.col(0);
  Mat ub, vb;
  synth_velocity(b, Cb, m.tc(0).col(0), ub, vb);
  const Mat ubx = c.dx_u * ub, uby = c.dy_u * ub, vbx = c.dx_v * vb, vby = c.dy_v * vb;

  // A sigma_1 = (A Phi) . grad vbar + (A zeta) vbar + (A chi); A of Psi . grad vt and nu vt vanish.
  const double ax = md.phi_x.mean(), ay = md.phi_y.mean(), az = md.zeta.mean(), ac = md.chi_profile.mean();
  Mat Au = ax * ubx + ay * uby + az * ub + ac * md.chi.x[kSlotU];
  Mat Av = ax * vbx + ay * vby + az * vb + ac * md.chi.y[kSlotV];
  SigmaSplit out;
  out.A.comps = {{Stagger::XFace, Au}, {Stagger::YFace, Av}};
  out.A.flavor = BoundaryFlavor::NoSlip;
  out.A.z = Vec::Zero(1);
  out.A.wz = Vec::Ones(1);

  // R sigma_1 = Psi . grad vt + (R Phi) . grad vbar + (R zeta) vbar + nu vt + R chi.
  auto remainder = [](Profile p) {
    if (!p.a.empty()) p.a[0] = 0.0;
    return p;
  };
  NoiseMode rm = md;
  rm.phi_x = remainder(md.phi_x);
  rm.phi_y = remainder(md.phi_y);
  rm.zeta = remainder(md.zeta);
  rm.chi_profile = remainder(md.chi_profile);
  SigmaFields f = NoiseEvaluator(m, s).fields_for(rm);
  out.R = face_field(m, std::move(f.u), std::move(f.v));
  return out;
}

double leray_defect(const NoiseModel& m, const State& s) {
  const TensorBasis& b = m.basis();
  const DiscreteGrid& g = *b.grid;
  const double h = g.domain().h;
  const NoiseEvaluator ev(m, s);
  double worst = 0;
  for (int k = 0; k < m.K(); ++k) {
    const SigmaFields f = ev.fields(k);
    const Vec au = f.u * m.wz() / h, av = f.v * m.wz() / h;
    Vec pu, pv;
    b.leray->project(au, av, pu, pv);
    const double d = std::sqrt(g.dot(Stagger::XFace, au - pu, au - pu) + g.dot(Stagger::YFace, av - pv, av - pv));
    const double a = std::sqrt(g.dot(Stagger::XFace, au, au) + g.dot(Stagger::YFace, av, av));
    worst = std::max(worst, d / std::max(1.0, a));
  }
  return worst;
}

double h_div_defect(const NoiseModel& m) {
  const DiscreteGrid& g = *m.basis().grid;
  double worst = 0;
  for (int k = 0; k < m.K(); ++k) {
    const NoiseMode& md = m.mode(k);
    const double ac = md.chi_profile.mean();
    if (ac == 0) continue;
    const Vec d = ac * g.div_neumann(md.chi.x[kSlotU], md.chi.y[kSlotV]);
    worst = std::max(worst, std::sqrt(g.dot(Stagger::Center, d, d)));
  }
  return worst;
}

// ---- diagnostics ----

EtaReport compute_eta(const NoiseModel& m) {
  EtaReport e;
  const double h = m.basis().grid->domain().h;
  for (int k = 0; k < m.K(); ++k) {
    const NoiseMode& md = m.mode(k);
    const double pt = md.psiT.sup() * md.psiT_profile.sup();
    e.psiT2 += pt * pt;
    const double ax = md.phi_x.mean(), ay = md.phi_y.mean();
    e.aphi2 += ax * ax + ay * ay;
    const double ps = md.psi.sup();
    e.rpsi2 += ps * ps;
    double phs = 0;
    if (!md.phi_x.is_zero() || !md.phi_y.is_zero()) {
      const int n = 4001;
      for (int i = 0; i < n; ++i) {
        const double z = -h + h * i / (n - 1);
        phs = std::max(phs, std::hypot(md.phi_x.eval(z), md.phi_y.eval(z)));
      }
    }
    e.phi2 += phs * phs;
    const Vec tf = (md.theta_u.x[kSlotC].array().square() + md.theta_u.y[kSlotC].array().square() +
                    md.theta_v.x[kSlotC].array().square() + md.theta_v.y[kSlotC].array().square())
                       .sqrt();
    const double ts = (tf.size() ? tf.maxCoeff() : 0.0) * md.theta_profile.sup();
    e.theta2 += ts * ts;
  }
  e.eta = std::sqrt(std::max({e.psiT2, e.aphi2, e.rpsi2}));
  // Pointwise Cauchy-Schwarz over the transport terms; Theta couples grad vbar into sigma_2.
  const double vel = e.rpsi2 + e.phi2, temp = e.psiT2 + e.theta2;
  e.eta_growth = std::sqrt(e.theta2 > 0 ? vel + temp : std::max(vel, e.psiT2));
  return e;
}

namespace {

double grad_norm2(const OperatorContext& c, const SigmaFields& f, const Vec& wz) {
  const DiscreteGrid& g = *c.basis->grid;
  return weighted_norm2(g, Stagger::XFace, c.dx_u * f.u, wz) + weighted_norm2(g, Stagger::XFace, c.dy_u * f.u, wz) +
         weighted_norm2(g, Stagger::YFace, c.dx_v * f.v, wz) + weighted_norm2(g, Stagger::YFace, c.dy_v * f.v, wz) +
         weighted_norm2(g, Stagger::Center, c.dx_c * f.T, wz) + weighted_norm2(g, Stagger::Center, c.dy_c * f.T, wz);
}

SigmaFields diff(const SigmaFields& a, const SigmaFields& b) { return {a.u - b.u, a.v - b.v, a.T - b.T}; }

}  // namespace

GammaReport compute_gamma(const NoiseModel& m, const std::vector<State>& states) {
  GammaReport g;
  const DiscreteGrid& grid = *m.basis().grid;
  for (size_t i = 0; i + 1 < states.size(); ++i) {
    const State D = states[i] - states[i + 1];
    const double s00 = spectral_norm2(D, 0, 0), s01 = spectral_norm2(D, 0, 1), s02 = spectral_norm2(D, 0, 2);
    const double s10 = spectral_norm2(D, 1, 0), s11 = spectral_norm2(D, 1, 1);
    const double s20 = spectral_norm2(D, 2, 0), s21 = spectral_norm2(D, 2, 1);
    const double n_l2h1 = s00 + s01, n_h1h1 = n_l2h1 + s10 + s11, n_l2h2 = n_l2h1 + s02, n_h2h1 = n_h1h1 + s20 + s21;
    if (!(n_l2h1 > 0)) continue;
    const NoiseEvaluator a(m, states[i], 2), b(m, states[i + 1], 2);
    double l0 = 0, l1 = 0, l2 = 0, lg = 0;
    for (int k = 0; k < m.K(); ++k) {
      const SigmaFields f0 = diff(a.fields(k, 0), b.fields(k, 0));
      l0 += f0.norm2(grid, m.wz());
      lg += grad_norm2(m.ctx(), f0, m.wz());
      l1 += diff(a.fields(k, 1), b.fields(k, 1)).norm2(grid, m.wz());
      l2 += diff(a.fields(k, 2), b.fields(k, 2)).norm2(grid, m.wz());
    }
    g.L2 = std::max(g.L2, std::sqrt(l0 / n_l2h1));
    g.H1L2 = std::max(g.H1L2, std::sqrt(l1 / n_h1h1));
    g.L2H1 = std::max(g.L2H1, std::sqrt(lg / n_l2h2));
    g.H2L2 = std::max(g.H2L2, std::sqrt(l2 / n_h2h1));
    ++g.pairs;
  }
  return g;
}

bool GrowthReport::pass() const {
  return std::all_of(conditions.begin(), conditions.end(), [](const GrowthCondition& c) { return c.pass; });
}

std::string GrowthReport::to_json() const {
  nlohmann::json j;
  j["eta"] = eta;
  j["eta_growth"] = eta_growth;
  j["pass"] = pass();
  for (const auto& c : conditions)
    j["conditions"].push_back({{"name", c.name},
                               {"eta2_declared", c.eta2_declared},
                               {"eta2_fit", c.eta2_fit},
                               {"c_fit", c.c_fit},
                               {"c_growth", c.c_growth},
                               {"samples", c.samples},
                               {"pass", c.pass},
                               {"note", c.note}});
  return j.dump(2);
}

GrowthReport check_growth(const NoiseModel& m, int n_samples, std::mt19937_64& rng, double slack) {
  if (n_samples < 1) throw RangeError("check_growth needs at least one sample");
  const TensorBasis& b = m.basis();
  const BasisPtr bp = m.ctx().basis;
  const DiscreteGrid& g = *b.grid;
  const double h = g.domain().h;

  struct Sample {
    State s;
    double lambda = 0;  // horizontal eigenvalue of a single-mode sample, -1 for random states
    int family = -1;
  };
  std::vector<Sample> samples;
  for (int mi = 0; mi < b.n; ++mi) {
    State bt = State::zero(bp), bc = State::zero(bp), tt = State::zero(bp);
    bt.v(mi, 0) = 1.0;
    bc.v(mi, 1) = 1.0;
    tt.T(mi, 0) = 1.0;
    samples.push_back({bt, b.vel_eig(mi, 0), 0});
    samples.push_back({bc, b.vel_eig(mi, 1), 1});
    samples.push_back({tt, b.temp_eig(mi), 2});
  }
  std::uniform_real_distribution<double> decay(0.5, 2.5);
  for (int i = 0; i < n_samples; ++i) samples.push_back({random_state(bp, rng, decay(rng)), -1.0, -1});

  // Lid nodes for the boundary conditions.
  Vec zl(2), wl = Vec::Ones(2);
  zl << -h, 0.0;

  const double eta2 = m.eta_report().eta_growth * m.eta_report().eta_growth;
  const char* names[6] = {"growth_L2", "growth_H1L2", "growth_L2H1", "growth_H2L2", "lid_sigma1", "lid_sigma2"};
  struct Row {
    double lhs, X, Y;
  };
  std::vector<std::array<Row, 6>> rows;
  rows.reserve(samples.size());
  const int nq = static_cast<int>(m.z().size());
  for (const auto& smp : samples) {
    const State& s = smp.s;
    const NoiseEvaluator ev(m, s, 2);
    double l0 = 0, l1 = 0, l2 = 0, lg = 0, lid1 = 0, lid2 = 0;
    for (int k = 0; k < m.K(); ++k) {
      const SigmaFields f0 = ev.fields(k, 0), f1 = ev.fields(k, 1), f2 = ev.fields(k, 2);
      l0 += f0.norm2(g, m.wz());
      lg += grad_norm2(m.ctx(), f0, m.wz());
      l1 += f1.norm2(g, m.wz());
      l2 += f2.norm2(g, m.wz());
      for (int c : {0, nq - 1}) {
        lid1 += g.weights(Stagger::XFace).dot(f1.u.col(c).cwiseAbs2()) + g.weights(Stagger::YFace).dot(f1.v.col(c).cwiseAbs2());
        lid2 += g.weights(Stagger::Center).dot(f0.T.col(c).cwiseAbs2());
      }
    }
    const double s00 = spectral_norm2(s, 0, 0), s01 = spectral_norm2(s, 0, 1), s02 = spectral_norm2(s, 0, 2);
    const double s10 = spectral_norm2(s, 1, 0), s11 = spectral_norm2(s, 1, 1);
    const double s20 = spectral_norm2(s, 2, 0), s21 = spectral_norm2(s, 2, 1);
    // Lid traces of d_z v, T and their gradients.
    const GridField vz = velocity_field(s, zl, wl, 1), T0 = temperature_field(s, zl, wl, 0);
    const OperatorContext& c = m.ctx();
    auto lid2norm = [&](Stagger st, const Mat& f) { return g.weights(st).dot(f.cwiseAbs2().rowwise().sum()); };
    const Mat& vzu = vz.comps[0].values;
    const Mat& vzv = vz.comps[1].values;
    const double Xl = lid2norm(Stagger::XFace, vzu) + lid2norm(Stagger::YFace, vzv) + lid2norm(Stagger::Center, T0.comps[0].values);
    const double Yl1 = lid2norm(Stagger::XFace, c.dx_u * vzu) + lid2norm(Stagger::XFace, c.dy_u * vzu) +
                       lid2norm(Stagger::YFace, c.dx_v * vzv) + lid2norm(Stagger::YFace, c.dy_v * vzv);
    const Mat& Tl = T0.comps[0].values;
    const double Yl2 = lid2norm(Stagger::Center, c.dx_c * Tl) + lid2norm(Stagger::Center, c.dy_c * Tl);
    rows.push_back({Row{l0, 1 + s00, s01}, Row{l1, 1 + s00 + s10, s11}, Row{lg, 1 + s00 + s01, s02},
                    Row{l2, 1 + s00 + s10 + s20, s21}, Row{lid1, Xl, Yl1}, Row{lid2, Xl, Yl2}});
  }

  GrowthReport rep;
  rep.eta = m.eta();
  rep.eta_growth = m.eta_report().eta_growth;
  const double e_allow = (1 + slack) * eta2;
  for (int ci = 0; ci < 6; ++ci) {
    GrowthCondition gc;
    gc.name = names[ci];
    gc.eta2_declared = eta2;
    gc.samples = static_cast<int>(samples.size());
    double scale = 0;
    for (const auto& r : rows) scale = std::max(scale, r[ci].lhs);
    const double tiny = 1e-20 * (1 + scale);
    int zero_rhs_violations = 0;
    // Residual constant per sample.
    std::vector<double> resid(rows.size(), 0.0);
    for (size_t i = 0; i < rows.size(); ++i) {
      const Row& r = rows[i][ci];
      if (r.Y > 0 && samples[i].family >= 0) gc.eta2_fit = std::max(gc.eta2_fit, r.lhs / r.Y);
      const double excess = r.lhs - e_allow * r.Y;
      if (r.X > 0) {
        resid[i] = std::max(0.0, excess) / r.X;
        gc.c_fit = std::max(gc.c_fit, resid[i]);
      } else if (excess > tiny) {
        ++zero_rhs_violations;
      }
    }
    // Resolution uniformity of c: compare the top and bottom eigenvalue quarters of each family.
    double top = 0, bottom = 0;
    for (int fam = 0; fam < 3; ++fam) {
      std::vector<std::pair<double, double>> lr;
      for (size_t i = 0; i < rows.size(); ++i)
        if (samples[i].family == fam) lr.push_back({samples[i].lambda, resid[i]});
      std::sort(lr.begin(), lr.end());
      const size_t q = std::max<size_t>(1, lr.size() / 4);
      for (size_t i = 0; i < q && i < lr.size(); ++i) bottom = std::max(bottom, lr[i].second);
      for (size_t i = lr.size() - q; i < lr.size(); ++i) top = std::max(top, lr[i].second);
    }
    const double floor = 1e-12 * (1 + gc.c_fit);
    gc.c_growth = top <= floor ? 1.0 : top / std::max(bottom, floor);
    std::string note;
    if (zero_rhs_violations) note += std::to_string(zero_rhs_violations) + " samples exceed a vanishing right-hand side; ";
    if (gc.c_growth > 2.0) note += "c grows with the horizontal eigenvalue (gradient term not covered by eta); ";
    gc.pass = zero_rhs_violations == 0 && gc.c_growth <= 2.0;
    gc.note = note;
    rep.conditions.push_back(gc);
  }
  return rep;
}

// ---- Wiener driver ----

Vec wiener_increments(std::mt19937_64& rng, int K, double dt) {
  if (!(dt > 0)) throw RangeError("Wiener increments need dt > 0");
  if (K < 0) throw RangeError("Wiener increments need K >= 0");
  std::normal_distribution<double> nd(0.0, std::sqrt(dt));
  Vec out(K);
  for (int k = 0; k < K; ++k) out[k] = nd(rng);
  return out;
}

std::mt19937_64 path_rng(std::uint64_t seed, std::uint64_t path) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(path), static_cast<std::uint32_t>(path >> 32), 0x68736773u};
  return std::mt19937_64(seq);
}

}  // namespace hsgs
