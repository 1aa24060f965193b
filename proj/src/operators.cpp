#include "hsgs/operators.hpp"

#include <cmath>

#include "hsgs/error.hpp"

namespace hsgs {

namespace {

SpMat probe(const std::function<Vec(const Vec&)>& op, int n_in, int n_out) {
  return DiscreteGrid::assemble(op, n_in, n_out);
}

// Advecting velocity and w interpolated onto the three staggers; columns are vertical nodes.
struct Advector {
  Mat u_u, v_u, w_u;  // on XFace
  Mat u_v, v_v, w_v;  // on YFace
  Mat u_c, v_c, w_c;  // on Center
};

Advector make_advector(const OperatorContext& c, const Mat& u, const Mat& v, const Mat& w) {
  Advector a;
  a.u_u = u;
  a.v_u = c.v_to_u * v;
  a.w_u = c.c_to_u * w;
  a.u_v = c.u_to_v * u;
  a.v_v = v;
  a.w_v = c.c_to_v * w;
  a.u_c = c.u_to_c * u;
  a.v_c = c.v_to_c * v;
  a.w_c = w;
  return a;
}

// a.grad f + w fz - (a.grad)^T f: the part tested against e in the skew form.
Mat skew_g1(const SpMat& Dx, const SpMat& Dy, const Mat& a1, const Mat& a2, const Mat& w, const Mat& f,
            const Mat& fz) {
  Mat g = a1.cwiseProduct(Dx * f) + a2.cwiseProduct(Dy * f) + w.cwiseProduct(fz);
  g -= Dx.transpose() * a1.cwiseProduct(f);
  g -= Dy.transpose() * a2.cwiseProduct(f);
  return g;
}

Mat advective(const SpMat& Dx, const SpMat& Dy, const Mat& a1, const Mat& a2, const Mat& w, const Mat& f,
              const Mat& fz) {
  return a1.cwiseProduct(Dx * f) + a2.cwiseProduct(Dy * f) + w.cwiseProduct(fz);
}

// Projection onto Dirichlet modes times the rows of `table`.
Mat project_dirichlet(const TensorBasis& b, const Mat& gu, const Mat& gv, const Mat& table, const Vec& wq) {
  const double wh = b.grid->dx() * b.grid->dy();
  const Mat tw = wq.asDiagonal() * table.transpose();
  const auto& D = b.dirichlet.modes;
  return wh * (D.topRows(b.n_xface()).transpose() * (gu * tw) + D.bottomRows(b.n_yface()).transpose() * (gv * tw));
}

Mat w_on_nodes(const State& U, const Vec& z, const Vec& wz) { return diagnose_w(U, z, wz).comps[0].values; }

Mat div_on_nodes(const OperatorContext& c, const Mat& u, const Mat& v) { return c.div_u * u + c.div_v * v; }

void check_pair(const State& a, const State& b) {
  if (a.basis != b.basis) throw ConfigError("operator arguments live on different bases");
}

}  // namespace

ContextPtr OperatorContext::make(BasisPtr b, const PhysicalConstants& pc, double dealias) {
  if (!(pc.nu_v > 0) || !(pc.nu_T > 0)) throw ConfigError("viscosity and diffusivity must be positive");
  if (!(pc.k0 >= 0)) throw ConfigError("Coriolis parameter must be non-negative");
  if (!(dealias >= 1)) throw ConfigError("dealiasing factor must be >= 1");
  auto c = std::make_shared<OperatorContext>();
  c->basis = b;
  c->phys = pc;
  c->dealias = dealias;
  const DiscreteGrid& g = *b->grid;
  const int nu = g.size(Stagger::XFace), nv = g.size(Stagger::YFace), nc = g.size(Stagger::Center);
  using S = Stagger;
  auto d0 = [&](S s, bool x, CellBC bc) {
    const int n = g.size(s);
    return probe([&](const Vec& f) { return x ? g.d0x(s, f, bc) : g.d0y(s, f, bc); }, n, n);
  };
  c->dx_u = d0(S::XFace, true, CellBC::Dirichlet);
  c->dy_u = d0(S::XFace, false, CellBC::Dirichlet);
  c->dx_v = d0(S::YFace, true, CellBC::Dirichlet);
  c->dy_v = d0(S::YFace, false, CellBC::Dirichlet);
  c->dx_c = d0(S::Center, true, CellBC::Neumann);
  c->dy_c = d0(S::Center, false, CellBC::Neumann);
  c->v_to_u = probe([&](const Vec& f) { return g.yface_to_xface(f); }, nv, nu);
  c->u_to_v = probe([&](const Vec& f) { return g.xface_to_yface(f); }, nu, nv);
  c->c_to_u = probe([&](const Vec& f) { return g.center_to_xface(f); }, nc, nu);
  c->c_to_v = probe([&](const Vec& f) { return g.center_to_yface(f); }, nc, nv);
  c->u_to_c = probe([&](const Vec& f) { return g.xface_to_center(f); }, nu, nc);
  c->v_to_c = probe([&](const Vec& f) { return g.yface_to_center(f); }, nv, nc);
  c->div_u = probe([&](const Vec& f) { return g.div_neumann(f, Vec::Zero(nv)); }, nu, nc);
  c->div_v = probe([&](const Vec& f) { return g.div_neumann(Vec::Zero(nu), f); }, nv, nc);

  const double wh = g.dx() * g.dy();
  auto rot = [&](const Mat& M) {
    const Mat Mu = M.topRows(nu), Mv = M.bottomRows(nv);
    const Mat ru = -(c->v_to_u * Mv), rv = c->u_to_v * Mu;
    Mat R = wh * (Mu.transpose() * ru + Mv.transpose() * rv);
    return Mat(0.5 * (R - R.transpose()));  // skew by construction; removes round-off asymmetry
  };
  c->rot_stokes = rot(b->stokes.modes);
  c->rot_dirichlet = rot(b->dirichlet.modes);

  const Mat& N = b->neumann.modes;
  Mat gx(nu, N.cols()), gy(nv, N.cols());
  for (int j = 0; j < N.cols(); ++j) {
    Vec a, bb;
    g.grad_neumann(N.col(j), a, bb);
    gx.col(j) = a;
    gy.col(j) = bb;
  }
  const Mat& D = b->dirichlet.modes;
  c->grad_coupling = wh * (D.topRows(nu).transpose() * gx + D.bottomRows(nv).transpose() * gy);
  return c;
}

State apply_AH(const State& s) {
  const TensorBasis& b = *s.basis;
  State r = s;
  for (int m = 0; m < b.n; ++m) {
    r.v(m, 0) *= b.vel_eig(m, 0);
    for (int k = 1; k <= b.n_z; ++k) r.v(m, k) *= b.vel_eig(m, k);
    r.T.row(m) *= b.temp_eig(m);
  }
  return r;
}

State viscous_AH(const OperatorContext& ctx, const State& s) {
  State r = apply_AH(s);
  r.v *= ctx.phys.nu_v;
  r.T *= ctx.phys.nu_T;
  return r;
}

State nonlinear_B(const OperatorContext& c, const State& U, const State& Us) {
  check_pair(U, Us);
  const TensorBasis& b = *U.basis;
  const Vec &zq = b.zq, &wq = b.wq;
  const Mat tc0 = b.vcos.table(zq, 0), tc1 = b.vcos.table(zq, 1);
  const Mat ts0 = b.vsin.table(zq, 0), ts1 = b.vsin.table(zq, 1);

  Mat u, v, us, vs, usz, vsz;
  synth_velocity(b, U.v, tc0, u, v);
  const Advector a = make_advector(c, u, v, w_on_nodes(U, zq, wq));
  synth_velocity(b, Us.v, tc0, us, vs);
  synth_velocity(b, Us.v, tc1, usz, vsz);
  const Mat Ts = synth_temperature(b, Us.T, ts0), Tsz = synth_temperature(b, Us.T, ts1);

  State r = State::zero(U.basis);
  const Mat g1u = skew_g1(c.dx_u, c.dy_u, a.u_u, a.v_u, a.w_u, us, usz);
  const Mat g1v = skew_g1(c.dx_v, c.dy_v, a.u_v, a.v_v, a.w_v, vs, vsz);
  r.v = 0.5 * (project_velocity(b, g1u, g1v, tc0, wq) -
               project_velocity(b, a.w_u.cwiseProduct(us), a.w_v.cwiseProduct(vs), tc1, wq));
  const Mat g1c = skew_g1(c.dx_c, c.dy_c, a.u_c, a.v_c, a.w_c, Ts, Tsz);
  r.T = 0.5 * (project_temperature(b, g1c, ts0, wq) - project_temperature(b, a.w_c.cwiseProduct(Ts), ts1, wq));
  r.time = U.time;
  return r;
}

DzState dz_coefficients(const State& s) {
  const TensorBasis& b = *s.basis;
  DzState d{Mat(b.n, b.n_z), Mat(b.n, b.n_z)};
  for (int k = 1; k <= b.n_z; ++k) {
    const double kappa = b.vcos.wavenumber(k);
    d.v.col(k - 1) = -kappa * s.v.col(k);
    d.T.col(k - 1) = kappa * s.T.col(k - 1);
  }
  return d;
}

DzState nonlinear_B_dz(const OperatorContext& c, const State& U, const State& Us) {
  check_pair(U, Us);
  const TensorBasis& b = *U.basis;
  const Vec &zq = b.zq, &wq = b.wq;
  const int nz = b.n_z;
  Mat tc[3], ts[3];
  for (int r = 0; r < 3; ++r) {
    tc[r] = b.vcos.table(zq, r);
    ts[r] = b.vsin.table(zq, r);
  }
  Mat u, v, uz, vz;
  synth_velocity(b, U.v, tc[0], u, v);
  synth_velocity(b, U.v, tc[1], uz, vz);
  const Advector a = make_advector(c, u, v, w_on_nodes(U, zq, wq));
  const Advector az = make_advector(c, uz, vz, -div_on_nodes(c, u, v));  // d_z w = -div_H v

  Mat f[3][2];  // advected velocity and its z-derivatives
  for (int r = 0; r < 3; ++r) synth_velocity(b, Us.v, tc[r], f[r][0], f[r][1]);
  Mat T[3];
  for (int r = 0; r < 3; ++r) T[r] = synth_temperature(b, Us.T, ts[r]);

  // d_z G1 = G1(a_z; f, f_z) + G1(a; f_z, f_zz), d_z G2 = w_z f + w f_z.
  const Mat d1u = skew_g1(c.dx_u, c.dy_u, az.u_u, az.v_u, az.w_u, f[0][0], f[1][0]) +
                  skew_g1(c.dx_u, c.dy_u, a.u_u, a.v_u, a.w_u, f[1][0], f[2][0]);
  const Mat d1v = skew_g1(c.dx_v, c.dy_v, az.u_v, az.v_v, az.w_v, f[0][1], f[1][1]) +
                  skew_g1(c.dx_v, c.dy_v, a.u_v, a.v_v, a.w_v, f[1][1], f[2][1]);
  const Mat d2u = az.w_u.cwiseProduct(f[0][0]) + a.w_u.cwiseProduct(f[1][0]);
  const Mat d2v = az.w_v.cwiseProduct(f[0][1]) + a.w_v.cwiseProduct(f[1][1]);
  const Mat d1c = skew_g1(c.dx_c, c.dy_c, az.u_c, az.v_c, az.w_c, T[0], T[1]) +
                  skew_g1(c.dx_c, c.dy_c, a.u_c, a.v_c, a.w_c, T[1], T[2]);
  const Mat d2c = az.w_c.cwiseProduct(T[0]) + a.w_c.cwiseProduct(T[1]);

  // Velocity shadow lives on Dirichlet x s_k, temperature shadow on Neumann x c_k (k >= 1).
  DzState d;
  d.v = 0.5 * (project_dirichlet(b, d1u, d1v, ts[0], wq) - project_dirichlet(b, d2u, d2v, ts[1], wq));
  d.T = 0.5 * (project_temperature(b, d1c, tc[0].bottomRows(nz), wq) -
               project_temperature(b, d2c, tc[1].bottomRows(nz), wq));
  return d;
}

StateFields advective_field(const OperatorContext& c, const State& U, const State& Us, const Vec& z,
                            const Vec& wz) {
  check_pair(U, Us);
  const TensorBasis& b = *U.basis;
  const Mat tc0 = b.vcos.table(z, 0), tc1 = b.vcos.table(z, 1);
  const Mat ts0 = b.vsin.table(z, 0), ts1 = b.vsin.table(z, 1);
  Mat u, v, us, vs, usz, vsz;
  synth_velocity(b, U.v, tc0, u, v);
  const Advector a = make_advector(c, u, v, w_on_nodes(U, z, wz));
  synth_velocity(b, Us.v, tc0, us, vs);
  synth_velocity(b, Us.v, tc1, usz, vsz);
  StateFields out;
  out.v.flavor = BoundaryFlavor::None;
  out.v.z = z;
  out.v.wz = wz;
  out.v.comps = {{Stagger::XFace, advective(c.dx_u, c.dy_u, a.u_u, a.v_u, a.w_u, us, usz)},
                 {Stagger::YFace, advective(c.dx_v, c.dy_v, a.u_v, a.v_v, a.w_v, vs, vsz)}};
  out.T.flavor = BoundaryFlavor::None;
  out.T.z = z;
  out.T.wz = wz;
  out.T.comps = {{Stagger::Center, advective(c.dx_c, c.dy_c, a.u_c, a.v_c, a.w_c, synth_temperature(b, Us.T, ts0),
                                             synth_temperature(b, Us.T, ts1))}};
  return out;
}

State coriolis_E(const OperatorContext& c, const State& s) {
  State r = State::zero(s.basis);
  const double k0 = c.phys.k0;
  r.v.col(0) = k0 * (c.rot_stokes * s.v.col(0));
  if (s.v.cols() > 1) r.v.rightCols(s.v.cols() - 1) = k0 * (c.rot_dirichlet * s.v.rightCols(s.v.cols() - 1));
  r.time = s.time;
  return r;
}

GridField rotate_k(const OperatorContext& c, const GridField& v) {
  if (v.comps.size() != 2) throw ConfigError("rotate_k: expected a face vector field");
  GridField r = v;
  r.comps[0].values = -c.phys.k0 * (c.v_to_u * v.comps[1].values);
  r.comps[1].values = c.phys.k0 * (c.u_to_v * v.comps[0].values);
  return r;
}

State baroclinic_pressure_Apr(const OperatorContext& c, const State& s) {
  const TensorBasis& b = *s.basis;
  State r = State::zero(s.basis);
  // int_z^0 s_k projects onto (h / k pi) c_k for k >= 1; the barotropic part is a gradient and drops out.
  const double bg = c.phys.beta_T * c.phys.g;
  for (int k = 1; k <= b.n_z; ++k) r.v.col(k) = -bg / b.vcos.wavenumber(k) * (c.grad_coupling * s.T.col(k - 1));
  r.time = s.time;
  return r;
}

Forcing Forcing::zero(const TensorBasis& b) { return {Mat::Zero(b.n, b.n_z + 1), Mat::Zero(b.n, b.n_z)}; }

Forcing Forcing::from_grid(const GridField& fv, const GridField& fT, BasisPtr b) {
  const State s = to_spectral(fv, fT, std::move(b));
  return {s.v, s.T};
}

State assemble_F(const OperatorContext& c, const State& s, const Forcing& f) {
  State r = baroclinic_pressure_Apr(c, s);
  r += coriolis_E(c, s);
  if (f.fv.rows() != r.v.rows() || f.fv.cols() != r.v.cols() || f.fT.rows() != r.T.rows() ||
      f.fT.cols() != r.T.cols())
    throw ConfigError("assemble_F: forcing shape does not match the basis");
  r.v -= f.fv;
  r.T -= f.fT;
  return r;
}

GridField barotropic_N(const OperatorContext& c, const State& s) {
  const TensorBasis& b = *s.basis;
  const double h = b.grid->domain().h;
  Mat ut, vt;
  synth_velocity(b, baroclinic_remainder(s).v, b.vcos.table(b.zq, 0), ut, vt);
  const Mat div = div_on_nodes(c, ut, vt);
  const Mat nu = ut.cwiseProduct(c.dx_u * ut) + (c.v_to_u * vt).cwiseProduct(c.dy_u * ut) +
                 (c.c_to_u * div).cwiseProduct(ut);
  const Mat nv = (c.u_to_v * ut).cwiseProduct(c.dx_v * vt) + vt.cwiseProduct(c.dy_v * vt) +
                 (c.c_to_v * div).cwiseProduct(vt);
  GridField out;
  out.flavor = BoundaryFlavor::None;
  out.z = Vec::Zero(1);
  out.wz = Vec::Ones(1);
  out.comps = {{Stagger::XFace, nu * b.wq / h}, {Stagger::YFace, nv * b.wq / h}};
  return out;
}

Vec recover_surface_pressure(const OperatorContext& c, const State& s) {
  const TensorBasis& b = *s.basis;
  const DiscreteGrid& g = *b.grid;
  const double h = g.domain().h;
  const GridField vbar = barotropic_field(s);
  const Vec &ub = vbar.comps[0].values.col(0), &vb = vbar.comps[1].values.col(0);
  Vec lu, lv;
  g.lap_vec(ub, vb, lu, lv);
  const StateFields adv = advective_field(c, s, s, b.zq, b.wq);
  Vec ru = c.phys.nu_v * lu - adv.v.comps[0].values * b.wq / h + c.phys.k0 * (c.v_to_u * vb);
  Vec rv = c.phys.nu_v * lv - adv.v.comps[1].values * b.wq / h - c.phys.k0 * (c.u_to_v * ub);
  // (1/h) int_{-h}^0 int_z^0 s_k = -(h / k pi) sqrt(2/h) (-1)^k
  Vec Tavg = Vec::Zero(b.n);
  for (int k = 1; k <= b.n_z; ++k)
    Tavg += -(1.0 / b.vcos.wavenumber(k)) * std::sqrt(2.0 / h) * (k % 2 == 0 ? 1.0 : -1.0) * s.T.col(k - 1);
  Vec gx, gy;
  g.grad_neumann(b.neumann.modes * Tavg, gx, gy);
  const double bg = c.phys.beta_T * c.phys.g;
  ru += bg * gx;
  rv += bg * gy;
  return c.phys.rho0 * b.leray->solve_poisson(g.div_neumann(ru, rv));
}

}  // namespace hsgs
