#pragma once

#include <memory>

#include "hsgs/state.hpp"

namespace hsgs {

/// Immutable operator context: basis, constants and precomputed stencils.
struct OperatorContext {
  BasisPtr basis;
  PhysicalConstants phys;
  double dealias = 1.5;

  // Centred differences per stagger (XFace/YFace no-slip, Center Neumann).
  SpMat dx_u, dy_u, dx_v, dy_v, dx_c, dy_c;
  // Interpolations.
  SpMat v_to_u, u_to_v, c_to_u, c_to_v, u_to_c, v_to_c;
  // Horizontal divergence of a face field: [div_u | div_v].
  SpMat div_u, div_v;
  // Rotation couplings M^T W rot(M) for the Stokes and Dirichlet families (skew).
  Mat rot_stokes, rot_dirichlet;
  // <phi_m (Dirichlet), grad psi_j> couplings for the baroclinic pressure term.
  Mat grad_coupling;

  /// Throws ConfigError unless nu_v, nu_T > 0, k0 >= 0 and dealias >= 1.
  static std::shared_ptr<const OperatorContext> make(BasisPtr b, const PhysicalConstants& c, double dealias = 1.5);
};

using ContextPtr = std::shared_ptr<const OperatorContext>;

/// A_H U: each coefficient multiplied by its horizontal eigenvalue.
State apply_AH(const State& s);
/// (nu_v, nu_T)-weighted A_H.
State viscous_AH(const OperatorContext& ctx, const State& s);

/// B(U, Us) in skew-symmetric form on the product quadrature, projected to the basis.
State nonlinear_B(const OperatorContext& ctx, const State& U, const State& Us);

/// Coefficients of d_z of a state: velocity on (Dirichlet x s_k), temperature on (Neumann x c_k), k = 1..n_z.
struct DzState {
  Mat v, T;
  double dot(const DzState& o) const { return (v.array() * o.v.array()).sum() + (T.array() * o.T.array()).sum(); }
};
DzState dz_coefficients(const State& s);
/// d_z of B(U, Us) built from product-rule fields (independent of dz_coefficients).
DzState nonlinear_B_dz(const OperatorContext& ctx, const State& U, const State& Us);

/// Advective (non-skew) pre-projection fields (v.grad) vs + w(v) d_z vs and (v.grad) Ts + w d_z Ts
/// on the vertical nodes z.
StateFields advective_field(const OperatorContext& ctx, const State& U, const State& Us, const Vec& z, const Vec& wz);

/// E U = (P k x v, 0).
State coriolis_E(const OperatorContext& ctx, const State& s);
/// Pre-projection k x v on a face field.
GridField rotate_k(const OperatorContext& ctx, const GridField& v);

/// A_pr U = (-P beta_T g int_z^0 grad_H T, 0).
State baroclinic_pressure_Apr(const OperatorContext& ctx, const State& s);

/// External forcing in spectral coefficients (F_U = (P f_v, f_T)).
struct Forcing {
  Mat fv, fT;
  static Forcing zero(const TensorBasis& b);
  /// Project grid forcing fields (basis grid nodes) onto the basis.
  static Forcing from_grid(const GridField& fv, const GridField& fT, BasisPtr b);
  bool is_zero() const { return fv.isZero(0.0) && fT.isZero(0.0); }
};

/// F(U) = A_pr U + E U - F_U.
State assemble_F(const OperatorContext& ctx, const State& s, const Forcing& f);

/// N(vt) = (1/h) int (vt.grad vt + (div vt) vt) dz for the baroclinic part of s.
GridField barotropic_N(const OperatorContext& ctx, const State& s);

/// Surface pressure from the barotropic balance: (1/rho0) grad p_s is the gradient part of
/// nu lap vbar - avg[(v.grad)v + w d_z v] - k x vbar + beta_T g avg int_z^0 grad T. Zero mean.
Vec recover_surface_pressure(const OperatorContext& ctx, const State& s);

}  // namespace hsgs
