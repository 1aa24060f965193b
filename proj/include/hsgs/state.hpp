#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "hsgs/basis.hpp"

namespace hsgs {

/// Physical constants of the model.
struct PhysicalConstants {
  double nu_v = 1.0;    ///< horizontal viscosity
  double nu_T = 1.0;    ///< horizontal diffusivity
  double k0 = 0.0;      ///< Coriolis parameter
  double rho0 = 1.0;    ///< reference density
  double beta_T = 0.0;  ///< thermal expansion
  double g = 9.81;      ///< gravity
  double T_r = 0.0;     ///< reference temperature
};

/// Prognostic state U = (v, T) in spectral coefficients.
/// v(m, k): k = 0 barotropic (Stokes), k >= 1 baroclinic (Dirichlet x cos).
/// T(m, k-1): Neumann x sin_k.
struct State {
  BasisPtr basis;
  Mat v;
  Mat T;
  double time = 0.0;

  static State zero(BasisPtr b);
  int size() const { return static_cast<int>(v.size() + T.size()); }
  Vec flat() const;
  static State from_flat(BasisPtr b, const Vec& x);

  double dot(const State& o) const { return (v.array() * o.v.array()).sum() + (T.array() * o.T.array()).sum(); }
  double norm() const { return std::sqrt(dot(*this)); }
  bool finite() const { return v.allFinite() && T.allFinite(); }

  State& operator+=(const State& o);
  State& operator-=(const State& o);
  State& operator*=(double a);
};

State operator+(State a, const State& b);
State operator-(State a, const State& b);
State operator*(double s, State a);

/// Boundary flavour carried by a grid field.
enum class BoundaryFlavor { NoSlip, NeumannScalar, None };

struct GridComponent {
  Stagger stagger = Stagger::Center;
  Mat values;  ///< rows: horizontal points of the stagger, cols: vertical nodes
};

/// Scalar or vector field sampled on the staggered grid at vertical nodes z.
struct GridField {
  std::vector<GridComponent> comps;
  BoundaryFlavor flavor = BoundaryFlavor::None;
  Vec z, wz;  ///< vertical nodes and trapezoid weights; 2D fields use z = {0}, wz = {1}

  int nz() const { return static_cast<int>(z.size()); }
  GridField& operator+=(const GridField& o);
  GridField& operator-=(const GridField& o);
  GridField& operator*=(double a);
};

GridField operator+(GridField a, const GridField& b);
GridField operator-(GridField a, const GridField& b);
GridField operator*(double s, GridField a);

/// Band-limited random state: coefficient (m, k) ~ N(0,1) / (1 + m + k)^decay.
State random_state(BasisPtr b, std::mt19937_64& rng, double decay = 1.0);

/// P~_{n'}: zero all coefficients with horizontal index m > n' (1-based). Q_{n'} = I - P~_{n'}.
State truncate_Pn(const State& s, int n_prime);
State truncate_Qn(const State& s, int n_prime);

// ---- low-level synthesis / projection on arbitrary vertical nodes ----

/// Velocity synthesis: rows of `table` are vertical profiles for k = 0..n_z.
void synth_velocity(const TensorBasis& b, const Mat& coeffs, const Mat& table, Mat& u, Mat& v);
/// Weighted projection of (u, v) onto velocity elements with vertical test profiles `table`.
Mat project_velocity(const TensorBasis& b, const Mat& u, const Mat& v, const Mat& table, const Vec& wq);
/// Temperature synthesis / projection; rows of `table` are k = 1..n_z.
Mat synth_temperature(const TensorBasis& b, const Mat& coeffs, const Mat& table);
Mat project_temperature(const TensorBasis& b, const Mat& f, const Mat& table, const Vec& wq);

// ---- state <-> grid ----

/// d^r_z v and d^r_z T on vertical nodes z (defaults to the grid's Nz nodes).
GridField velocity_field(const State& s, int r = 0);
GridField velocity_field(const State& s, const Vec& z, const Vec& wz, int r = 0);
GridField temperature_field(const State& s, int r = 0);
GridField temperature_field(const State& s, const Vec& z, const Vec& wz, int r = 0);

struct StateFields {
  GridField v, T;
};
StateFields to_grid(const State& s);
/// Project grid fields (on the basis grid's Nz nodes) onto the basis.
State to_spectral(const GridField& v, const GridField& T, BasisPtr b);

// ---- barotropic / baroclinic split ----

/// Spectral: keep only k = 0 (vbar) or only k >= 1 (vtilde); T is dropped from vbar, kept in remainder.
State vertical_average(const State& s);
State baroclinic_remainder(const State& s);
/// 2D barotropic field (1/h) int v dz from coefficients: one vertical node.
GridField barotropic_field(const State& s);
/// Quadrature vertical average of a grid field: one vertical node.
GridField vertical_average(const GridField& f, double h);
GridField baroclinic_remainder(const GridField& f, double h);

/// w = -div_H int_{-h}^z v dz' at cell centres on nodes z (analytic antiderivative).
/// Throws ConsistencyError when the lid value exceeds the round-off tolerance.
GridField diagnose_w(const State& s);
GridField diagnose_w(const State& s, const Vec& z, const Vec& wz);

/// Discrete divergence of a 2D face field (XFace, YFace components, column c).
Vec horizontal_divergence(const DiscreteGrid& g, const GridField& v, int col);

// ---- projections ----

/// 2D Leray projection of a (XFace, YFace) field, column by column. q receives the potential.
GridField leray_project_2d(const LerayProjector& P, const GridField& f, GridField* q = nullptr);
/// P_sigma v = vtilde + P_G vbar for a 3D face field.
GridField hydrostatic_project(const LerayProjector& P, const GridField& v, double h);

// ---- pressure ----

/// p = p_s + g int_z^0 rho dz', rho = rho0 (1 - beta_T (T - T_r)), cumulative trapezoid on T's nodes.
GridField reconstruct_pressure(const Vec& p_s, const GridField& T, const PhysicalConstants& c);
/// Same with the exact antiderivative of the sine modes of a state.
GridField reconstruct_pressure(const Vec& p_s, const State& s, const PhysicalConstants& c);

// ---- checkpoints ----

void write_checkpoint(const std::string& path, const State& s, std::uint64_t config_hash);
/// Reads a checkpoint written for basis b; config hash returned through `hash` when non-null.
State read_checkpoint(const std::string& path, BasisPtr b, std::uint64_t* hash = nullptr);

}  // namespace hsgs
