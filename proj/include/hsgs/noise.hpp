#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "hsgs/operators.hpp"

namespace hsgs {

/// Vertical profile on (-h, 0). Cos: a_0 + sum_j a_j cos(j pi (z+h)/h), so d_z vanishes on the lids.
/// Sin: sum_j a_j sin(j pi (z+h)/h), so the profile itself vanishes on the lids (a_0 unused).
struct Profile {
  Parity parity = Parity::Cos;
  double h = 1.0;
  std::vector<double> a;  ///< a[j], j = 0..order

  static Profile constant(double h, double c) { return {Parity::Cos, h, {c}}; }
  static Profile zero(double h) { return {Parity::Cos, h, {}}; }
  double eval(double z, int r = 0) const;
  Vec eval(const Vec& z, int r = 0) const;
  double mean() const;  ///< vertical average
  double sup() const;   ///< max |profile| on a dense sample of [-h, 0]
  int order() const { return a.empty() ? 0 : static_cast<int>(a.size()) - 1; }
  bool is_zero() const;
};

/// Slots of the three horizontal staggers a noise coefficient is sampled on.
enum Slot { kSlotU = 0, kSlotV = 1, kSlotC = 2 };

/// Planar scalar sampled on XFace, YFace and Center.
struct PlanarScalar {
  std::array<Vec, 3> a;
  static PlanarScalar zero(const DiscreteGrid& g);
  static PlanarScalar sample(const DiscreteGrid& g, const std::function<double(double, double)>& f);
  double sup() const;
  bool is_zero() const;
};

/// Planar 2-vector sampled on XFace, YFace and Center.
struct PlanarVector {
  std::array<Vec, 3> x, y;
  static PlanarVector zero(const DiscreteGrid& g);
  static PlanarVector constant(const DiscreteGrid& g, double ax, double ay);
  static PlanarVector sample(const DiscreteGrid& g, const std::function<std::array<double, 2>(double, double)>& f);
  double sup() const;  ///< max Euclidean length over all sample points
  bool is_zero() const;
};

/// Coefficients of one noise direction e_k:
///   sigma_1 e_k = Psi . grad vt + Phi(z) . grad vbar + zeta(z) vbar + nu(x,y) vt + chi(x,y) p_chi(z)
///   sigma_2 e_k = psiT(x,y) p_T(z) . grad T + gamma T + Theta(z) : grad vbar + zeta_hat(z) . vbar
///                 + nu_hat(z) . vt + chi_hat(x,y) p_chi_hat(z)
/// Theta : grad vbar = theta_u . grad ubar + theta_v . grad vbar_2.
struct NoiseMode {
  PlanarVector psi;
  Profile phi_x, phi_y;
  PlanarVector psiT;
  Profile psiT_profile;
  Profile zeta;
  PlanarScalar nu;
  PlanarVector chi;
  Profile chi_profile;
  double gamma = 0.0;
  PlanarVector theta_u, theta_v;
  Profile theta_profile;          ///< Sin
  std::array<double, 2> zeta_hat{0, 0};
  Profile zeta_hat_profile;       ///< Sin
  std::array<double, 2> nu_hat{0, 0};
  Profile nu_hat_profile;         ///< Sin
  PlanarScalar chi_hat;
  Profile chi_hat_profile;        ///< Sin

  static NoiseMode zero(const DiscreteGrid& g);
};

/// Sup-norm sums behind eta. psi is the coefficient of the baroclinic transport.
struct EtaReport {
  double psiT2 = 0;     ///< sum ||Psi^T_k||_inf^2
  double aphi2 = 0;     ///< sum |A Phi_k|^2
  double rpsi2 = 0;     ///< sum ||Psi_k||_inf^2 (the transport acting on the R part)
  double phi2 = 0;      ///< sum ||Phi_k||_inf^2
  double theta2 = 0;    ///< sum ||Theta_k||_inf^2
  double eta = 0;       ///< sqrt(max(psiT2, aphi2, rpsi2))
  double eta_growth = 0;  ///< intensity bounding the gradient terms of the growth conditions
};

/// Immutable truncated noise model on a basis (K directions).
class NoiseModel {
 public:
  /// Validates profile parities and sample sizes; computes eta. Throws ConfigError.
  NoiseModel(ContextPtr ctx, std::vector<NoiseMode> modes);

  const OperatorContext& ctx() const { return *ctx_; }
  ContextPtr context() const { return ctx_; }
  const TensorBasis& basis() const { return *ctx_->basis; }
  int K() const { return static_cast<int>(modes_.size()); }
  const NoiseMode& mode(int k) const;
  const EtaReport& eta_report() const { return eta_; }
  double eta() const { return eta_.eta; }
  /// Vertical quadrature exact for every product the noise produces.
  const Vec& z() const { return z_; }
  const Vec& wz() const { return wz_; }
  int max_profile_order() const { return order_; }
  /// Vertical mode tables (cos rows k = 0..n_z, sin rows k = 1..n_z) on z(), derivative order r <= 2.
  const Mat& tc(int r) const { return tc_[r]; }
  const Mat& ts(int r) const { return ts_[r]; }

 private:
  ContextPtr ctx_;
  std::vector<NoiseMode> modes_;
  EtaReport eta_;
  Vec z_, wz_;
  int order_ = 0;
  std::array<Mat, 3> tc_, ts_;
};

/// Parameters of the built-in families. Amplitudes carry the factor k^-decay (k = 1..K).
struct NoiseParams {
  std::string family = "none";  ///< none | trig | constant
  int K = 0;
  double decay = 2.0;
  double psi = 0.0;          ///< Psi_k amplitude
  double phi = 0.0;          ///< A Phi_k amplitude
  double phi_var = 0.0;      ///< relative cos(pi (z+h)/h) part of Phi_k
  double psiT = 0.0;
  double zeta = 0.0, nu = 0.0, chi = 0.0;
  double gamma = 0.0, theta = 0.0, zeta_hat = 0.0, nu_hat = 0.0, chi_hat = 0.0;
  void validate() const;
};

NoiseModel make_noise(ContextPtr ctx, const NoiseParams& p);

// ---- evaluation ----

/// d_z^r of (sigma_1 e_k, sigma_2 e_k) on the model's vertical nodes, before projection.
struct SigmaFields {
  Mat u, v;  ///< XFace, YFace
  Mat T;     ///< Center
  double norm2(const DiscreteGrid& g, const Vec& wz) const;
};

/// Precomputes the state-dependent fields once; each direction then costs elementwise products.
class NoiseEvaluator {
 public:
  NoiseEvaluator(const NoiseModel& model, const State& s, int max_r = 0);
  SigmaFields fields(int k, int r = 0) const;
  /// Linear part only (affine chi, chi_hat dropped).
  SigmaFields linear_fields(int k, int r = 0) const;
  /// Same evaluation for an explicit mode (sampled on the model's grid and nodes).
  SigmaFields fields_for(const NoiseMode& md, int r = 0, bool affine = true) const;

 private:
  const NoiseModel& m_;
  int max_r_;
  // Per vertical order r: vt components and gradients, T and gradients.
  std::vector<Mat> ut_, vt_, utx_, uty_, vtx_, vty_, T_, Tx_, Ty_;
  Mat ub_, vb_, ubx_, uby_, vbx_, vby_;  // vbar on the nodes (z-independent columns)
  Mat ubc_, vbc_, ubxc_, ubyc_, vbxc_, vbyc_;  // vbar pieces on Center
  std::vector<Mat> utc_, vtc_;
};

/// sigma_1(v) e_k before projection (XFace, YFace on the model's nodes).
GridField sigma1_apply(const NoiseModel& m, const State& s, int k);
/// Galerkin projection of sigma_1(v) e_k onto the velocity basis (T part zero).
State sigma1_projected(const NoiseModel& m, const State& s, int k);
/// sigma_2(U) e_k before projection (Center).
GridField sigma2_apply(const NoiseModel& m, const State& s, int k);
/// Projection of the full direction (sigma_1, sigma_2) e_k.
State sigma_projected(const NoiseModel& m, const State& s, int k);
/// sum_k dW_k P sigma(U) e_k; dW must have length K.
State sigma_increment(const NoiseModel& m, const State& s, const Vec& dW);
/// Coefficients of d_z sum_k dW_k P sigma(U) e_k on the d_z families (projection of d_z sigma).
DzState sigma_increment_dz(const NoiseModel& m, const State& s, const Vec& dW);

/// A sigma_1 e_k (planar) and R sigma_1 e_k from the split formulas, applied term by term.
struct SigmaSplit {
  GridField A, R;
};
SigmaSplit sigma1_split(const NoiseModel& m, const State& s, int k);

/// max_k ||(1 - P_G) A sigma_1(v) e_k|| relative to max(1, ||A sigma_1 e_k||).
double leray_defect(const NoiseModel& m, const State& s);
/// max_k ||div_H A chi_k|| (the only part of h_k not divergence-free by construction).
double h_div_defect(const NoiseModel& m);

// ---- diagnostics ----

EtaReport compute_eta(const NoiseModel& m);

struct GammaReport {
  double L2 = 0, H1L2 = 0, L2H1 = 0, H2L2 = 0;
  int pairs = 0;
};
/// Empirical Lipschitz constants over consecutive pairs of `states`, in the four norm pairs.
GammaReport compute_gamma(const NoiseModel& m, const std::vector<State>& states);

struct GrowthCondition {
  std::string name;
  double eta2_declared = 0;  ///< eta_growth^2
  double eta2_fit = 0;       ///< max LHS / Y over gradient-dominated samples
  double c_fit = 0;          ///< max (LHS - (1+slack) eta2_declared Y)_+ / X over all samples
  /// Ratio of that c over the top and bottom eigenvalue quarters of the single-mode samples.
  /// Stays near 1 when c is resolution-uniform; grows like lambda when a gradient term escapes eta.
  double c_growth = 1;
  int samples = 0;
  bool pass = true;
  std::string note;
};

struct GrowthReport {
  std::vector<GrowthCondition> conditions;
  double eta = 0, eta_growth = 0;
  bool pass() const;
  std::string to_json() const;
};

/// Fits the growth conditions (L2, H1L2, L2H1, H2L2) and the two lid conditions on single-mode
/// (gradient-dominated) states plus n_samples random states.
GrowthReport check_growth(const NoiseModel& m, int n_samples, std::mt19937_64& rng, double slack = 0.05);

// ---- Wiener driver ----

/// K independent N(0, dt) increments. Throws RangeError when dt <= 0 or K < 0.
Vec wiener_increments(std::mt19937_64& rng, int K, double dt);
/// Independent stream for path `path` of a run seeded with `seed`.
std::mt19937_64 path_rng(std::uint64_t seed, std::uint64_t path);

}  // namespace hsgs
