#pragma once

#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "hsgs/operators.hpp"

namespace hsgs {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// ||d_z^dz D_H^dxy F||_{L^p_z L^q_xy}; D_H^1 is the horizontal gradient, D_H^2 the horizontal Laplacian.
struct NormSpec {
  double p = 2.0;
  double q = 2.0;
  int dz = 0;
  int dxy = 0;
  void validate() const;
};

/// Which part of a state a norm sees.
enum class Part { All, Velocity, Temperature, Barotropic, Baroclinic };

/// Grid-side anisotropic norms on the basis' product quadrature nodes.
/// Vertical derivatives are analytic, horizontal ones use the grid stencils.
class NormEngine {
 public:
  explicit NormEngine(BasisPtr b);

  const TensorBasis& basis() const { return *b_; }
  const Vec& z() const { return b_->zq; }
  const Vec& wz() const { return b_->wq; }

  /// Component fields of d_z^dz D^dxy of the selected part (rows: stagger points, cols: nodes).
  std::vector<GridComponent> components(const State& s, int dz, int dxy, Part part = Part::All) const;
  /// Mixed norm of a component list: inner horizontal L^q per node (components summed), outer L^p.
  double mixed(const std::vector<GridComponent>& comps, double p, double q) const;
  double norm(const State& s, const NormSpec& spec, Part part = Part::All) const;

  // Composite norms (Hilbert-type components combined in l2).
  double l2(const State& s, Part part = Part::All) const { return norm(s, {2, 2, 0, 0}, part); }
  double h1(const State& s, Part part = Part::All) const;          ///< ||U||_{H1}
  double l2z_h1xy(const State& s, Part part = Part::All) const;    ///< ||U||_{L2_z H1_xy}
  double l2z_h2xy(const State& s, Part part = Part::All) const;    ///< ||U||_{L2_z H2_xy}
  double h1z_h1xy(const State& s, Part part = Part::All) const;    ///< ||U||_{H1_z H1_xy}
  double h2z_h1xy(const State& s, Part part = Part::All) const;    ///< ||U||_{H2_z H1_xy}
  double h1z_l2xy(const State& s, Part part = Part::All) const;    ///< ||U||_{H1_z L2_xy}
  double h1z_lq(const State& s, double q, Part part = Part::All) const;  ///< ||U||_{H1_z L^q_xy}
  double linf_l4(const State& s, Part part = Part::All) const { return norm(s, {kInf, 4, 0, 0}, part); }
  double h1z_l4(const State& s, Part part = Part::All) const { return h1z_lq(s, 4, part); }

 private:
  BasisPtr b_;
  Mat tc_[3], ts_[3];
  SpMat ux_, uy_, vx_, vy_, tx_, ty_, lu_, lv_, lt_;
};

/// Spectral H^s-type norm ||A_H^alpha U|| from the eigenvalues.
double spectral_alpha_norm(const State& s, double alpha);
/// ||d_z^dz (-Delta_H)^{p/2} U||^2 from coefficients: sum kappa^{2 dz} lambda^p c^2 (exact on the basis).
double spectral_norm2(const State& s, int dz, double p);

/// Seeded family of band-limited random states with varied spectral decay and amplitude.
std::vector<State> sample_family(BasisPtr b, std::uint64_t seed, int count);

// ---- inequality suites ----

struct InequalityResult {
  std::string name;
  double constant = 0.0;    ///< family maximum of LHS / RHS (calibrated)
  double reference = 0.0;   ///< fixture constant used for the check (0 when not applicable)
  int samples = 0;
  int violations = 0;
  bool pass = true;
  bool informational = false;  ///< reported, not counted in the suite verdict
};

struct SuiteReport {
  std::string suite;
  std::uint64_t seed = 0;
  std::vector<InequalityResult> results;
  std::vector<std::string> notes;
  bool pass() const;
  std::string to_json() const;
};

/// Calibrated constants keyed by inequality name.
using ConstantTable = std::map<std::string, double>;

/// Anisotropic Hoelder on pairs drawn from the family, several exponent tuples; slack 1e-8.
SuiteReport check_holder(const NormEngine& ne, const std::vector<State>& family, std::uint64_t seed);
/// Both interpolation inequalities (p in {2,4,6} for the vertical one) against calibrated constants.
SuiteReport check_interpolations(const NormEngine& ne, const std::vector<State>& family, std::uint64_t seed,
                                 const ConstantTable* reference = nullptr, double headroom = 1.1);
/// Logarithmic Sobolev inequality with r1 = 132 on the velocity part.
SuiteReport check_log_sobolev(const NormEngine& ne, const std::vector<State>& family, std::uint64_t seed,
                              double lambda = 0.5, const ConstantTable* reference = nullptr,
                              double headroom = 1.1);
/// The six nonlinearity estimates.
SuiteReport check_nonlinearity_suite(const OperatorContext& ctx, const NormEngine& ne,
                                     const std::vector<State>& family, std::uint64_t seed,
                                     const ConstantTable* reference = nullptr, double headroom = 1.1);
/// Poincare inequalities for P_n / Q_n with lambda_bar_n; levels must not exceed the basis size.
SuiteReport check_poincare(const std::vector<State>& family, const std::vector<int>& levels,
                           const std::vector<std::pair<double, double>>& alphas, std::uint64_t seed);

/// Constants of every calibrated inequality in a report set.
ConstantTable constants_of(const std::vector<SuiteReport>& reports);

/// Calibration fixture: constants at a base resolution and at doubled resolution.
struct CalibrationFixture {
  int version = 1;
  std::uint64_t seed = 0;
  int samples = 0;
  CylinderDomain base_domain, doubled_domain;
  int base_n = 0, base_nz = 0, doubled_n = 0, doubled_nz = 0;
  ConstantTable base, doubled;

  std::string to_json() const;
  static CalibrationFixture from_json(const std::string& text);
  static CalibrationFixture load(const std::string& path);
  void save(const std::string& path) const;
};

/// Run the calibrated suites at one resolution.
std::vector<SuiteReport> run_calibrated_suites(BasisPtr b, std::uint64_t seed, int samples,
                                               const ConstantTable* reference = nullptr, double headroom = 1.1);
/// Default fixture setup (base resolution and its doubling), computed from scratch.
CalibrationFixture calibrate(std::uint64_t seed = 20240601, int samples = 500,
                             const std::optional<std::string>& cache_dir = std::nullopt);

}  // namespace hsgs
