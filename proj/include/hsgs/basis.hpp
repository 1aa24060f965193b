#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>

#include "hsgs/eigensolver.hpp"
#include "hsgs/grid.hpp"
#include "hsgs/leray.hpp"

namespace hsgs {

enum class Family { Stokes, DirichletVec, NeumannScalar };

/// Eigenpairs of one horizontal operator. Modes are columns, orthonormal in
/// the weighted grid inner product. Vector families stack [u (XFace); v (YFace)].
struct HorizontalFamily {
  Family kind = Family::NeumannScalar;
  Vec eigenvalues;
  Mat modes;
  Vec residuals;  ///< ||A e - lambda e|| / ||e||
};

HorizontalFamily eigensolve_neumann_scalar(const DiscreteGrid& grid, int n, const EigenOptions& opt = {});
HorizontalFamily eigensolve_dirichlet_vector(const DiscreteGrid& grid, int n, const EigenOptions& opt = {});
HorizontalFamily eigensolve_stokes(const DiscreteGrid& grid, const LerayProjector& leray, int n,
                                   const EigenOptions& opt = {});

/// Residuals ||A e - lambda e||/||e|| of stored pairs against the discrete operator.
Vec family_residuals(const DiscreteGrid& grid, const LerayProjector& leray, const HorizontalFamily& f);

enum class Parity { Cos, Sin };

/// Analytic vertical modes on (-h, 0), unit L2 norm.
/// Cos: c_0 = 1/sqrt(h), c_k = sqrt(2/h) cos(k pi (z+h)/h). Sin: s_k = sqrt(2/h) sin(...), k >= 1.
struct VerticalModes {
  Parity parity = Parity::Cos;
  double h = 1.0;
  int n_z = 1;

  int k_min() const { return parity == Parity::Cos ? 0 : 1; }
  int count() const { return n_z - k_min() + 1; }
  double wavenumber(int k) const;  ///< k pi / h
  double eigenvalue(int k) const;  ///< (k pi / h)^2
  /// d^r/dz^r of mode k at z.
  double eval(int k, double z, int r = 0) const;
  /// Rows = modes k_min..n_z, columns = nodes.
  Mat table(const Vec& z, int r = 0) const;
};

VerticalModes vertical_modes(double h, int n_z, Parity parity);

/// Product basis. Velocity element (m, k): k = 0 uses the Stokes mode times c_0,
/// k >= 1 the Dirichlet mode times c_k. Temperature element (m, k): psi_m s_k.
class TensorBasis {
 public:
  std::shared_ptr<const DiscreteGrid> grid;
  std::shared_ptr<const LerayProjector> leray;
  HorizontalFamily stokes, dirichlet, neumann;
  VerticalModes vcos, vsin;
  int n = 0, n_z = 0;
  double dealias = 1.5;
  Vec zq, wq;  ///< quadrature used for products (nonlinear terms, noise)

  int n_vel() const { return n * (n_z + 1); }
  int n_temp() const { return n * n_z; }
  /// Horizontal modes for the velocity vertical index k.
  const Mat& vel_modes(int k) const { return k == 0 ? stokes.modes : dirichlet.modes; }
  /// Horizontal eigenvalue for velocity element (m, k) and temperature element m (0-based m).
  double vel_eig(int m, int k) const { return k == 0 ? stokes.eigenvalues[m] : dirichlet.eigenvalues[m]; }
  double temp_eig(int m) const { return neumann.eigenvalues[m]; }
  /// lambda_bar at 1-based level m: max(mu_m, muhat_m, lambda_m).
  double lambda_bar(int m) const;
  int n_xface() const { return grid->size(Stagger::XFace); }
  int n_yface() const { return grid->size(Stagger::YFace); }
  int n_center() const { return grid->size(Stagger::Center); }
  std::uint64_t cache_key() const;
};

using BasisPtr = std::shared_ptr<const TensorBasis>;

/// Trim families to n, attach vertical modes and product quadrature, validate.
BasisPtr assemble_basis(std::shared_ptr<const DiscreteGrid> grid, std::shared_ptr<const LerayProjector> leray,
                        HorizontalFamily stokes, HorizontalFamily dirichlet, HorizontalFamily neumann, int n,
                        int n_z, double dealias = 1.5);

/// Build (or load from cache_dir, when given) the full basis for a domain.
BasisPtr build_basis(const CylinderDomain& domain, int n, int n_z, double dealias = 1.5,
                     const std::optional<std::string>& cache_dir = std::nullopt, const EigenOptions& opt = {});

/// Cache key and file name for (domain, n, n_z, operator flavour).
std::uint64_t basis_cache_key(const CylinderDomain& domain, int n, int n_z);
std::string basis_cache_path(const std::string& dir, const CylinderDomain& domain, int n, int n_z);
void save_basis(const TensorBasis& b, const std::string& path);
/// Returns false if the file is absent or does not match the requested parameters.
bool load_basis_families(const std::string& path, const CylinderDomain& domain, int n, int n_z,
                         HorizontalFamily& stokes, HorizontalFamily& dirichlet, HorizontalFamily& neumann);

}  // namespace hsgs
