#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <functional>
#include <utility>
#include <vector>

namespace hsgs {

/// Geometry of M = G x (-h, 0) with G = (0,Lx) x (0,Ly), plus grid counts.
struct CylinderDomain {
  double Lx = 1.0;
  double Ly = 1.0;
  double h = 1.0;
  int Nx = 16;
  int Ny = 16;
  int Nz = 9;

  /// Throws ConfigError on non-positive lengths or counts below 4.
  void validate() const;
  bool operator==(const CylinderDomain&) const = default;
};

/// Horizontal staggered locations of the MAC grid.
///
/// Center     ((i+1/2)dx, (j+1/2)dy)        i<Nx,   j<Ny
/// XFace      (i dx, (j+1/2)dy)             0<i<Nx, j<Ny     (u)
/// YFace      ((i+1/2)dx, j dy)             i<Nx,   0<j<Ny   (v)
/// XEdge      (i dx, j dy)                  0<i<Nx, 0<=j<=Ny (d_y u)
/// YEdge      (i dx, j dy)                  0<=i<=Nx, 0<j<Ny (d_x v)
/// XFaceFull  (i dx, (j+1/2)dy)             0<=i<=Nx, j<Ny   (Dirichlet scalar flux)
/// YFaceFull  ((i+1/2)dx, j dy)             i<Nx, 0<=j<=Ny
///
/// Storage is row-major in (i, j): index = i * ny + j.
enum class Stagger { Center, XFace, YFace, XEdge, YEdge, XFaceFull, YFaceFull };

const char* stagger_name(Stagger s);

struct Shape {
  int nx = 0;
  int ny = 0;
  int size() const { return nx * ny; }
};

/// Boundary treatment for centred differences along a cell-type axis.
enum class CellBC { Neumann, Dirichlet };

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using SpMat = Eigen::SparseMatrix<double>;

/// Staggered horizontal grid plus the trapezoid vertical quadrature on Nz nodes.
///
/// All horizontal operators are matrix-free. Differences are built from three
/// 1D kernels whose weighted adjoints are exact, so grad/div pairs satisfy
/// summation by parts to round-off.
class DiscreteGrid {
 public:
  explicit DiscreteGrid(const CylinderDomain& domain);

  const CylinderDomain& domain() const { return domain_; }
  double dx() const { return dx_; }
  double dy() const { return dy_; }
  double area() const { return domain_.Lx * domain_.Ly; }

  Shape shape(Stagger s) const;
  int size(Stagger s) const { return shape(s).size(); }
  /// Quadrature weights (dx*dy, halved on boundary nodes of full axes).
  const Vec& weights(Stagger s) const;
  std::pair<double, double> coord(Stagger s, int i, int j) const;
  /// Coordinates of every point of a stagger, in storage order.
  std::vector<std::pair<double, double>> coords(Stagger s) const;

  /// Weighted inner product on a stagger.
  double dot(Stagger s, const Vec& a, const Vec& b) const;

  // Scalar, Neumann flavour: Center <-> (XFace, YFace).
  void grad_neumann(const Vec& p, Vec& gx, Vec& gy) const;
  Vec div_neumann(const Vec& u, const Vec& v) const;
  Vec lap_neumann(const Vec& p) const;

  // Scalar, Dirichlet flavour (ghost reflection): Center <-> (XFaceFull, YFaceFull).
  void grad_dirichlet(const Vec& p, Vec& gx, Vec& gy) const;
  Vec div_dirichlet(const Vec& gx, const Vec& gy) const;
  Vec lap_dirichlet(const Vec& p) const;

  // Vector, no-slip flavour. u on XFace -> (d_x u on Center, d_y u on XEdge);
  // v on YFace -> (d_x v on YEdge, d_y v on Center).
  void grad_u(const Vec& u, Vec& ux, Vec& uy) const;
  void grad_v(const Vec& v, Vec& vx, Vec& vy) const;
  /// Negative adjoints of grad_u / grad_v.
  Vec div_u(const Vec& ux, const Vec& uy) const;
  Vec div_v(const Vec& vx, const Vec& vy) const;
  void lap_vec(const Vec& u, const Vec& v, Vec& lu, Vec& lv) const;

  /// Centred differences on a stagger (ghost reflection on cell axes).
  Vec d0x(Stagger s, const Vec& f, CellBC bc) const;
  Vec d0y(Stagger s, const Vec& f, CellBC bc) const;
  /// Plain transposes of d0x / d0y (weights are uniform on these staggers).
  Vec d0x_t(Stagger s, const Vec& f, CellBC bc) const;
  Vec d0y_t(Stagger s, const Vec& f, CellBC bc) const;

  // Averaging between staggers; missing neighbours count as zero.
  Vec yface_to_xface(const Vec& v) const;  ///< 4-point, transpose of xface_to_yface
  Vec xface_to_yface(const Vec& u) const;
  Vec center_to_xface(const Vec& c) const;
  Vec center_to_yface(const Vec& c) const;
  Vec xface_to_center(const Vec& u) const;
  Vec yface_to_center(const Vec& v) const;

  /// Vertical trapezoid nodes z_l = -h + l h/(Nz-1) and weights.
  const Vec& z_nodes() const { return z_; }
  const Vec& z_weights() const { return wz_; }

  /// Assemble a sparse matrix by probing a linear map with unit vectors.
  static SpMat assemble(const std::function<Vec(const Vec&)>& op, int n_in, int n_out);

 private:
  CylinderDomain domain_;
  double dx_ = 0.0, dy_ = 0.0;
  std::vector<Vec> weights_;
  Vec z_, wz_;
};

/// Trapezoid rule on n equispaced nodes over (-h, 0).
void trapezoid(double h, int n, Vec& nodes, Vec& weights);

}  // namespace hsgs
