#include "hsgs/grid.hpp"

#include <cmath>
#include <string>

#include "hsgs/error.hpp"

namespace hsgs {

void CylinderDomain::validate() const {
  if (!(Lx > 0.0) || !(Ly > 0.0) || !(h > 0.0))
    throw ConfigError("domain: Lx, Ly, h must be strictly positive");
  if (Nx < 4 || Ny < 4 || Nz < 4)
    throw ConfigError("domain: Nx, Ny, Nz must be >= 4 (got " + std::to_string(Nx) + ", " +
                      std::to_string(Ny) + ", " + std::to_string(Nz) + ")");
}

const char* stagger_name(Stagger s) {
  switch (s) {
    case Stagger::Center: return "center";
    case Stagger::XFace: return "xface";
    case Stagger::YFace: return "yface";
    case Stagger::XEdge: return "xedge";
    case Stagger::YEdge: return "yedge";
    case Stagger::XFaceFull: return "xface_full";
    case Stagger::YFaceFull: return "yface_full";
  }
  return "?";
}

void trapezoid(double h, int n, Vec& nodes, Vec& weights) {
  if (n < 2) throw ConfigError("trapezoid rule needs at least 2 nodes");
  nodes.resize(n);
  weights.resize(n);
  const double dz = h / (n - 1);
  for (int l = 0; l < n; ++l) {
    nodes[l] = -h + l * dz;
    weights[l] = dz;
  }
  nodes[n - 1] = 0.0;
  weights[0] = weights[n - 1] = 0.5 * dz;
}

namespace {

// Axis point families. Cell: N points; Node: interior nodes 1..N-1; Full: nodes 0..N.
enum class AxisKind { Cell, Node, Full };

struct AxisPair {
  AxisKind x, y;
};

AxisPair axes_of(Stagger s) {
  switch (s) {
    case Stagger::Center: return {AxisKind::Cell, AxisKind::Cell};
    case Stagger::XFace: return {AxisKind::Node, AxisKind::Cell};
    case Stagger::YFace: return {AxisKind::Cell, AxisKind::Node};
    case Stagger::XEdge: return {AxisKind::Node, AxisKind::Full};
    case Stagger::YEdge: return {AxisKind::Full, AxisKind::Node};
    case Stagger::XFaceFull: return {AxisKind::Full, AxisKind::Cell};
    case Stagger::YFaceFull: return {AxisKind::Cell, AxisKind::Full};
  }
  return {AxisKind::Cell, AxisKind::Cell};
}

int axis_count(AxisKind k, int N) {
  switch (k) {
    case AxisKind::Cell: return N;
    case AxisKind::Node: return N - 1;
    case AxisKind::Full: return N + 1;
  }
  return 0;
}

double axis_coord(AxisKind k, int i, double d) {
  switch (k) {
    case AxisKind::Cell: return (i + 0.5) * d;
    case AxisKind::Node: return (i + 1) * d;
    case AxisKind::Full: return i * d;
  }
  return 0.0;
}

double axis_weight(AxisKind k, int i, int N, double d) {
  if (k == AxisKind::Full && (i == 0 || i == N)) return 0.5 * d;
  return d;
}

// A strided 1D line: element t lives at p[t * s].
struct CLine {
  const double* p;
  int s;
  double operator[](int t) const { return p[t * s]; }
};
struct Line {
  double* p;
  int s;
  double& operator[](int t) const { return p[t * s]; }
};

// 1D kernels. N = number of cells on the axis, d = spacing.
void node_to_cell(CLine u, Line o, int N, double d) {
  for (int i = 0; i < N; ++i) {
    const double r = (i + 1 <= N - 1) ? u[i] : 0.0;  // node i+1
    const double l = (i >= 1) ? u[i - 1] : 0.0;      // node i
    o[i] = (r - l) / d;
  }
}
void node_to_cell_adj(CLine c, Line o, int N, double d) {
  for (int k = 1; k <= N - 1; ++k) o[k - 1] = (c[k - 1] - c[k]) / d;
}
void cell_to_node(CLine c, Line o, int N, double d) {
  for (int k = 1; k <= N - 1; ++k) o[k - 1] = (c[k] - c[k - 1]) / d;
}
void cell_to_node_adj(CLine b, Line o, int N, double d) {
  for (int i = 0; i < N; ++i) {
    const double bi = (i >= 1) ? b[i - 1] : 0.0;
    const double bn = (i + 1 <= N - 1) ? b[i] : 0.0;
    o[i] = (bi - bn) / d;
  }
}
void cell_to_full(CLine c, Line o, int N, double d) {
  o[0] = 2.0 * c[0] / d;
  for (int k = 1; k <= N - 1; ++k) o[k] = (c[k] - c[k - 1]) / d;
  o[N] = -2.0 * c[N - 1] / d;
}
void cell_to_full_adj(CLine b, Line o, int N, double d) {
  for (int i = 0; i < N; ++i) o[i] = (b[i] - b[i + 1]) / d;
}

// Centred differences on one line.
void d0_node(CLine u, Line o, int n, double d, bool transpose) {
  const double sgn = transpose ? -1.0 : 1.0;
  for (int t = 0; t < n; ++t) {
    const double r = (t + 1 < n) ? u[t + 1] : 0.0;
    const double l = (t >= 1) ? u[t - 1] : 0.0;
    o[t] = sgn * (r - l) / (2.0 * d);
  }
}
void d0_cell(CLine c, Line o, int n, double d, double s, bool transpose) {
  const double k = 1.0 / (2.0 * d);
  if (!transpose) {
    for (int t = 0; t < n; ++t) {
      const double r = (t + 1 < n) ? c[t + 1] : s * c[n - 1];
      const double l = (t >= 1) ? c[t - 1] : s * c[0];
      o[t] = (r - l) * k;
    }
  } else {
    for (int t = 0; t < n; ++t) {
      double acc = 0.0;
      if (t >= 1) acc += c[t - 1];
      if (t + 1 < n) acc -= c[t + 1];
      if (t == 0) acc -= s * c[0];
      if (t == n - 1) acc += s * c[n - 1];
      o[t] = acc * k;
    }
  }
}

enum class Dir { X, Y };

// Apply a line kernel along one axis; the other axis extent is shared.
template <class F>
void along(Dir dir, const Vec& in, Shape si, Vec& out, Shape so, F&& kernel) {
  out.setZero(so.size());
  if (dir == Dir::X) {
    for (int j = 0; j < si.ny; ++j)
      kernel(CLine{in.data() + j, si.ny}, Line{out.data() + j, so.ny});
  } else {
    for (int i = 0; i < si.nx; ++i)
      kernel(CLine{in.data() + i * si.ny, 1}, Line{out.data() + i * so.ny, 1});
  }
}

void check_size(const Vec& f, int n, const char* what) {
  if (f.size() != n)
    throw ConfigError(std::string("grid: size mismatch in ") + what + " (got " +
                      std::to_string(f.size()) + ", expected " + std::to_string(n) + ")");
}

}  // namespace

DiscreteGrid::DiscreteGrid(const CylinderDomain& domain) : domain_(domain) {
  domain_.validate();
  dx_ = domain_.Lx / domain_.Nx;
  dy_ = domain_.Ly / domain_.Ny;
  for (int s = 0; s <= static_cast<int>(Stagger::YFaceFull); ++s) {
    const auto st = static_cast<Stagger>(s);
    const Shape sh = shape(st);
    const AxisPair ax = axes_of(st);
    Vec w(sh.size());
    for (int i = 0; i < sh.nx; ++i)
      for (int j = 0; j < sh.ny; ++j)
        w[i * sh.ny + j] =
            axis_weight(ax.x, i, domain_.Nx, dx_) * axis_weight(ax.y, j, domain_.Ny, dy_);
    weights_.push_back(std::move(w));
  }
  trapezoid(domain_.h, domain_.Nz, z_, wz_);
}

Shape DiscreteGrid::shape(Stagger s) const {
  const AxisPair ax = axes_of(s);
  return {axis_count(ax.x, domain_.Nx), axis_count(ax.y, domain_.Ny)};
}

const Vec& DiscreteGrid::weights(Stagger s) const { return weights_[static_cast<int>(s)]; }

std::pair<double, double> DiscreteGrid::coord(Stagger s, int i, int j) const {
  const AxisPair ax = axes_of(s);
  return {axis_coord(ax.x, i, dx_), axis_coord(ax.y, j, dy_)};
}

std::vector<std::pair<double, double>> DiscreteGrid::coords(Stagger s) const {
  const Shape sh = shape(s);
  std::vector<std::pair<double, double>> out;
  out.reserve(sh.size());
  for (int i = 0; i < sh.nx; ++i)
    for (int j = 0; j < sh.ny; ++j) out.push_back(coord(s, i, j));
  return out;
}

double DiscreteGrid::dot(Stagger s, const Vec& a, const Vec& b) const {
  const Vec& w = weights(s);
  check_size(a, w.size(), "dot");
  check_size(b, w.size(), "dot");
  return (w.array() * a.array() * b.array()).sum();
}

void DiscreteGrid::grad_neumann(const Vec& p, Vec& gx, Vec& gy) const {
  check_size(p, size(Stagger::Center), "grad_neumann");
  const int Nx = domain_.Nx, Ny = domain_.Ny;
  const double dx = dx_, dy = dy_;
  along(Dir::X, p, shape(Stagger::Center), gx, shape(Stagger::XFace),
        [&](CLine a, Line b) { cell_to_node(a, b, Nx, dx); });
  along(Dir::Y, p, shape(Stagger::Center), gy, shape(Stagger::YFace),
        [&](CLine a, Line b) { cell_to_node(a, b, Ny, dy); });
}

Vec DiscreteGrid::div_neumann(const Vec& u, const Vec& v) const {
  check_size(u, size(Stagger::XFace), "div_neumann");
  check_size(v, size(Stagger::YFace), "div_neumann");
  const int Nx = domain_.Nx, Ny = domain_.Ny;
  const double dx = dx_, dy = dy_;
  Vec a, b;
  along(Dir::X, u, shape(Stagger::XFace), a, shape(Stagger::Center),
        [&](CLine x, Line y) { cell_to_node_adj(x, y, Nx, dx); });
  along(Dir::Y, v, shape(Stagger::YFace), b, shape(Stagger::Center),
        [&](CLine x, Line y) { cell_to_node_adj(x, y, Ny, dy); });
  return -(a + b);
}

Vec DiscreteGrid::lap_neumann(const Vec& p) const {
  Vec gx, gy;
  grad_neumann(p, gx, gy);
  return div_neumann(gx, gy);
}

void DiscreteGrid::grad_dirichlet(const Vec& p, Vec& gx, Vec& gy) const {
  check_size(p, size(Stagger::Center), "grad_dirichlet");
  const int Nx = domain_.Nx, Ny = domain_.Ny;
  const double dx = dx_, dy = dy_;
  along(Dir::X, p, shape(Stagger::Center), gx, shape(Stagger::XFaceFull),
        [&](CLine a, Line b) { cell_to_full(a, b, Nx, dx); });
  along(Dir::Y, p, shape(Stagger::Center), gy, shape(Stagger::YFaceFull),
        [&](CLine a, Line b) { cell_to_full(a, b, Ny, dy); });
}

Vec DiscreteGrid::div_dirichlet(const Vec& gx, const Vec& gy) const {
  check_size(gx, size(Stagger::XFaceFull), "div_dirichlet");
  check_size(gy, size(Stagger::YFaceFull), "div_dirichlet");
  const int Nx = domain_.Nx, Ny = domain_.Ny;
  const double dx = dx_, dy = dy_;
  Vec a, b;
  along(Dir::X, gx, shape(Stagger::XFaceFull), a, shape(Stagger::Center),
        [&](CLine x, Line y) { cell_to_full_adj(x, y, Nx, dx); });
  along(Dir::Y, gy, shape(Stagger::YFaceFull), b, shape(Stagger::Center),
        [&](CLine x, Line y) { cell_to_full_adj(x, y, Ny, dy); });
  return -(a + b);
}

Vec DiscreteGrid::lap_dirichlet(const Vec& p) const {
  Vec gx, gy;
  grad_dirichlet(p, gx, gy);
  return div_dirichlet(gx, gy);
}

void DiscreteGrid::grad_u(const Vec& u, Vec& ux, Vec& uy) const {
  check_size(u, size(Stagger::XFace), "grad_u");
  const int Nx = domain_.Nx, Ny = domain_.Ny;
  const double dx = dx_, dy = dy_;
  along(Dir::X, u, shape(Stagger::XFace), ux, shape(Stagger::Center),
        [&](CLine a, Line b) { node_to_cell(a, b, Nx, dx); });
  along(Dir::Y, u, shape(Stagger::XFace), uy, shape(Stagger::XEdge),
        [&](CLine a, Line b) { cell_to_full(a, b, Ny, dy); });
}

void DiscreteGrid::grad_v(const Vec& v, Vec& vx, Vec& vy) const {
  check_size(v, size(Stagger::YFace), "grad_v");
  const int Nx = domain_.Nx, Ny = domain_.Ny;
  const double dx = dx_, dy = dy_;
  along(Dir::X, v, shape(Stagger::YFace), vx, shape(Stagger::YEdge),
        [&](CLine a, Line b) { cell_to_full(a, b, Nx, dx); });
  along(Dir::Y, v, shape(Stagger::YFace), vy, shape(Stagger::Center),
        [&](CLine a, Line b) { node_to_cell(a, b, Ny, dy); });
}

Vec DiscreteGrid::div_u(const Vec& ux, const Vec& uy) const {
  check_size(ux, size(Stagger::Center), "div_u");
  check_size(uy, size(Stagger::XEdge), "div_u");
  const int Nx = domain_.Nx, Ny = domain_.Ny;
  const double dx = dx_, dy = dy_;
  Vec a, b;
  along(Dir::X, ux, shape(Stagger::Center), a, shape(Stagger::XFace),
        [&](CLine x, Line y) { node_to_cell_adj(x, y, Nx, dx); });
  along(Dir::Y, uy, shape(Stagger::XEdge), b, shape(Stagger::XFace),
        [&](CLine x, Line y) { cell_to_full_adj(x, y, Ny, dy); });
  return -(a + b);
}

Vec DiscreteGrid::div_v(const Vec& vx, const Vec& vy) const {
  check_size(vx, size(Stagger::YEdge), "div_v");
  check_size(vy, size(Stagger::Center), "div_v");
  const int Nx = domain_.Nx, Ny = domain_.Ny;
  const double dx = dx_, dy = dy_;
  Vec a, b;
  along(Dir::X, vx, shape(Stagger::YEdge), a, shape(Stagger::YFace),
        [&](CLine x, Line y) { cell_to_full_adj(x, y, Nx, dx); });
  along(Dir::Y, vy, shape(Stagger::Center), b, shape(Stagger::YFace),
        [&](CLine x, Line y) { node_to_cell_adj(x, y, Ny, dy); });
  return -(a + b);
}

void DiscreteGrid::lap_vec(const Vec& u, const Vec& v, Vec& lu, Vec& lv) const {
  Vec a, b;
  grad_u(u, a, b);
  lu = div_u(a, b);
  grad_v(v, a, b);
  lv = div_v(a, b);
}

namespace {

AxisKind kind_x(Stagger s) { return axes_of(s).x; }
AxisKind kind_y(Stagger s) { return axes_of(s).y; }

}  // namespace

Vec DiscreteGrid::d0x(Stagger s, const Vec& f, CellBC bc) const {
  check_size(f, size(s), "d0x");
  const Shape sh = shape(s);
  const double d = dx_, sg = bc == CellBC::Neumann ? 1.0 : -1.0;
  Vec out;
  switch (kind_x(s)) {
    case AxisKind::Node:
      along(Dir::X, f, sh, out, sh, [&](CLine a, Line b) { d0_node(a, b, sh.nx, d, false); });
      break;
    case AxisKind::Cell:
      along(Dir::X, f, sh, out, sh, [&](CLine a, Line b) { d0_cell(a, b, sh.nx, d, sg, false); });
      break;
    default: throw ConfigError("d0x: unsupported stagger");
  }
  return out;
}

Vec DiscreteGrid::d0y(Stagger s, const Vec& f, CellBC bc) const {
  check_size(f, size(s), "d0y");
  const Shape sh = shape(s);
  const double d = dy_, sg = bc == CellBC::Neumann ? 1.0 : -1.0;
  Vec out;
  switch (kind_y(s)) {
    case AxisKind::Node:
      along(Dir::Y, f, sh, out, sh, [&](CLine a, Line b) { d0_node(a, b, sh.ny, d, false); });
      break;
    case AxisKind::Cell:
      along(Dir::Y, f, sh, out, sh, [&](CLine a, Line b) { d0_cell(a, b, sh.ny, d, sg, false); });
      break;
    default: throw ConfigError("d0y: unsupported stagger");
  }
  return out;
}

Vec DiscreteGrid::d0x_t(Stagger s, const Vec& f, CellBC bc) const {
  check_size(f, size(s), "d0x_t");
  const Shape sh = shape(s);
  const double d = dx_, sg = bc == CellBC::Neumann ? 1.0 : -1.0;
  Vec out;
  switch (kind_x(s)) {
    case AxisKind::Node:
      along(Dir::X, f, sh, out, sh, [&](CLine a, Line b) { d0_node(a, b, sh.nx, d, true); });
      break;
    case AxisKind::Cell:
      along(Dir::X, f, sh, out, sh, [&](CLine a, Line b) { d0_cell(a, b, sh.nx, d, sg, true); });
      break;
    default: throw ConfigError("d0x_t: unsupported stagger");
  }
  return out;
}

Vec DiscreteGrid::d0y_t(Stagger s, const Vec& f, CellBC bc) const {
  check_size(f, size(s), "d0y_t");
  const Shape sh = shape(s);
  const double d = dy_, sg = bc == CellBC::Neumann ? 1.0 : -1.0;
  Vec out;
  switch (kind_y(s)) {
    case AxisKind::Node:
      along(Dir::Y, f, sh, out, sh, [&](CLine a, Line b) { d0_node(a, b, sh.ny, d, true); });
      break;
    case AxisKind::Cell:
      along(Dir::Y, f, sh, out, sh, [&](CLine a, Line b) { d0_cell(a, b, sh.ny, d, sg, true); });
      break;
    default: throw ConfigError("d0y_t: unsupported stagger");
  }
  return out;
}

Vec DiscreteGrid::yface_to_xface(const Vec& v) const {
  check_size(v, size(Stagger::YFace), "yface_to_xface");
  const int Nx = domain_.Nx, Ny = domain_.Ny;
  Vec out = Vec::Zero(size(Stagger::XFace));
  // XFace (a, j) touches YFace (c, b) for c in {a, a+1}, b in {j-1, j}.
  for (int a = 0; a < Nx - 1; ++a)
    for (int j = 0; j < Ny; ++j) {
      double acc = 0.0;
      for (int c = a; c <= a + 1; ++c)
        for (int b = j - 1; b <= j; ++b)
          if (b >= 0 && b <= Ny - 2) acc += v[c * (Ny - 1) + b];
      out[a * Ny + j] = 0.25 * acc;
    }
  return out;
}

Vec DiscreteGrid::xface_to_yface(const Vec& u) const {
  check_size(u, size(Stagger::XFace), "xface_to_yface");
  const int Nx = domain_.Nx, Ny = domain_.Ny;
  Vec out = Vec::Zero(size(Stagger::YFace));
  for (int c = 0; c < Nx; ++c)
    for (int b = 0; b < Ny - 1; ++b) {
      double acc = 0.0;
      for (int a = c - 1; a <= c; ++a)
        for (int j = b; j <= b + 1; ++j)
          if (a >= 0 && a <= Nx - 2) acc += u[a * Ny + j];
      out[c * (Ny - 1) + b] = 0.25 * acc;
    }
  return out;
}

Vec DiscreteGrid::center_to_xface(const Vec& c) const {
  check_size(c, size(Stagger::Center), "center_to_xface");
  const int Nx = domain_.Nx, Ny = domain_.Ny;
  Vec out(size(Stagger::XFace));
  for (int a = 0; a < Nx - 1; ++a)
    for (int j = 0; j < Ny; ++j) out[a * Ny + j] = 0.5 * (c[a * Ny + j] + c[(a + 1) * Ny + j]);
  return out;
}

Vec DiscreteGrid::center_to_yface(const Vec& c) const {
  check_size(c, size(Stagger::Center), "center_to_yface");
  const int Nx = domain_.Nx, Ny = domain_.Ny;
  Vec out(size(Stagger::YFace));
  for (int i = 0; i < Nx; ++i)
    for (int b = 0; b < Ny - 1; ++b) out[i * (Ny - 1) + b] = 0.5 * (c[i * Ny + b] + c[i * Ny + b + 1]);
  return out;
}

Vec DiscreteGrid::xface_to_center(const Vec& u) const {
  check_size(u, size(Stagger::XFace), "xface_to_center");
  const int Nx = domain_.Nx, Ny = domain_.Ny;
  Vec out(size(Stagger::Center));
  for (int i = 0; i < Nx; ++i)
    for (int j = 0; j < Ny; ++j) {
      const double l = (i >= 1) ? u[(i - 1) * Ny + j] : 0.0;
      const double r = (i <= Nx - 2) ? u[i * Ny + j] : 0.0;
      out[i * Ny + j] = 0.5 * (l + r);
    }
  return out;
}

Vec DiscreteGrid::yface_to_center(const Vec& v) const {
  check_size(v, size(Stagger::YFace), "yface_to_center");
  const int Nx = domain_.Nx, Ny = domain_.Ny;
  Vec out(size(Stagger::Center));
  for (int i = 0; i < Nx; ++i)
    for (int j = 0; j < Ny; ++j) {
      const double l = (j >= 1) ? v[i * (Ny - 1) + j - 1] : 0.0;
      const double r = (j <= Ny - 2) ? v[i * (Ny - 1) + j] : 0.0;
      out[i * Ny + j] = 0.5 * (l + r);
    }
  return out;
}

SpMat DiscreteGrid::assemble(const std::function<Vec(const Vec&)>& op, int n_in, int n_out) {
  std::vector<Eigen::Triplet<double>> trips;
  Vec e = Vec::Zero(n_in);
  for (int c = 0; c < n_in; ++c) {
    e[c] = 1.0;
    const Vec col = op(e);
    if (col.size() != n_out) throw ConfigError("assemble: operator output size mismatch");
    for (int r = 0; r < n_out; ++r)
      if (col[r] != 0.0) trips.emplace_back(r, c, col[r]);
    e[c] = 0.0;
  }
  SpMat m(n_out, n_in);
  m.setFromTriplets(trips.begin(), trips.end());
  return m;
}

}  // namespace hsgs
