#include "hsgs/basis.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SparseLU>
#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

#include "hsgs/binio.hpp"
#include "hsgs/error.hpp"

namespace hsgs {

namespace {

constexpr const char* kFlavour = "mac-staggered-5pt-v1";
constexpr std::string_view kBasisMagic = "HSGS-BAS1";

// Deterministic sign: first clearly non-zero entry positive.
void fix_signs(Mat& modes) {
  for (int c = 0; c < modes.cols(); ++c) {
    const double big = modes.col(c).cwiseAbs().maxCoeff();
    for (int r = 0; r < modes.rows(); ++r)
      if (std::abs(modes(r, c)) > 1e-6 * big) {
        if (modes(r, c) < 0) modes.col(c) *= -1.0;
        break;
      }
  }
}

// Euclidean-orthonormal -> weighted-orthonormal (weights are uniform dx*dy).
void to_weighted(const DiscreteGrid& g, Mat& modes) { modes /= std::sqrt(g.dx() * g.dy()); }

SpMat neg_lap_vec_matrix(const DiscreteGrid& g) {
  const int nu = g.size(Stagger::XFace), nv = g.size(Stagger::YFace);
  return DiscreteGrid::assemble(
      [&](const Vec& x) {
        Vec lu, lv;
        g.lap_vec(x.head(nu), x.tail(nv), lu, lv);
        Vec out(nu + nv);
        out << -lu, -lv;
        return out;
      },
      nu + nv, nu + nv);
}

Mat apply_family_operator(const DiscreteGrid& g, const LerayProjector& leray, Family kind, const Mat& X) {
  const int nu = g.size(Stagger::XFace), nv = g.size(Stagger::YFace);
  Mat out(X.rows(), X.cols());
  for (int c = 0; c < X.cols(); ++c) {
    if (kind == Family::NeumannScalar) {
      out.col(c) = -g.lap_neumann(X.col(c));
    } else {
      Vec lu, lv;
      g.lap_vec(X.col(c).head(nu), X.col(c).tail(nv), lu, lv);
      out.col(c) << -lu, -lv;
    }
  }
  if (kind == Family::Stokes) out = leray.project_stacked(out);
  return out;
}

}  // namespace

Vec family_residuals(const DiscreteGrid& grid, const LerayProjector& leray, const HorizontalFamily& f) {
  const Mat AX = apply_family_operator(grid, leray, f.kind, f.modes);
  Vec r(f.modes.cols());
  for (int c = 0; c < f.modes.cols(); ++c)
    r[c] = (AX.col(c) - f.eigenvalues[c] * f.modes.col(c)).norm() / f.modes.col(c).norm();
  return r;
}

namespace {

// 1D blocks of -Delta. Cell axes carry N unknowns (Neumann: copy ghost,
// Dirichlet: negated ghost); node axes carry the N-1 interior nodes.
enum class Axis1 { CellNeumann, CellDirichlet, Node };

Mat neg_second_difference(Axis1 kind, int N, double h) {
  const int n = kind == Axis1::Node ? N - 1 : N;
  Mat A = Mat::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    A(i, i) = 2.0;
    if (i > 0) A(i, i - 1) = -1.0;
    if (i + 1 < n) A(i, i + 1) = -1.0;
  }
  if (kind == Axis1::CellNeumann) A(0, 0) = A(n - 1, n - 1) = 1.0;
  if (kind == Axis1::CellDirichlet) A(0, 0) = A(n - 1, n - 1) = 3.0;
  return A / (h * h);
}

struct KronTerm {
  double lambda;
  int comp, a, b;
};

struct KronBlock {
  Eigen::SelfAdjointEigenSolver<Mat> x, y;
  int offset = 0;  // row offset of this component in the stacked vector
};

// Smallest n eigenpairs of a direct sum of Kronecker-sum blocks.
HorizontalFamily kron_family(std::vector<KronBlock>& blocks, int dim, int n, bool skip_constant) {
  std::vector<KronTerm> terms;
  for (int c = 0; c < static_cast<int>(blocks.size()); ++c) {
    const auto& ex = blocks[c].x.eigenvalues();
    const auto& ey = blocks[c].y.eigenvalues();
    for (int a = 0; a < ex.size(); ++a)
      for (int b = 0; b < ey.size(); ++b) {
        if (skip_constant && a == 0 && b == 0) continue;
        terms.push_back({ex[a] + ey[b], c, a, b});
      }
  }
  std::sort(terms.begin(), terms.end(), [](const KronTerm& l, const KronTerm& r) {
    if (l.lambda != r.lambda) return l.lambda < r.lambda;
    if (l.comp != r.comp) return l.comp < r.comp;
    if (l.a != r.a) return l.a < r.a;
    return l.b < r.b;
  });
  HorizontalFamily f;
  f.eigenvalues.resize(n);
  f.modes = Mat::Zero(dim, n);
  for (int m = 0; m < n; ++m) {
    const KronTerm& t = terms[m];
    const KronBlock& blk = blocks[t.comp];
    const auto& X = blk.x.eigenvectors();
    const auto& Y = blk.y.eigenvectors();
    const int ny = static_cast<int>(Y.rows());
    f.eigenvalues[m] = t.lambda;
    for (int i = 0; i < X.rows(); ++i)
      for (int j = 0; j < ny; ++j) f.modes(blk.offset + i * ny + j, m) = X(i, t.a) * Y(j, t.b);
  }
  return f;
}

}  // namespace

HorizontalFamily eigensolve_neumann_scalar(const DiscreteGrid& g, int n, const EigenOptions&) {
  const int N = g.size(Stagger::Center);
  if (n < 1 || n > N)
    throw RangeError("neumann eigensolve: n must be in [1, " + std::to_string(N) + "], got " + std::to_string(n));
  const CylinderDomain& d = g.domain();
  std::vector<KronBlock> blocks(1);
  blocks[0].x.compute(neg_second_difference(Axis1::CellNeumann, d.Nx, g.dx()));
  blocks[0].y.compute(neg_second_difference(Axis1::CellNeumann, d.Ny, g.dy()));
  HorizontalFamily rest = kron_family(blocks, N, n - 1, true);

  HorizontalFamily f;
  f.kind = Family::NeumannScalar;
  f.eigenvalues.resize(n);
  f.modes.resize(N, n);
  f.eigenvalues[0] = 0.0;
  f.modes.col(0).setConstant(1.0 / std::sqrt(static_cast<double>(N)));
  f.eigenvalues.tail(n - 1) = rest.eigenvalues;
  f.modes.rightCols(n - 1) = rest.modes;
  fix_signs(f.modes);
  to_weighted(g, f.modes);
  return f;
}

HorizontalFamily eigensolve_dirichlet_vector(const DiscreteGrid& g, int n, const EigenOptions&) {
  const int nu = g.size(Stagger::XFace), dim = nu + g.size(Stagger::YFace);
  if (n < 1 || n > dim)
    throw RangeError("dirichlet eigensolve: n must be in [1, " + std::to_string(dim) + "], got " + std::to_string(n));
  const CylinderDomain& d = g.domain();
  std::vector<KronBlock> blocks(2);
  blocks[0].x.compute(neg_second_difference(Axis1::Node, d.Nx, g.dx()));
  blocks[0].y.compute(neg_second_difference(Axis1::CellDirichlet, d.Ny, g.dy()));
  blocks[1].x.compute(neg_second_difference(Axis1::CellDirichlet, d.Nx, g.dx()));
  blocks[1].y.compute(neg_second_difference(Axis1::Node, d.Ny, g.dy()));
  blocks[1].offset = nu;
  HorizontalFamily f = kron_family(blocks, dim, n, false);
  f.kind = Family::DirichletVec;
  fix_signs(f.modes);
  to_weighted(g, f.modes);
  return f;
}

HorizontalFamily eigensolve_stokes(const DiscreteGrid& g, const LerayProjector& leray, int n,
                                   const EigenOptions& opt) {
  const int nu = g.size(Stagger::XFace), nv = g.size(Stagger::YFace), nc = g.size(Stagger::Center);
  const int dim = nu + nv;
  const int sub = (g.domain().Nx - 1) * (g.domain().Ny - 1);
  if (n < 1 || n > sub)
    throw RangeError("stokes eigensolve: n must be in [1, " + std::to_string(sub) + "], got " + std::to_string(n));
  const SpMat A = neg_lap_vec_matrix(g);

  EigenProblem prob;
  prob.dim = dim;
  prob.subspace_dim = sub;
  prob.norm_bound = 4.0 / (g.dx() * g.dx()) + 4.0 / (g.dy() * g.dy());
  prob.apply = [&](const Mat& X) { return leray.project_stacked(A * X); };
  prob.restrict = [&](const Mat& X) { return leray.project_stacked(X); };

  std::shared_ptr<Eigen::SparseLU<SpMat>> lu;
  if (dim > opt.dense_max) {
    // Saddle system [A G; D 0] with pressure in cell 0 pinned and its constraint row dropped.
    const SpMat G = DiscreteGrid::assemble(
        [&](const Vec& p) {
          Vec gx, gy;
          g.grad_neumann(p, gx, gy);
          Vec out(dim);
          out << gx, gy;
          return out;
        },
        nc, dim);
    const SpMat D = DiscreteGrid::assemble([&](const Vec& x) { return g.div_neumann(x.head(nu), x.tail(nv)); },
                                           dim, nc);
    std::vector<Eigen::Triplet<double>> t;
    for (int k = 0; k < A.outerSize(); ++k)
      for (SpMat::InnerIterator it(A, k); it; ++it) t.emplace_back(it.row(), it.col(), it.value());
    for (int k = 0; k < G.outerSize(); ++k)
      for (SpMat::InnerIterator it(G, k); it; ++it)
        if (it.col() > 0) t.emplace_back(it.row(), dim + it.col() - 1, it.value());
    for (int k = 0; k < D.outerSize(); ++k)
      for (SpMat::InnerIterator it(D, k); it; ++it)
        if (it.row() > 0) t.emplace_back(dim + it.row() - 1, it.col(), it.value());
    SpMat K(dim + nc - 1, dim + nc - 1);
    K.setFromTriplets(t.begin(), t.end());
    K.makeCompressed();
    lu = std::make_shared<Eigen::SparseLU<SpMat>>();
    lu->analyzePattern(K);
    lu->factorize(K);
    if (lu->info() != Eigen::Success) throw NumericalError("stokes eigensolve: saddle factorization failed");
    prob.solve = [lu, dim, nc](const Mat& X) {
      Mat rhs = Mat::Zero(dim + nc - 1, X.cols());
      rhs.topRows(dim) = X;
      const Mat sol = lu->solve(rhs);
      return Mat(sol.topRows(dim));
    };
  }
  const EigenResult res = smallest_eigenpairs(prob, n, opt);

  HorizontalFamily f;
  f.kind = Family::Stokes;
  f.eigenvalues = res.values;
  f.modes = res.vectors;
  fix_signs(f.modes);
  to_weighted(g, f.modes);
  return f;
}

double VerticalModes::wavenumber(int k) const { return k * std::numbers::pi / h; }
double VerticalModes::eigenvalue(int k) const { return wavenumber(k) * wavenumber(k); }

double VerticalModes::eval(int k, double z, int r) const {
  if (k < k_min() || k > n_z) throw RangeError("vertical mode index out of range");
  if (parity == Parity::Cos && k == 0) return r == 0 ? 1.0 / std::sqrt(h) : 0.0;
  const double t = (z + h) / h;
  double s, c;
  if (t == 0.0) {
    s = 0.0;
    c = 1.0;
  } else if (t == 1.0) {
    s = 0.0;
    c = (k % 2 == 0) ? 1.0 : -1.0;
  } else {
    s = std::sin(k * std::numbers::pi * t);
    c = std::cos(k * std::numbers::pi * t);
  }
  const double amp = std::sqrt(2.0 / h) * std::pow(wavenumber(k), r);
  // d^r cos = {c, -s, -c, s}, d^r sin = {s, c, -s, -c}
  const int q = r % 4;
  if (parity == Parity::Cos) {
    const double v[4] = {c, -s, -c, s};
    return amp * v[q];
  }
  const double v[4] = {s, c, -s, -c};
  return amp * v[q];
}

Mat VerticalModes::table(const Vec& z, int r) const {
  Mat t(count(), z.size());
  for (int k = k_min(); k <= n_z; ++k)
    for (int l = 0; l < z.size(); ++l) t(k - k_min(), l) = eval(k, z[l], r);
  return t;
}

VerticalModes vertical_modes(double h, int n_z, Parity parity) {
  if (!(h > 0.0)) throw ConfigError("vertical modes: h must be positive");
  if (n_z < 1) throw ConfigError("vertical modes: n_z must be >= 1");
  return VerticalModes{parity, h, n_z};
}

double TensorBasis::lambda_bar(int m) const {
  if (m < 1 || m > n) throw RangeError("lambda_bar: level out of range");
  return std::max({stokes.eigenvalues[m - 1], dirichlet.eigenvalues[m - 1], neumann.eigenvalues[m - 1]});
}

std::uint64_t TensorBasis::cache_key() const { return basis_cache_key(grid->domain(), n, n_z); }

namespace {

HorizontalFamily trimmed(HorizontalFamily f, int n, int rows, const char* name) {
  if (f.eigenvalues.size() < n || f.modes.cols() < n)
    throw ConfigError(std::string("assemble_basis: family ") + name + " has fewer than n modes");
  if (f.modes.rows() != rows)
    throw ConfigError(std::string("assemble_basis: family ") + name + " does not match the grid");
  f.eigenvalues.conservativeResize(n);
  f.modes.conservativeResize(Eigen::NoChange, n);
  if (f.residuals.size() > n) f.residuals.conservativeResize(n);
  return f;
}

}  // namespace

BasisPtr assemble_basis(std::shared_ptr<const DiscreteGrid> grid, std::shared_ptr<const LerayProjector> leray,
                        HorizontalFamily stokes, HorizontalFamily dirichlet, HorizontalFamily neumann, int n,
                        int n_z, double dealias) {
  if (!grid || !leray || &leray->grid() != grid.get())
    throw ConfigError("assemble_basis: projector built on a different grid");
  if (n < 1) throw ConfigError("assemble_basis: n must be >= 1");
  if (n_z < 1) throw ConfigError("assemble_basis: n_z must be >= 1");
  if (!(dealias >= 1.0)) throw ConfigError("assemble_basis: dealias factor must be >= 1");
  const CylinderDomain& d = grid->domain();
  if (d.Nz < n_z + 2)
    throw ConfigError("assemble_basis: Nz must be >= n_z + 2 for exact vertical transforms");
  auto b = std::make_shared<TensorBasis>();
  b->grid = grid;
  b->leray = leray;
  const int nvec = grid->size(Stagger::XFace) + grid->size(Stagger::YFace);
  b->stokes = trimmed(std::move(stokes), n, nvec, "stokes");
  b->dirichlet = trimmed(std::move(dirichlet), n, nvec, "dirichlet");
  b->neumann = trimmed(std::move(neumann), n, grid->size(Stagger::Center), "neumann");
  b->stokes.kind = Family::Stokes;
  b->dirichlet.kind = Family::DirichletVec;
  b->neumann.kind = Family::NeumannScalar;
  b->n = n;
  b->n_z = n_z;
  b->dealias = dealias;
  b->vcos = vertical_modes(d.h, n_z, Parity::Cos);
  b->vsin = vertical_modes(d.h, n_z, Parity::Sin);
  const int nq = std::max(d.Nz, static_cast<int>(std::ceil(dealias * n_z)) + 2);
  trapezoid(d.h, nq, b->zq, b->wq);

  // Barotropic elements must be discretely divergence-free.
  const int nu = grid->size(Stagger::XFace);
  for (int m = 0; m < n; ++m) {
    const Vec div = grid->div_neumann(b->stokes.modes.col(m).head(nu), b->stokes.modes.col(m).tail(nvec - nu));
    const double rel = std::sqrt(grid->dot(Stagger::Center, div, div));
    if (rel > 1e-10)
      throw ConsistencyError("assemble_basis: Stokes mode " + std::to_string(m) + " is not divergence-free");
  }
  return b;
}

std::uint64_t basis_cache_key(const CylinderDomain& d, int n, int n_z) {
  binio::Fnv1a h;
  h.str(kFlavour);
  h.f64(d.Lx);
  h.f64(d.Ly);
  h.f64(d.h);
  h.u64(d.Nx);
  h.u64(d.Ny);
  h.u64(d.Nz);
  h.u64(n);
  h.u64(n_z);
  return h.value();
}

std::string basis_cache_path(const std::string& dir, const CylinderDomain& d, int n, int n_z) {
  std::ostringstream os;
  os << "basis_" << std::hex << basis_cache_key(d, n, n_z) << ".bin";
  return (std::filesystem::path(dir) / os.str()).string();
}

void save_basis(const TensorBasis& b, const std::string& path) {
  const auto parent = std::filesystem::path(path).parent_path();
  if (!parent.empty()) std::filesystem::create_directories(parent);
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot write basis cache " + path);
  const CylinderDomain& d = b.grid->domain();
  binio::put_magic(os, kBasisMagic);
  binio::put_f64(os, d.Lx);
  binio::put_f64(os, d.Ly);
  binio::put_f64(os, d.h);
  for (std::uint64_t v : {d.Nx, d.Ny, d.Nz, b.n, b.n_z}) binio::put_u64(os, v);
  for (const HorizontalFamily* f : {&b.stokes, &b.dirichlet, &b.neumann}) {
    binio::put_u64(os, f->modes.cols());
    binio::put_u64(os, f->modes.rows());
    for (int m = 0; m < f->eigenvalues.size(); ++m) binio::put_f64(os, f->eigenvalues[m]);
    // One eigenvector per row.
    for (int m = 0; m < f->modes.cols(); ++m)
      for (int r = 0; r < f->modes.rows(); ++r) binio::put_f64(os, f->modes(r, m));
  }
  if (!os) throw Error("failed writing basis cache " + path);
}

bool load_basis_families(const std::string& path, const CylinderDomain& d, int n, int n_z,
                         HorizontalFamily& stokes, HorizontalFamily& dirichlet, HorizontalFamily& neumann) {
  std::ifstream is(path, std::ios::binary);
  if (!is || !binio::check_magic(is, kBasisMagic)) return false;
  double Lx, Ly, h;
  std::uint64_t Nx, Ny, Nz, bn, bnz;
  if (!binio::get_f64(is, Lx) || !binio::get_f64(is, Ly) || !binio::get_f64(is, h)) return false;
  if (!binio::get_u64(is, Nx) || !binio::get_u64(is, Ny) || !binio::get_u64(is, Nz) || !binio::get_u64(is, bn) ||
      !binio::get_u64(is, bnz))
    return false;
  if (Lx != d.Lx || Ly != d.Ly || h != d.h || Nx != static_cast<std::uint64_t>(d.Nx) ||
      Ny != static_cast<std::uint64_t>(d.Ny) || Nz != static_cast<std::uint64_t>(d.Nz) ||
      bn != static_cast<std::uint64_t>(n) || bnz != static_cast<std::uint64_t>(n_z))
    return false;
  const Family kinds[3] = {Family::Stokes, Family::DirichletVec, Family::NeumannScalar};
  HorizontalFamily* out[3] = {&stokes, &dirichlet, &neumann};
  for (int f = 0; f < 3; ++f) {
    std::uint64_t count, dim;
    if (!binio::get_u64(is, count) || !binio::get_u64(is, dim)) return false;
    if (count > (1u << 20) || dim > (1u << 26)) return false;
    HorizontalFamily fam;
    fam.kind = kinds[f];
    fam.eigenvalues.resize(count);
    fam.modes.resize(dim, count);
    for (std::uint64_t m = 0; m < count; ++m)
      if (!binio::get_f64(is, fam.eigenvalues[m])) return false;
    for (std::uint64_t m = 0; m < count; ++m)
      for (std::uint64_t r = 0; r < dim; ++r)
        if (!binio::get_f64(is, fam.modes(r, m))) return false;
    *out[f] = std::move(fam);
  }
  return true;
}

BasisPtr build_basis(const CylinderDomain& domain, int n, int n_z, double dealias,
                     const std::optional<std::string>& cache_dir, const EigenOptions& opt) {
  auto grid = std::make_shared<const DiscreteGrid>(domain);
  auto leray = std::make_shared<const LerayProjector>(grid);
  HorizontalFamily s, dv, ns;
  std::string path;
  bool loaded = false;
  if (cache_dir) {
    path = basis_cache_path(*cache_dir, domain, n, n_z);
    loaded = load_basis_families(path, domain, n, n_z, s, dv, ns);
  }
  if (!loaded) {
    ns = eigensolve_neumann_scalar(*grid, n, opt);
    dv = eigensolve_dirichlet_vector(*grid, n, opt);
    s = eigensolve_stokes(*grid, *leray, n, opt);
  }
  s.residuals = family_residuals(*grid, *leray, s);
  dv.residuals = family_residuals(*grid, *leray, dv);
  ns.residuals = family_residuals(*grid, *leray, ns);
  auto b = assemble_basis(grid, leray, std::move(s), std::move(dv), std::move(ns), n, n_z, dealias);
  if (cache_dir && !loaded) save_basis(*b, path);
  return b;
}

}  // namespace hsgs
