#pragma once

#include <Eigen/SparseCholesky>
#include <memory>

#include "hsgs/grid.hpp"

namespace hsgs {

/// Discrete 2D Helmholtz-Leray projection P_G = I - grad L_N^{-1} div on the
/// MAC faces. The Neumann Laplacian is factored once (one cell pinned).
class LerayProjector {
 public:
  explicit LerayProjector(std::shared_ptr<const DiscreteGrid> grid);

  const DiscreteGrid& grid() const { return *grid_; }

  /// Zero-mean q with L_N q = rhs - mean(rhs).
  Vec solve_poisson(const Vec& rhs) const;

  /// f = P_G f + grad q. Writes the divergence-free part; q optionally.
  void project(const Vec& u, const Vec& v, Vec& pu, Vec& pv, Vec* q = nullptr) const;

  /// Column-wise projection of stacked face fields [u; v].
  Mat project_stacked(const Mat& uv) const;

 private:
  std::shared_ptr<const DiscreteGrid> grid_;
  Eigen::SimplicialLDLT<SpMat> ldlt_;
};

}  // namespace hsgs
