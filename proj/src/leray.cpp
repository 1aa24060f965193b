#include "hsgs/leray.hpp"

#include "hsgs/error.hpp"

namespace hsgs {

LerayProjector::LerayProjector(std::shared_ptr<const DiscreteGrid> grid) : grid_(std::move(grid)) {
  const int nc = grid_->size(Stagger::Center);
  const SpMat L = DiscreteGrid::assemble([&](const Vec& p) { return Vec(-grid_->lap_neumann(p)); }, nc, nc);
  // Drop cell 0: the remaining block of -L_N is symmetric positive definite.
  const SpMat K = L.bottomRightCorner(nc - 1, nc - 1);
  ldlt_.compute(K);
  if (ldlt_.info() != Eigen::Success) throw NumericalError("leray: Poisson factorization failed");
}

Vec LerayProjector::solve_poisson(const Vec& rhs) const {
  const int nc = grid_->size(Stagger::Center);
  if (rhs.size() != nc) throw ConfigError("leray: Poisson right-hand side has wrong size");
  const Vec r = rhs.array() - rhs.mean();
  Vec q = Vec::Zero(nc);
  q.tail(nc - 1) = ldlt_.solve(Vec(-r.tail(nc - 1)));
  if (ldlt_.info() != Eigen::Success || !q.allFinite())
    throw NumericalError("leray: Poisson solve failed");
  q.array() -= q.mean();
  return q;
}

void LerayProjector::project(const Vec& u, const Vec& v, Vec& pu, Vec& pv, Vec* q_out) const {
  const Vec q = solve_poisson(grid_->div_neumann(u, v));
  Vec gx, gy;
  grid_->grad_neumann(q, gx, gy);
  pu = u - gx;
  pv = v - gy;
  if (q_out) *q_out = q;
}

Mat LerayProjector::project_stacked(const Mat& uv) const {
  const int nu = grid_->size(Stagger::XFace), nv = grid_->size(Stagger::YFace);
  if (uv.rows() != nu + nv) throw ConfigError("leray: stacked field has wrong size");
  Mat out(uv.rows(), uv.cols());
  Vec pu, pv;
  for (int c = 0; c < uv.cols(); ++c) {
    project(uv.col(c).head(nu), uv.col(c).tail(nv), pu, pv);
    out.col(c).head(nu) = pu;
    out.col(c).tail(nv) = pv;
  }
  return out;
}

}  // namespace hsgs
