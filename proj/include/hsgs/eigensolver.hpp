#pragma once

#include <cstdint>
#include <functional>

#include "hsgs/grid.hpp"

namespace hsgs {

/// A symmetric positive semidefinite operator, optionally restricted to the
/// range of an orthogonal projector. All maps act column-wise on blocks.
struct EigenProblem {
  int dim = 0;
  std::function<Mat(const Mat&)> apply;     ///< A X
  std::function<Mat(const Mat&)> solve;     ///< (A + shift)^{-1} X, used by the iterative path
  std::function<Mat(const Mat&)> restrict;  ///< projector onto the admissible subspace; empty = identity
  int subspace_dim = 0;                     ///< dimension of that subspace
  double norm_bound = 0.0;                  ///< upper bound on ||A||, sets the round-off floor
};

struct EigenOptions {
  double tol = 1e-10;      ///< absolute residual on unit vectors, floored at 64 eps ||A||
  int max_iter = 400;
  int dense_max = 1200;    ///< ambient dimension up to which the dense path is used
  std::uint64_t seed = 0x5eed;
};

struct EigenResult {
  Vec values;      ///< ascending
  Mat vectors;     ///< Euclidean-orthonormal columns
  Vec residuals;   ///< ||A x - lambda x|| per pair
  int iterations = 0;
  bool dense = false;
};

/// n smallest eigenpairs. Throws NumericalError on non-convergence and
/// ConsistencyError if the projected operator is not symmetric.
EigenResult smallest_eigenpairs(const EigenProblem& prob, int n, const EigenOptions& opt = {});

}  // namespace hsgs
