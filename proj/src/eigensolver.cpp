#include "hsgs/eigensolver.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <limits>
#include <random>
#include <sstream>

#include "hsgs/error.hpp"

namespace hsgs {

namespace {

Mat orthonormalize(const Mat& Y) {
  Eigen::HouseholderQR<Mat> qr(Y);
  return qr.householderQ() * Mat::Identity(Y.rows(), Y.cols());
}

void check_symmetric(const Mat& H) {
  const double scale = std::max(1.0, H.cwiseAbs().maxCoeff());
  const double asym = (H - H.transpose()).cwiseAbs().maxCoeff();
  if (asym > 1e-10 * scale) {
    std::ostringstream os;
    os << "eigensolver: projected operator not symmetric (defect " << asym << ")";
    throw ConsistencyError(os.str());
  }
}

Vec residual_norms(const Mat& AX, const Mat& X, const Vec& theta) {
  Vec r(X.cols());
  for (int c = 0; c < X.cols(); ++c) r[c] = (AX.col(c) - theta[c] * X.col(c)).norm();
  return r;
}

EigenResult dense_path(const EigenProblem& prob, int n) {
  const Mat I = Mat::Identity(prob.dim, prob.dim);
  const Mat A = prob.apply(I);
  Mat Q;
  if (prob.restrict) {
    Mat P = prob.restrict(I);
    P = 0.5 * (P + P.transpose());
    Eigen::SelfAdjointEigenSolver<Mat> es(P);
    std::vector<int> keep;
    for (int c = 0; c < prob.dim; ++c)
      if (es.eigenvalues()[c] > 0.5) keep.push_back(c);
    Q.resize(prob.dim, static_cast<int>(keep.size()));
    for (size_t c = 0; c < keep.size(); ++c) Q.col(c) = es.eigenvectors().col(keep[c]);
  } else {
    Q = I;
  }
  if (Q.cols() < n) throw RangeError("eigensolver: requested more pairs than the subspace dimension");
  Mat H = Q.transpose() * A * Q;
  check_symmetric(H);
  H = 0.5 * (H + H.transpose());
  Eigen::SelfAdjointEigenSolver<Mat> es(H);
  EigenResult res;
  res.dense = true;
  res.values = es.eigenvalues().head(n);
  res.vectors = Q * es.eigenvectors().leftCols(n);
  res.residuals = residual_norms(prob.apply(res.vectors), res.vectors, res.values);
  return res;
}

EigenResult iterative_path(const EigenProblem& prob, int n, const EigenOptions& opt) {
  const int p = std::min(prob.subspace_dim, 2 * n + 8);
  std::mt19937_64 rng(opt.seed);
  std::normal_distribution<double> nd;
  Mat X(prob.dim, p);
  for (int c = 0; c < p; ++c)
    for (int r = 0; r < prob.dim; ++r) X(r, c) = nd(rng);
  if (prob.restrict) X = prob.restrict(X);
  X = orthonormalize(X);

  const double tol = std::max(opt.tol, 64.0 * std::numeric_limits<double>::epsilon() * prob.norm_bound);
  EigenResult res;
  for (int it = 1; it <= opt.max_iter; ++it) {
    Mat Y = prob.solve(X);
    if (prob.restrict) Y = prob.restrict(Y);
    const Mat Q = orthonormalize(Y);
    const Mat AQ = prob.apply(Q);
    Mat H = Q.transpose() * AQ;
    check_symmetric(H);
    H = 0.5 * (H + H.transpose());
    Eigen::SelfAdjointEigenSolver<Mat> es(H);
    X = Q * es.eigenvectors();
    const Mat AX = AQ * es.eigenvectors();
    const Vec r = residual_norms(AX.leftCols(n), X.leftCols(n), es.eigenvalues().head(n));
    res.iterations = it;
    if (r.maxCoeff() <= tol) {
      res.values = es.eigenvalues().head(n);
      res.vectors = X.leftCols(n);
      res.residuals = r;
      return res;
    }
    if (it == opt.max_iter) {
      std::ostringstream os;
      os << "eigensolver: no convergence after " << it << " iterations, max residual "
         << r.maxCoeff() << " (tol " << tol << ")";
      throw NumericalError(os.str());
    }
  }
  return res;
}

}  // namespace

EigenResult smallest_eigenpairs(const EigenProblem& prob, int n, const EigenOptions& opt) {
  if (n < 0) throw RangeError("eigensolver: negative pair count");
  if (n > prob.subspace_dim)
    throw RangeError("eigensolver: requested " + std::to_string(n) + " pairs but dimension is " +
                     std::to_string(prob.subspace_dim));
  if (n == 0) return EigenResult{Vec(0), Mat(prob.dim, 0), Vec(0), 0, true};
  if (prob.dim <= opt.dense_max || !prob.solve) return dense_path(prob, n);
  return iterative_path(prob, n, opt);
}

}  // namespace hsgs
