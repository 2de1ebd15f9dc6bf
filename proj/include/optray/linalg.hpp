#pragma once

#include <algorithm>
#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "optray/error.hpp"

namespace optray {

/// Orthonormal basis of a subspace of R^d, stored as the columns of a d x r
/// matrix. r == 0 represents the zero subspace.
struct Basis {
  Eigen::MatrixXd columns;

  Eigen::Index dim() const { return columns.rows(); }
  Eigen::Index rank() const { return columns.cols(); }
};

inline constexpr double kDefaultRankTol = 1e-10;

/// Basis for the span of the rows of `vectors` (m x d). Singular directions
/// with singular value <= rank_tol * sigma_max are dropped.
inline Basis orthonormal_basis(const Eigen::MatrixXd& vectors, Eigen::Index d, double rank_tol = kDefaultRankTol) {
  if (!(rank_tol > 0)) fail(ErrorKind::usage, "rank_tol must be positive");
  if (vectors.rows() == 0) return Basis{Eigen::MatrixXd(d, 0)};
  if (vectors.cols() != d) fail(ErrorKind::validation, "orthonormal_basis: dimension mismatch");

  const Eigen::MatrixXd cols = vectors.transpose();
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(cols, Eigen::ComputeThinU);
  const auto& sv = svd.singularValues();
  if (sv.size() == 0 || !(sv[0] > 0)) return Basis{Eigen::MatrixXd(d, 0)};
  Eigen::Index r = 0;
  while (r < sv.size() && sv[r] > rank_tol * sv[0]) ++r;
  Basis b{svd.matrixU().leftCols(r)};
  // Fix signs so that the basis does not depend on SVD internals: the largest
  // entry of each column is positive.
  for (Eigen::Index k = 0; k < r; ++k) {
    Eigen::Index imax = 0;
    b.columns.col(k).cwiseAbs().maxCoeff(&imax);
    if (b.columns(imax, k) < 0) b.columns.col(k) *= -1.0;
  }
  return b;
}

inline Basis orthonormal_basis(const std::vector<Eigen::VectorXd>& vectors, Eigen::Index d,
                               double rank_tol = kDefaultRankTol) {
  Eigen::MatrixXd m(static_cast<Eigen::Index>(vectors.size()), d);
  for (std::size_t i = 0; i < vectors.size(); ++i) {
    if (vectors[i].size() != d) fail(ErrorKind::validation, "orthonormal_basis: dimension mismatch");
    m.row(static_cast<Eigen::Index>(i)) = vectors[i].transpose();
  }
  return orthonormal_basis(m, d, rank_tol);
}

/// Orthonormal basis of the orthogonal complement of span(b).
inline Basis complement(const Basis& b) {
  const Eigen::Index d = b.dim();
  if (b.rank() == 0) return Basis{Eigen::MatrixXd::Identity(d, d)};
  if (b.rank() == d) return Basis{Eigen::MatrixXd(d, 0)};
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(b.columns);
  const Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(d, d);
  return Basis{q.rightCols(d - b.rank())};
}

/// Orthogonal projection B (B^T w).
inline Eigen::VectorXd project(const Basis& b, const Eigen::VectorXd& w) {
  if (w.size() != b.dim()) fail(ErrorKind::validation, "project: dimension mismatch");
  if (b.rank() == 0) return Eigen::VectorXd::Zero(w.size());
  return b.columns * (b.columns.transpose() * w);
}

/// Euclidean projection onto the probability simplex {q >= 0, sum q = 1}
/// by sorting and thresholding.
inline Eigen::VectorXd simplex_project(const Eigen::VectorXd& v) {
  const Eigen::Index n = v.size();
  if (n < 1) fail(ErrorKind::usage, "simplex_project: empty vector");
  std::vector<double> s(v.data(), v.data() + n);
  std::sort(s.begin(), s.end(), std::greater<>());
  double cum = 0.0;
  double theta = 0.0;
  for (Eigen::Index k = 0; k < n; ++k) {
    cum += s[static_cast<std::size_t>(k)];
    const double t = (cum - 1.0) / static_cast<double>(k + 1);
    if (s[static_cast<std::size_t>(k)] - t > 0) theta = t;
  }
  Eigen::VectorXd q = (v.array() - theta).max(0.0);
  // Remove the rounding residue of the threshold from the largest coordinate.
  Eigen::Index imax = 0;
  q.maxCoeff(&imax);
  q[imax] += 1.0 - q.sum();
  return q;
}


/// Projected-gradient iteration for min over the simplex of |M^T q|^2 / 2,
/// i.e. the point of conv(rows of M) nearest the origin. Uses the fixed step
/// 1 / lambda_max(M^T M). `stop(q, M^T q)` is polled every `check_every`
/// iterations; the loop ends when it returns true or after max_iters.
struct HullIterate {
  Eigen::VectorXd q;
  Eigen::VectorXd point;  // M^T q
  long iterations = 0;
  bool stopped = false;
};

template <class Stop>
HullIterate nearest_hull_point(const Eigen::MatrixXd& M, Stop&& stop, long max_iters, long check_every = 16) {
  const Eigen::Index n = M.rows();
  if (n < 1) fail(ErrorKind::usage, "nearest_hull_point: empty matrix");
  HullIterate it;
  it.q = Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n));
  it.point = M.transpose() * it.q;

  const Eigen::MatrixXd gram = M.transpose() * M;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gram, Eigen::EigenvaluesOnly);
  const double lmax = es.eigenvalues().maxCoeff();
  if (!(lmax > 0)) {
    it.stopped = stop(it.q, it.point);
    return it;
  }
  const double step = 1.0 / lmax;

  for (long k = 0; k < max_iters; ++k) {
    if (k % check_every == 0 && stop(it.q, it.point)) {
      it.stopped = true;
      it.iterations = k;
      return it;
    }
    it.q = simplex_project(it.q - step * (M * it.point));
    it.point.noalias() = M.transpose() * it.q;
  }
  it.iterations = max_iters;
  it.stopped = stop(it.q, it.point);
  return it;
}

}  // namespace optray
