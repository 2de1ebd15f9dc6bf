#pragma once

#include <limits>
#include <string>

#include <Eigen/Dense>

#include "optray/error.hpp"

namespace optray::lp {

/// maximize c^T x  subject to  G x <= h,  x >= 0,  with h >= 0.
/// Nonnegative h makes the all-slack basis feasible, so no phase one is needed.
struct Problem {
  Eigen::MatrixXd G;
  Eigen::VectorXd h;
  Eigen::VectorXd c;
};

struct Result {
  Eigen::VectorXd x;
  double objective = 0.0;
  long iterations = 0;
};

struct Options {
  long max_iters = 200000;
  double pivot_tol = 1e-12;
};

/// Dense tableau simplex with Bland's anti-cycling rule. Throws on an
/// unbounded objective or when max_iters pivots do not reach optimality.
inline Result solve(const Problem& p, const Options& opt = {}) {
  const Eigen::Index m = p.G.rows();
  const Eigen::Index nv = p.G.cols();
  if (p.h.size() != m || p.c.size() != nv) fail(ErrorKind::usage, "lp: dimension mismatch");
  if (m > 0 && p.h.minCoeff() < 0) fail(ErrorKind::usage, "lp: right-hand side must be nonnegative");

  // Columns: [x (nv) | slacks (m) | rhs]; last row holds the reduced costs -c.
  const Eigen::Index ncol = nv + m + 1;
  using Tableau = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  Tableau T = Tableau::Zero(m + 1, ncol);
  T.topLeftCorner(m, nv) = p.G;
  T.block(0, nv, m, m).setIdentity();
  T.col(ncol - 1).head(m) = p.h;
  T.row(m).head(nv) = -p.c.transpose();

  Eigen::VectorXi basis(m);
  for (Eigen::Index i = 0; i < m; ++i) basis[i] = static_cast<int>(nv + i);

  const double tol = opt.pivot_tol;
  long it = 0;
  while (true) {
    Eigen::Index enter = -1;
    for (Eigen::Index j = 0; j < nv + m; ++j)
      if (T(m, j) < -tol) {
        enter = j;
        break;
      }
    if (enter < 0) break;

    Eigen::Index leave = -1;
    double best = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < m; ++i) {
      const double a = T(i, enter);
      if (a > tol) {
        const double ratio = T(i, ncol - 1) / a;
        if (ratio < best - 1e-14 ||
            (ratio <= best + 1e-14 && leave >= 0 && basis[i] < basis[leave])) {
          best = std::min(best, ratio);
          leave = i;
        }
      }
    }
    if (leave < 0) fail(ErrorKind::numerical, "lp: objective unbounded");

    if (++it > opt.max_iters)
      fail(ErrorKind::numerical, "lp: no optimum after " + std::to_string(opt.max_iters) + " pivots");

    T.row(leave) /= T(leave, enter);
    for (Eigen::Index i = 0; i <= m; ++i) {
      if (i == leave) continue;
      const double f = T(i, enter);
      if (f != 0.0) T.row(i) -= f * T.row(leave);
    }
    // Clamp rhs noise so feasibility (rhs >= 0) survives rounding.
    for (Eigen::Index i = 0; i < m; ++i)
      if (T(i, ncol - 1) < 0 && T(i, ncol - 1) > -1e-11) T(i, ncol - 1) = 0.0;
    basis[leave] = static_cast<int>(enter);
  }

  Result r;
  r.x = Eigen::VectorXd::Zero(nv);
  for (Eigen::Index i = 0; i < m; ++i)
    if (basis[i] < nv) r.x[basis[i]] = T(i, ncol - 1);
  r.objective = p.c.dot(r.x);
  r.iterations = it;
  return r;
}

}  // namespace optray::lp
