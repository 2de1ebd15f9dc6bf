#pragma once

#include <cmath>
#include <limits>
#include <string>

#include <Eigen/Dense>

#include "optray/error.hpp"
#include "optray/linalg.hpp"

namespace optray {

/// Max-margin pair over S-perp. gamma = |A_perp^T q_bar| (dual value) and
/// u_bar = -A_perp^T q_bar / gamma. `gap` is dual minus primal margin at u_bar.
struct MarginSolution {
  double gamma = 0.0;
  Eigen::VectorXd u_bar;
  Eigen::VectorXd q_bar;
  double gap = 0.0;
  long iterations = 0;
};

struct MarginOptions {
  double tol = 1e-8;
  long max_iters = 1000000;
};

/// -max_i (A_perp u)_i for a unit vector u. Never exceeds gamma.
inline double primal_margin(const Eigen::MatrixXd& a_perp, const Eigen::VectorXd& u) {
  if (u.size() != a_perp.cols()) fail(ErrorKind::validation, "primal_margin: dimension mismatch");
  if (std::abs(u.norm() - 1.0) > 1e-9) fail(ErrorKind::validation, "primal_margin: u must be a unit vector");
  return -(a_perp * u).maxCoeff();
}

/// Projected gradient on q -> |A_perp^T q|^2 / 2 over the simplex, stopped on
/// the primal-dual gap. Throws when the rows are not separable (gamma <= tol)
/// or when the gap does not close within max_iters.
inline MarginSolution solve_dual(const Eigen::MatrixXd& a_perp, const MarginOptions& opt = {}) {
  if (a_perp.rows() < 1) fail(ErrorKind::usage, "solve_dual: empty matrix");

  double best_gap = std::numeric_limits<double>::infinity();
  MarginSolution best;
  auto evaluate = [&](const Eigen::VectorXd& q, const Eigen::VectorXd& p) {
    const double dual = p.norm();
    if (!(dual > opt.tol)) return true;  // gamma collapsed; reported below
    const Eigen::VectorXd u = -p / dual;
    const double primal = -(a_perp * u).maxCoeff();
    const double gap = dual - primal;
    if (gap < best_gap) {
      best_gap = gap;
      best.gamma = dual;
      best.u_bar = u;
      best.q_bar = q;
      best.gap = gap;
    }
    return gap <= opt.tol;
  };

  const auto it = nearest_hull_point(a_perp, evaluate, opt.max_iters);
  if (!(it.point.norm() > opt.tol))
    fail(ErrorKind::numerical,
         "solve_dual: margin collapsed to " + std::to_string(it.point.norm()) + " (rows not separable)");
  best.iterations = it.iterations;
  if (!(best.gap <= opt.tol))
    fail(ErrorKind::numerical, "solve_dual: duality gap " + std::to_string(best_gap) + " after " +
                                   std::to_string(opt.max_iters) + " iterations");
  return best;
}

/// Conjugate of g(z) = ln(sum_i e^{z_i} / n) at a probability vector q:
/// ln n + sum_i q_i ln q_i, which is at most ln n.
inline double log_sum_exp_conjugate(const Eigen::VectorXd& q, double n) {
  double ent = 0.0;
  for (Eigen::Index i = 0; i < q.size(); ++i)
    if (q[i] > 0) ent += q[i] * std::log(q[i]);
  return std::log(n) + ent;
}

}  // namespace optray
