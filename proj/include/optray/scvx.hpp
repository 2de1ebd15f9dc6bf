#pragma once

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "optray/decompose.hpp"
#include "optray/error.hpp"
#include "optray/linalg.hpp"
#include "optray/loss.hpp"

namespace optray {

/// Minimizer of the restricted risk R_S(v) = L(A_S v) / n over v in S.
struct ScOptimum {
  Eigen::VectorXd v_bar;
  double risk_inf = 0.0;  // R_S(v_bar) = inf_w R(w), with n the full dataset size
  double lambda_est = std::numeric_limits<double>::infinity();
  double grad_norm = 0.0;
  long iterations = 0;
};

struct ScvxOptions {
  double tol = 1e-10;  // on |Pi_S grad R_S|
  long max_iters = 1000000;
  int lambda_directions = 32;
};

namespace detail {

struct RestrictedRisk {
  Eigen::MatrixXd M;  // A_S B, coordinates in the basis of S
  LossKind loss;
  double n;

  double value(const Eigen::VectorXd& c) const {
    const Eigen::VectorXd z = M * c;
    double s = 0.0;
    for (Eigen::Index i = 0; i < z.size(); ++i) s += loss::value(loss, z[i]);
    return s / n;
  }

  Eigen::VectorXd gradient(const Eigen::VectorXd& c) const {
    const Eigen::VectorXd z = M * c;
    Eigen::VectorXd g(z.size());
    for (Eigen::Index i = 0; i < z.size(); ++i) g[i] = loss::deriv(loss, z[i]);
    return M.transpose() * g / n;
  }

  Eigen::MatrixXd hessian(const Eigen::VectorXd& c) const {
    const Eigen::VectorXd z = M * c;
    Eigen::VectorXd h(z.size());
    for (Eigen::Index i = 0; i < z.size(); ++i) h[i] = loss::second(loss, z[i]);
    return M.transpose() * h.asDiagonal() * M / n;
  }
};

// Halton point k in [-1,1]^r, normalized; used as quasi-random ray directions.
inline Eigen::VectorXd halton_direction(int k, Eigen::Index r) {
  static constexpr int primes[] = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53};
  Eigen::VectorXd v(r);
  for (Eigen::Index j = 0; j < r; ++j) {
    const int b = primes[j % 16];
    double f = 1.0, h = 0.0;
    for (int i = k; i > 0; i /= b) {
      f /= b;
      h += f * (i % b);
    }
    v[j] = 2.0 * h - 1.0;
  }
  return v;
}

}  // namespace detail

/// Gradient descent over coordinates of S. The step is backtracked from twice
/// the previous accepted step until the directional derivative at the trial
/// point is still nonpositive, which keeps the decrease certified even when
/// risk differences fall below rounding.
inline ScOptimum solve_vbar(const Eigen::MatrixXd& a_s, const Basis& basis_S, LossKind loss, Eigen::Index n_total,
                            const ScvxOptions& opt = {}) {
  ScOptimum out;
  const Eigen::Index d = basis_S.dim();
  out.v_bar = Eigen::VectorXd::Zero(d);
  if (a_s.rows() == 0) return out;
  if (n_total < a_s.rows()) fail(ErrorKind::usage, "solve_vbar: n_total smaller than A_S");

  detail::RestrictedRisk f{a_s * basis_S.columns, loss, static_cast<double>(n_total)};
  Eigen::VectorXd c = Eigen::VectorXd::Zero(basis_S.rank());
  if (basis_S.rank() == 0) {
    out.risk_inf = f.value(c);
    return out;
  }

  double fc = f.value(c);
  Eigen::VectorXd g = f.gradient(c);
  double step = 1.0;
  long it = 0;
  for (; it < opt.max_iters && g.norm() > opt.tol; ++it) {
    step *= 2.0;
    Eigen::VectorXd trial, gt;
    for (int halvings = 0;; ++halvings) {
      trial = c - step * g;
      gt = f.gradient(trial);
      if (gt.dot(g) >= 0 && std::isfinite(gt.squaredNorm())) break;
      step *= 0.5;
      if (halvings > 200) fail(ErrorKind::numerical, "solve_vbar: line search failed");
    }
    const double ft = f.value(trial);
    if (ft > fc + 1e-12 * std::abs(fc))
      fail(ErrorKind::numerical, "solve_vbar: risk increased along an accepted step at iteration " +
                                     std::to_string(it));
    c = std::move(trial);
    g = std::move(gt);
    fc = ft;
  }
  out.grad_norm = g.norm();
  out.iterations = it;
  if (!(out.grad_norm <= opt.tol))
    fail(ErrorKind::numerical, "solve_vbar: gradient norm " + std::to_string(out.grad_norm) + " after " +
                                   std::to_string(it) + " iterations");
  out.v_bar = basis_S.columns * c;
  out.risk_inf = fc;
  return out;
}

inline double infimum_risk(const Decomposition&, const ScOptimum& opt) { return opt.risk_inf; }

/// Sampled strong-convexity modulus of R_S over its 1-sublevel set in S: the
/// smallest Hessian eigenvalue at v_bar and at the midpoint and boundary point
/// of quasi-random rays from v_bar. An upper estimate of the true modulus.
/// Returns +inf when S = {0}.
inline double estimate_lambda(const Eigen::MatrixXd& a_s, const Basis& basis_S, LossKind loss, Eigen::Index n_total,
                              const ScOptimum& opt, const ScvxOptions& sopt = {}) {
  const Eigen::Index r = basis_S.rank();
  if (r == 0 || a_s.rows() == 0) return std::numeric_limits<double>::infinity();
  detail::RestrictedRisk f{a_s * basis_S.columns, loss, static_cast<double>(n_total)};
  const Eigen::VectorXd c0 = basis_S.columns.transpose() * opt.v_bar;

  auto min_eig = [&](const Eigen::VectorXd& c) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(f.hessian(c), Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
  };

  double lam = min_eig(c0);
  const bool degenerate = f.value(c0) >= 1.0;
  int used = 0;
  for (int k = 1; used < sopt.lambda_directions && k < 100 * sopt.lambda_directions; ++k) {
    Eigen::VectorXd dir = detail::halton_direction(k, r);
    if (dir.norm() < 1e-3) continue;
    dir.normalize();
    ++used;
    if (degenerate) continue;

    double hi = 1.0;
    int doublings = 0;
    while (f.value(c0 + hi * dir) < 1.0) {
      hi *= 2.0;
      if (++doublings > 80) fail(ErrorKind::numerical, "estimate_lambda: sublevel set unbounded along a ray");
    }
    double lo = 0.0;
    for (int b = 0; b < 100 && hi - lo > 1e-12 * hi; ++b) {
      const double mid = 0.5 * (lo + hi);
      (f.value(c0 + mid * dir) < 1.0 ? lo : hi) = mid;
    }
    lam = std::min({lam, min_eig(c0 + 0.5 * lo * dir), min_eig(c0 + lo * dir)});
  }
  if (!(lam > 0)) fail(ErrorKind::numerical, "estimate_lambda: nonpositive curvature " + std::to_string(lam));
  return lam;
}

}  // namespace optray
