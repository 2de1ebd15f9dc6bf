#pragma once

#include <string>

#include <Eigen/Dense>

#include "optray/dataset.hpp"
#include "optray/decompose.hpp"
#include "optray/gd.hpp"
#include "optray/margin.hpp"
#include "optray/scvx.hpp"

namespace optray {

struct Tolerances {
  double lp = 1e-7;       // LP slack threshold for strict separability
  double rank = kDefaultRankTol;
  double margin = 1e-8;   // duality gap
  double scvx = 1e-10;    // gradient norm at v_bar
  double ball = 1e-9;     // gradient mapping of the constrained comparator
};

/// Everything the checks need to know about A besides the trajectory.
struct Structure {
  MarginMatrix A;
  LossKind loss = LossKind::logistic;
  Decomposition dec;
  bool has_margin = false;  // A_c nonempty
  MarginSolution margin;
  ScOptimum sc;
  Tolerances tol;
  std::string digest;

  Eigen::Index n() const { return A.n(); }
  Eigen::Index n_c() const { return static_cast<Eigen::Index>(dec.sep_rows.size()); }
  double gamma() const { return has_margin ? margin.gamma : 0.0; }
  double risk_inf() const { return sc.risk_inf; }
  double lambda() const { return sc.lambda_est; }
  bool s_nontrivial() const { return dec.basis_S.rank() > 0; }
};

inline Structure analyze(const MarginMatrix& A, LossKind loss, const Tolerances& tol = {}) {
  Structure s;
  s.A = A;
  s.loss = loss;
  s.tol = tol;
  s.digest = digest(A.rows());
  s.dec = partition(A, DecomposeOptions{tol.lp, tol.rank});
  if (!s.dec.sep_rows.empty()) {
    s.margin = solve_dual(s.dec.a_perp, MarginOptions{tol.margin});
    s.has_margin = true;
  }
  const Eigen::MatrixXd a_s = A.select(s.dec.sc_rows).rows();
  s.sc = solve_vbar(a_s, s.dec.basis_S, loss, A.n(), ScvxOptions{tol.scvx});
  s.sc.lambda_est = estimate_lambda(a_s, s.dec.basis_S, loss, A.n(), s.sc, ScvxOptions{tol.scvx});
  return s;
}

inline Tracking tracking_for(const Structure& s) {
  Tracking t;
  t.sep_rows = s.dec.sep_rows;
  t.basis_S = s.dec.basis_S.columns;
  t.risk_inf = s.risk_inf();
  t.gamma = s.gamma();
  t.lambda = s.lambda();
  t.has_sc = !s.dec.sc_rows.empty();
  return t;
}

}  // namespace optray
