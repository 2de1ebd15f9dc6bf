#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "optray/dataset.hpp"
#include "optray/error.hpp"
#include "optray/linalg.hpp"
#include "optray/simplex_lp.hpp"

namespace optray {

struct DecomposeOptions {
  double slack_tol = 1e-7;  // a row is strictly separable when its LP slack exceeds this
  double rank_tol = kDefaultRankTol;
};

/// A direction u with (Au)_i <= -slacks_i on the rows it was asked about.
struct Certificate {
  Eigen::VectorXd u;
  Eigen::VectorXd slacks;  // n entries in [0,1]; zero for rows outside the active set
  long lp_iterations = 0;
};

/// Unique split of the rows of A into a strictly separable part A_c and a
/// strongly convex part A_S, with S = span(A_S^T) and its complement.
struct Decomposition {
  Eigen::Index n = 0;
  Eigen::Index d = 0;
  std::vector<int> sep_rows;  // A_c, ascending
  std::vector<int> sc_rows;   // A_S, ascending
  Basis basis_S;
  Basis basis_perp;
  Eigen::MatrixXd a_perp;  // rows of A_c projected onto S-perp
  int lp_solves = 0;
};

namespace detail {

// Box |u|_inf <= M keeps every LP bounded. Certificates scale linearly, so a
// box proportional to n leaves room for any slack up to 1.
inline double certificate_box(Eigen::Index n) { return 10.0 * static_cast<double>(n); }

// u = u_plus - u_minus with both halves in [0, box]; the first 2d LP variables.
inline void add_box_rows(Eigen::MatrixXd& G, Eigen::VectorXd& h, Eigen::Index& row, Eigen::Index d, double box) {
  for (Eigen::Index j = 0; j < 2 * d; ++j, ++row) {
    G(row, j) = 1.0;
    h[row] = box;
  }
}

inline void put_row(Eigen::MatrixXd& G, Eigen::Index row, const Eigen::RowVectorXd& a, double sign = 1.0) {
  const Eigen::Index d = a.size();
  G.block(row, 0, 1, d) = sign * a;
  G.block(row, d, 1, d) = -sign * a;
}

inline Eigen::VectorXd direction_from(const Eigen::VectorXd& x, Eigen::Index d) {
  return x.head(d) - x.segment(d, d);
}

}  // namespace detail

/// Solves  max sum_i s_i  s.t. (Au)_i <= -s_i (i in active), 0 <= s <= 1,
/// |u|_inf <= 10 n. Rows outside `active` are unconstrained.
inline Certificate separable_certificate(const MarginMatrix& A, const std::vector<int>& active) {
  if (active.empty()) fail(ErrorKind::usage, "separable_certificate: empty active set");
  const Eigen::Index d = A.d();
  const auto k = static_cast<Eigen::Index>(active.size());
  const Eigen::Index nv = 2 * d + k;
  const Eigen::Index m = 2 * k + 2 * d;

  lp::Problem p{Eigen::MatrixXd::Zero(m, nv), Eigen::VectorXd::Zero(m), Eigen::VectorXd::Zero(nv)};
  Eigen::Index row = 0;
  for (Eigen::Index a = 0; a < k; ++a, ++row) {
    detail::put_row(p.G, row, A.rows().row(active[static_cast<std::size_t>(a)]));
    p.G(row, 2 * d + a) = 1.0;
  }
  for (Eigen::Index a = 0; a < k; ++a, ++row) {
    p.G(row, 2 * d + a) = 1.0;
    p.h[row] = 1.0;
  }
  detail::add_box_rows(p.G, p.h, row, d, detail::certificate_box(A.n()));
  p.c.tail(k).setOnes();

  const auto res = lp::solve(p);
  Certificate cert;
  cert.u = detail::direction_from(res.x, d);
  cert.slacks = Eigen::VectorXd::Zero(A.n());
  for (Eigen::Index a = 0; a < k; ++a)
    cert.slacks[active[static_cast<std::size_t>(a)]] = std::clamp(res.x[2 * d + a], 0.0, 1.0);
  cert.lp_iterations = res.iterations;
  return cert;
}

/// Optimal value of  max s  s.t. Au <= 0, (Au)_i <= -s, s <= 1, |u|_inf <= 10 n.
inline double row_slack(const MarginMatrix& A, int i) {
  if (i < 0 || i >= A.n()) fail(ErrorKind::usage, "row_feasible: index out of range");
  const Eigen::Index d = A.d();
  const Eigen::Index n = A.n();
  const Eigen::Index nv = 2 * d + 1;
  const Eigen::Index m = n + 1 + 2 * d;
  lp::Problem p{Eigen::MatrixXd::Zero(m, nv), Eigen::VectorXd::Zero(m), Eigen::VectorXd::Zero(nv)};
  Eigen::Index row = 0;
  for (Eigen::Index j = 0; j < n; ++j, ++row) {
    detail::put_row(p.G, row, A.rows().row(j));
    if (j == i) p.G(row, 2 * d) = 1.0;
  }
  p.G(row, 2 * d) = 1.0;
  p.h[row++] = 1.0;
  detail::add_box_rows(p.G, p.h, row, d, detail::certificate_box(n));
  p.c[2 * d] = 1.0;
  return lp::solve(p).objective;
}

/// Per-row oracle: does some u have Au <= 0 and (Au)_i < 0?
inline bool row_feasible(const MarginMatrix& A, int i, double slack_tol = DecomposeOptions{}.slack_tol) {
  return row_slack(A, i) > slack_tol;
}

/// Assembles bases and A_perp for a given row split.
inline Decomposition make_decomposition(const MarginMatrix& A, std::vector<int> sep, std::vector<int> sc,
                                        double rank_tol = kDefaultRankTol) {
  std::sort(sep.begin(), sep.end());
  std::sort(sc.begin(), sc.end());
  Decomposition dec;
  dec.n = A.n();
  dec.d = A.d();
  dec.sep_rows = std::move(sep);
  dec.sc_rows = std::move(sc);
  dec.basis_S = orthonormal_basis(A.select(dec.sc_rows).rows(), A.d(), rank_tol);
  dec.basis_perp = complement(dec.basis_S);
  const Eigen::MatrixXd a_c = A.select(dec.sep_rows).rows();
  const Eigen::MatrixXd& P = dec.basis_perp.columns;
  dec.a_perp = a_c * P * P.transpose();
  return dec;
}

/// Greedy maximal separable subset: solve the aggregate LP on the unclassified
/// rows, move every row with slack above slack_tol, repeat until nothing moves.
inline Decomposition partition(const MarginMatrix& A, const DecomposeOptions& opt = {}) {
  std::vector<int> active(static_cast<std::size_t>(A.n()));
  for (Eigen::Index i = 0; i < A.n(); ++i) active[static_cast<std::size_t>(i)] = static_cast<int>(i);
  std::vector<int> sep;
  int solves = 0;
  while (!active.empty()) {
    const auto cert = separable_certificate(A, active);
    ++solves;
    std::vector<int> keep;
    bool moved = false;
    for (int i : active) {
      if (cert.slacks[i] > opt.slack_tol) {
        sep.push_back(i);
        moved = true;
      } else {
        keep.push_back(i);
      }
    }
    active = std::move(keep);
    if (!moved) break;
  }
  auto dec = make_decomposition(A, std::move(sep), std::move(active), opt.rank_tol);
  dec.lp_solves = solves;
  return dec;
}

struct ValidationEntry {
  std::string name;
  bool passed = false;
  bool skipped = false;
  double residual = 0.0;
  std::string detail;
};

struct ValidationReport {
  std::vector<ValidationEntry> entries;

  bool passed() const {
    return std::all_of(entries.begin(), entries.end(), [](const auto& e) { return e.passed || e.skipped; });
  }
};

/// Structural checks of a decomposition against the matrix it claims to split:
///  (a) a joint certificate separates A_c strictly while leaving A_S at zero,
///  (b) A_S cannot be separated: 0 lies in conv(rows of A_S),
///  (c) A_S has no component along the complement basis.
inline ValidationReport validate(const Decomposition& dec, const MarginMatrix& A,
                                 const DecomposeOptions& opt = {}) {
  ValidationReport rep;
  const Eigen::Index d = A.d();
  const Eigen::MatrixXd a_c = A.select(dec.sep_rows).rows();
  const Eigen::MatrixXd a_s = A.select(dec.sc_rows).rows();

  ValidationEntry a;

  a.name = "joint_certificate";
  if (dec.sep_rows.empty()) {
    a.skipped = true;
    a.detail = "A_c empty";
  } else {
    // max t  s.t.  A_c u + t <= 0,  A_S u = 0,  t <= 1,  |u|_inf <= 10 n
    const auto nc = a_c.rows();
    const auto ns = a_s.rows();
    const Eigen::Index nv = 2 * d + 1;
    const Eigen::Index m = nc + 2 * ns + 1 + 2 * d;
    lp::Problem p{Eigen::MatrixXd::Zero(m, nv), Eigen::VectorXd::Zero(m), Eigen::VectorXd::Zero(nv)};
    Eigen::Index row = 0;
    for (Eigen::Index i = 0; i < nc; ++i, ++row) {
      detail::put_row(p.G, row, a_c.row(i));
      p.G(row, 2 * d) = 1.0;
    }
    for (Eigen::Index i = 0; i < ns; ++i) {
      detail::put_row(p.G, row++, a_s.row(i), 1.0);
      detail::put_row(p.G, row++, a_s.row(i), -1.0);
    }
    p.G(row, 2 * d) = 1.0;
    p.h[row++] = 1.0;
    detail::add_box_rows(p.G, p.h, row, d, detail::certificate_box(A.n()));
    p.c[2 * d] = 1.0;
    const auto res = lp::solve(p);
    const Eigen::VectorXd u = detail::direction_from(res.x, d);
    const double leak = ns > 0 ? (a_s * u).cwiseAbs().maxCoeff() : 0.0;
    a.residual = res.objective;
    a.passed = res.objective > opt.slack_tol && leak <= 1e-9;
    a.detail = "margin " + std::to_string(res.objective) + ", |A_S u|_inf " + std::to_string(leak);
  }
  rep.entries.push_back(a);

  ValidationEntry b;

  b.name = "remainder_not_separable";
  ValidationEntry c;
  c.name = "remainder_inside_S";
  if (dec.sc_rows.empty()) {
    b.passed = c.passed = true;
    b.detail = c.detail = "A_S empty";
  } else {
    constexpr double kHullTol = 1e-6;
    const auto it = nearest_hull_point(
        a_s, [&](const Eigen::VectorXd&, const Eigen::VectorXd& p) { return p.norm() <= kHullTol; }, 200000);
    b.residual = it.point.norm();
    b.passed = b.residual <= kHullTol;
    b.detail = "min |A_S^T q| over simplex " + std::to_string(b.residual);

    c.residual = dec.basis_perp.rank() > 0 ? (a_s * dec.basis_perp.columns).cwiseAbs().maxCoeff() : 0.0;
    c.passed = c.residual <= 1e-9;
  }
  rep.entries.push_back(b);
  rep.entries.push_back(c);
  return rep;
}

}  // namespace optray
