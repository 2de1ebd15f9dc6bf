#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "optray/dataset.hpp"
#include "optray/error.hpp"
#include "optray/loss.hpp"

namespace optray {

enum class Schedule { constant_one, inv_sqrt };

inline std::string_view to_string(Schedule s) { return s == Schedule::constant_one ? "constant_one" : "inv_sqrt"; }

inline Schedule parse_schedule(std::string_view s) {
  if (s == "constant_one" || s == "constant") return Schedule::constant_one;
  if (s == "inv_sqrt") return Schedule::inv_sqrt;
  fail(ErrorKind::usage, "unknown schedule '" + std::string(s) + "' (expected constant_one|inv_sqrt)");
}

/// eta_j; both schedules stay <= 1.
inline double step_size(Schedule s, long j) {
  return s == Schedule::constant_one ? 1.0 : 1.0 / std::sqrt(static_cast<double>(j) + 1.0);
}

/// (1/n) sum_i l((Aw)_i)
inline double risk(const MarginMatrix& A, LossKind loss, const Eigen::VectorXd& w) {
  if (w.size() != A.d()) fail(ErrorKind::validation, "risk: dimension mismatch");
  const Eigen::VectorXd z = A.rows() * w;
  double s = 0.0;
  for (Eigen::Index i = 0; i < z.size(); ++i) s += loss::value(loss, z[i]);
  return s / static_cast<double>(A.n());
}

/// (1/n) A^T [l'((Aw)_i)]_i
inline Eigen::VectorXd grad(const MarginMatrix& A, LossKind loss, const Eigen::VectorXd& w) {
  if (w.size() != A.d()) fail(ErrorKind::validation, "grad: dimension mismatch");
  const Eigen::VectorXd z = A.rows() * w;
  Eigen::VectorXd g(z.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) g[i] = loss::deriv(loss, z[i]);
  return A.rows().transpose() * g / static_cast<double>(A.n());
}

// ---------------------------------------------------------------------------
// Constrained comparator  w_bar = argmin { R(w) : |w| <= radius }

struct BallSolution {
  Eigen::VectorXd w;
  double risk = 0.0;
  double grad_mapping = 0.0;  // |w - P(w - grad ln R(w))|
  long iterations = 0;
  bool converged = false;
};

class BallSolveError : public Error {
 public:
  BallSolveError(const std::string& what, BallSolution best)
      : Error(ErrorKind::numerical, what), best_(std::move(best)) {}
  const BallSolution& best() const { return best_; }

 private:
  BallSolution best_;
};

namespace detail {

inline Eigen::VectorXd ball_project(const Eigen::VectorXd& w, double radius) {
  const double nw = w.norm();
  return nw > radius ? Eigen::VectorXd(w * (radius / nw)) : w;
}

// ln R and its gradient grad R / R, from one pass over the rows.
inline double log_risk_and_grad(const MarginMatrix& A, LossKind loss, const Eigen::VectorXd& w, Eigen::VectorXd& g) {
  const Eigen::VectorXd z = A.rows() * w;
  Eigen::VectorXd lp(z.size());
  double s = 0.0;
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    s += loss::value(loss, z[i]);
    lp[i] = loss::deriv(loss, z[i]);
  }
  g = A.rows().transpose() * lp / s;
  return std::log(s / static_cast<double>(A.n()));
}

}  // namespace detail

/// Projected gradient on ln R over the ball (same minimizers as R, better
/// scaled once the risk is tiny). Starts from `start` (projected into the
/// ball) when given; the returned point never has higher risk than the start.
inline BallSolution constrained_opt_detail(const MarginMatrix& A, LossKind loss, double radius, double tol,
                                           const std::optional<Eigen::VectorXd>& start = std::nullopt,
                                           long max_iters = 200000) {
  if (!(radius >= 0)) fail(ErrorKind::usage, "constrained_opt: radius must be >= 0");
  BallSolution out;
  const Eigen::Index d = A.d();
  if (radius == 0.0) {
    out.w = Eigen::VectorXd::Zero(d);
    out.risk = risk(A, loss, out.w);
    out.converged = true;
    return out;
  }
  Eigen::VectorXd w = start ? detail::ball_project(*start, radius) : Eigen::VectorXd::Zero(d);
  Eigen::VectorXd g, gt;
  double f = detail::log_risk_and_grad(A, loss, w, g);
  double step = 1.0;
  long it = 0;
  double gm = (w - detail::ball_project(w - g, radius)).norm();
  for (; it < max_iters && gm > tol; ++it) {
    Eigen::VectorXd trial;
    double ft = 0.0;
    for (int halvings = 0;; ++halvings) {
      trial = detail::ball_project(w - step * g, radius);
      ft = detail::log_risk_and_grad(A, loss, trial, gt);
      const Eigen::VectorXd dw = trial - w;
      const double dw2 = dw.squaredNorm();
      const double model = f + g.dot(dw) + dw2 / (2.0 * step);
      // Once value differences sink below rounding, the local curvature
      // estimate from gradients still certifies the step length.
      if (ft <= model || (gt - g).dot(dw) <= dw2 / step) break;
      step *= 0.5;
      if (halvings > 100) break;
    }
    if (ft > f + 1e-13 * std::abs(f)) break;  // no representable progress left
    w = std::move(trial);
    g = gt;
    f = ft;
    step = std::min(step * 2.0, 1e6);
    gm = (w - detail::ball_project(w - g, radius)).norm();
  }
  out.w = w;
  out.risk = std::exp(f);
  out.grad_mapping = gm;
  out.iterations = it;
  out.converged = gm <= tol;
  return out;
}

/// Throwing form: non-convergence raises BallSolveError carrying the best iterate.
inline Eigen::VectorXd constrained_opt(const MarginMatrix& A, LossKind loss, double radius, double tol = 1e-9,
                                       const std::optional<Eigen::VectorXd>& start = std::nullopt,
                                       long max_iters = 200000) {
  auto sol = constrained_opt_detail(A, loss, radius, tol, start, max_iters);
  if (!sol.converged)
    throw BallSolveError("constrained_opt: gradient mapping " + std::to_string(sol.grad_mapping) + " after " +
                             std::to_string(sol.iterations) + " iterations",
                         sol);
  return sol.w;
}

// ---------------------------------------------------------------------------
// Trajectory

/// Structure-dependent quantities the engine accumulates per step. Supplied by
/// the analysis layer; absent for a plain run.
struct Tracking {
  std::vector<int> sep_rows;   // A_c
  Eigen::MatrixXd basis_S;     // d x r orthonormal
  double risk_inf = 0.0;       // R-bar
  double gamma = 0.0;          // max margin, 0 when A_c empty
  double lambda = std::numeric_limits<double>::infinity();
  bool has_sc = false;         // A_S nonempty
  double gen_eps = 0.3;        // contraction check parameters (epsilon, r)
  double gen_r = 0.9;
};

struct Checkpoint {
  long t = 0;
  Eigen::VectorXd w;
  double risk = 0.0;
  double grad_norm = 0.0;
  double gamma_t = 0.0;   // |grad ln R(w_t)|
  double eta = 0.0;
  double eta_hat = 0.0;   // eta_t R(w_t)
  double norm_w = 0.0;
  Eigen::VectorXd proj_S;
  double proj_perp_norm = 0.0;
  Eigen::VectorXd dir;    // w_t / |w_t|, zero when w_t = 0
  double perceptron_sum = 0.0;    // sum_{j<t} eta_j |grad L(A_c w_j)|_1 / n
  double sum_eta = 0.0;           // sum_{j<t} eta_j
  double sum_etahat_gamma = 0.0;  // sum_{j<t} etahat_j gamma_j
  double sum_descent = 0.0;       // sum_{j<t} etahat_j (1 - etahat_j/2) gamma_j^2
  double risk_c = 0.0;            // R_c(w_t) = L(A_c w_t) / n
  double sup_proj_S = 0.0;        // max_{j<=t} |Pi_S w_j|
  double sum_eta_risk_c = 0.0;    // sum_{j<t} eta_j R_c(w_j)
  double sum_eta_cross = 0.0;     // sum_{j<t} eta_j <grad R_c(w_j), w_j - Pi_perp w_j>
  double sum_descent_gen = 0.0;   // sum_{j=t0}^{t-1} etahat_j (1 - etahat_j/2) gamma_j past contraction qualification
  // Constrained comparator at radius |w_t|.
  bool has_wbar = false;
  Eigen::VectorXd wbar;
  double wbar_risk = 0.0;
  Eigen::VectorXd wbar_proj_S;
  double wbar_grad_mapping = 0.0;
  bool wbar_converged = false;
};

/// Worst slacks of the per-step inequalities, streamed during the run.
/// A slack is bound minus quantity; `*_scale` is the magnitude of the
/// quantity at the worst step (for the relative part of the tolerance).
struct StepStats {
  long steps = 0;
  double max_eta_hat = 0.0;
  bool monotone = true;

  double smooth_slack = std::numeric_limits<double>::infinity();
  double smooth_scale = 0.0;
  long smooth_step = -1;

  double norm_slack = std::numeric_limits<double>::infinity();
  long norm_step = -1;

  double perp_slack = std::numeric_limits<double>::infinity();
  long perp_step = -1;

  double gen_slack = std::numeric_limits<double>::infinity();
  double gen_scale = 0.0;
  long gen_step = -1;
  long gen_first = -1;
  long gen_count = 0;

  void record(double slack, double scale, long step, double& worst, double& worst_scale, long& where) {
    if (slack < worst) {
      worst = slack;
      worst_scale = scale;
      where = step;
    }
  }
};

struct GDTrace {
  LossKind loss = LossKind::logistic;
  Schedule schedule = Schedule::constant_one;
  long T = 0;
  int per_decade = 20;
  double ball_tol = 1e-9;
  bool tracked = false;
  std::vector<Checkpoint> checkpoints;
  StepStats stats;
  bool aborted = false;
  std::string abort_reason;
};

struct RunOptions {
  int per_decade = 20;
  bool compute_wbar = true;
  double ball_tol = 1e-9;
  long ball_max_iters = 200000;
  double eta_scale = 1.0;  // multiplies every eta_j; values above 1 leave the analyzed regime
};

/// 1 and T plus ~per_decade log-spaced times per decade in between.
inline std::vector<long> checkpoint_times(long T, int per_decade) {
  if (T < 1) fail(ErrorKind::usage, "checkpoint_times: T must be >= 1");
  if (per_decade < 1) fail(ErrorKind::usage, "checkpoint_times: per_decade must be >= 1");
  std::vector<long> ts;
  for (int k = 0;; ++k) {
    const double v = std::pow(10.0, static_cast<double>(k) / per_decade);
    const long t = static_cast<long>(std::llround(v));
    if (t > T) break;
    if (ts.empty() || t > ts.back()) ts.push_back(t);
  }
  if (ts.empty() || ts.back() != T) ts.push_back(T);
  return ts;
}

namespace detail {

struct Evaluation {
  double risk = 0.0;
  Eigen::VectorXd grad;
  Eigen::VectorXd z, lv, lp;
};

inline void evaluate(const Eigen::MatrixXd& A, LossKind loss, const Eigen::VectorXd& w, Evaluation& e) {
  e.z.noalias() = A * w;
  const Eigen::Index n = A.rows();
  e.lv.resize(n);
  e.lp.resize(n);
  double s = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    e.lv[i] = loss::value(loss, e.z[i]);
    e.lp[i] = loss::deriv(loss, e.z[i]);
    s += e.lv[i];
  }
  e.risk = s / static_cast<double>(n);
  e.grad.noalias() = A.transpose() * e.lp;
  e.grad /= static_cast<double>(n);
}

}  // namespace detail

/// Gradient descent from w_0 = 0: w_{j+1} = w_j - eta_j grad R(w_j), for T
/// steps. Accumulators advance every step; full records are kept only at
/// checkpoint_times(T). With `tracking`, structure-dependent sums and per-step
/// inequality slacks are streamed as well.
inline GDTrace run(const MarginMatrix& A, LossKind loss, Schedule sched, long T, const RunOptions& opt = {},
                   const Tracking* tracking = nullptr) {
  if (T < 1) fail(ErrorKind::usage, "run: T must be >= 1");
  GDTrace tr;
  tr.loss = loss;
  tr.schedule = sched;
  tr.T = T;
  tr.per_decade = opt.per_decade;
  tr.ball_tol = opt.ball_tol;
  tr.tracked = tracking != nullptr;

  const Eigen::Index n = A.n();
  const Eigen::Index d = A.d();
  const double nd = static_cast<double>(n);
  const Eigen::MatrixXd& M = A.rows();

  std::vector<char> is_sep(static_cast<std::size_t>(n), 0);
  Eigen::MatrixXd BS(d, 0);
  bool contraction = false;
  double gen_threshold = 0.0;
  if (tracking) {
    for (int i : tracking->sep_rows) is_sep[static_cast<std::size_t>(i)] = 1;
    BS = tracking->basis_S;
    contraction = !tracking->sep_rows.empty() && tracking->has_sc && std::isfinite(tracking->lambda);
    gen_threshold = std::min(tracking->gen_eps / nd, tracking->lambda * (1.0 - tracking->gen_r) / 2.0);
  }
  auto proj_S = [&](const Eigen::VectorXd& w) -> Eigen::VectorXd {
    if (BS.cols() == 0) return Eigen::VectorXd::Zero(d);
    return BS * (BS.transpose() * w);
  };

  const auto times = checkpoint_times(T, opt.per_decade);
  std::size_t next_cp = 0;

  Eigen::VectorXd w = Eigen::VectorXd::Zero(d);
  detail::Evaluation cur, nxt;
  detail::evaluate(M, loss, w, cur);

  Checkpoint acc;  // running sums
  Eigen::VectorXd prev_wbar;
  bool have_prev_wbar = false;
  auto& st = tr.stats;
  Eigen::VectorXd gc(d), ps(d);

  for (long j = 0;; ++j) {
    const double eta = opt.eta_scale * step_size(sched, j);
    const double gnorm = cur.grad.norm();
    const double gam = gnorm / cur.risk;
    const double eh = eta * cur.risk;

    // Separable-part quantities at w_j.
    double risk_c = 0.0, l1 = 0.0, cross = 0.0;
    if (tracking) {
      gc.setZero();
      for (Eigen::Index i = 0; i < n; ++i)
        if (is_sep[static_cast<std::size_t>(i)]) {
          risk_c += cur.lv[i];
          l1 += cur.lp[i];
          gc.noalias() += cur.lp[i] * M.row(i).transpose();
        }
      risk_c /= nd;
      gc /= nd;
      ps = proj_S(w);
      cross = gc.dot(ps);
      acc.sup_proj_S = std::max(acc.sup_proj_S, ps.norm());
    }

    if (next_cp < times.size() && times[next_cp] == j) {
      Checkpoint cp = acc;
      cp.t = j;
      cp.w = w;
      cp.risk = cur.risk;
      cp.grad_norm = gnorm;
      cp.gamma_t = gam;
      cp.eta = eta;
      cp.eta_hat = eh;
      cp.norm_w = w.norm();
      cp.proj_S = tracking ? ps : Eigen::VectorXd::Zero(d);
      cp.proj_perp_norm = (w - cp.proj_S).norm();
      cp.dir = cp.norm_w > 0 ? Eigen::VectorXd(w / cp.norm_w) : Eigen::VectorXd::Zero(d);
      cp.risk_c = risk_c;
      if (opt.compute_wbar) {
        // Warm start from whichever feasible candidate has the lowest risk.
        Eigen::VectorXd start = w;
        double best = cur.risk;
        if (have_prev_wbar && prev_wbar.norm() > 0) {
          for (const Eigen::VectorXd& cand : {Eigen::VectorXd(prev_wbar),
                                              Eigen::VectorXd(prev_wbar * (cp.norm_w / prev_wbar.norm()))}) {
            const double rc = risk(A, loss, detail::ball_project(cand, cp.norm_w));
            if (rc < best) {
              best = rc;
              start = detail::ball_project(cand, cp.norm_w);
            }
          }
        }
        auto sol = constrained_opt_detail(A, loss, cp.norm_w, opt.ball_tol, start, opt.ball_max_iters);
        cp.has_wbar = true;
        cp.wbar = sol.w;
        cp.wbar_risk = sol.risk;
        cp.wbar_proj_S = proj_S(sol.w);
        cp.wbar_grad_mapping = sol.grad_mapping;
        cp.wbar_converged = sol.converged;
        prev_wbar = sol.w;
        have_prev_wbar = true;
      }
      tr.checkpoints.push_back(std::move(cp));
      ++next_cp;
    }
    if (j == T) break;

    // Step.
    st.max_eta_hat = std::max(st.max_eta_hat, eh);
    acc.sum_eta += eta;
    acc.sum_etahat_gamma += eh * gam;
    acc.sum_descent += eh * (1.0 - eh / 2.0) * gam * gam;
    if (tracking) {
      acc.perceptron_sum += eta * l1 / nd;
      acc.sum_eta_risk_c += eta * risk_c;
      acc.sum_eta_cross += eta * cross;
    }
    w.noalias() -= eta * cur.grad;
    detail::evaluate(M, loss, w, nxt);
    st.steps = j + 1;
    if (!std::isfinite(nxt.risk) || !nxt.grad.allFinite()) {
      tr.aborted = true;
      tr.abort_reason = "non-finite risk at step " + std::to_string(j + 1);
      break;
    }

    if (nxt.risk > cur.risk) st.monotone = false;
    const double smooth_bound = cur.risk * (1.0 - eh * (1.0 - eh / 2.0) * gam * gam);
    st.record(smooth_bound - nxt.risk, nxt.risk, j, st.smooth_slack, st.smooth_scale, st.smooth_step);
    double unused = 0.0;
    const double wn = w.norm();
    st.record(acc.sum_etahat_gamma - wn, wn, j + 1, st.norm_slack, unused, st.norm_step);
    if (tracking) {
      const double perp = (w - proj_S(w)).norm();
      // Accumulator at j+1 includes step j.
      st.record(acc.perceptron_sum - perp, perp, j + 1, st.perp_slack, unused, st.perp_step);
    }
    if (contraction) {
      const double excess = cur.risk - tracking->risk_inf;
      if (excess <= gen_threshold && eh <= 1.0) {
        if (st.gen_first < 0) st.gen_first = j;
        ++st.gen_count;
        const double rate = tracking->gen_r * (1.0 - tracking->gen_eps) * tracking->gamma * gam * eh * (1.0 - eh / 2.0);
        const double next_excess = nxt.risk - tracking->risk_inf;
        st.record(excess * std::exp(-rate) - next_excess, std::abs(next_excess), j, st.gen_slack, st.gen_scale,
                  st.gen_step);
        acc.sum_descent_gen += eh * (1.0 - eh / 2.0) * gam;
      }
    }
    std::swap(cur, nxt);
  }
  return tr;
}

}  // namespace optray
