#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "optray/analysis.hpp"
#include "optray/error.hpp"
#include "optray/gd.hpp"
#include "optray/loss.hpp"
#include "optray/margin.hpp"

namespace optray {

inline double numeric_tol(double quantity) { return 1e-9 + 1e-12 * std::abs(quantity); }

struct CheckResult {
  std::string name;
  bool applicable = true;
  bool holds = true;
  double worst_slack = std::numeric_limits<double>::infinity();  // bound - quantity
  double tolerance = 1e-9;
  long location = -1;  // checkpoint t (or step index for streamed checks)
  bool estimate_conditioned = false;
  std::string detail;

  std::string status() const { return !applicable ? "not_applicable" : holds ? "pass" : "fail"; }
};

struct TrendFit {
  std::string name;
  bool applicable = true;
  bool holds = true;
  double exponent = 0.0;
  double coefficient = 0.0;
  double residual = 0.0;
  std::string detail;
};

struct VerificationReport {
  std::string digest;
  LossKind loss = LossKind::logistic;
  Schedule schedule = Schedule::constant_one;
  long T = 0;
  Eigen::Index n = 0, d = 0, n_c = 0;
  double gamma = 0.0, risk_inf = 0.0, lambda_est = 0.0, v_bar_norm = 0.0;
  Tolerances tol;
  std::vector<CheckResult> checks;
  std::vector<TrendFit> trends;

  /// Logical AND of `holds` over applicable checks.
  bool all_hold() const {
    return std::all_of(checks.begin(), checks.end(), [](const auto& c) { return !c.applicable || c.holds; });
  }
  std::vector<std::string> failed() const {
    std::vector<std::string> out;
    for (const auto& c : checks)
      if (c.applicable && !c.holds) out.push_back(c.name);
    return out;
  }
};

namespace detail {

// Keeps the entry closest to violating its own tolerance.
class Slack {
 public:
  explicit Slack(CheckResult& r) : r_(r) {}

  void add(double bound, double quantity, long where, double scale = std::numeric_limits<double>::quiet_NaN()) {
    double s = bound - quantity;
    if (std::isnan(s)) s = -std::numeric_limits<double>::infinity();
    const double tol = numeric_tol(std::isnan(scale) ? quantity : scale);
    if (!seen_ || s + tol < r_.worst_slack + r_.tolerance) {
      r_.worst_slack = s;
      r_.tolerance = tol;
      r_.location = where;
      seen_ = true;
    }
  }
  void finish() {
    r_.holds = !seen_ || r_.worst_slack >= -r_.tolerance;
  }

 private:
  CheckResult& r_;
  bool seen_ = false;
};

inline CheckResult not_applicable(std::string name, std::string why) {
  CheckResult r;
  r.name = std::move(name);
  r.applicable = false;
  r.detail = std::move(why);
  return r;
}

inline void require_tracked(const GDTrace& tr, const char* who) {
  if (!tr.tracked) fail(ErrorKind::usage, std::string(who) + ": trace was recorded without structure tracking");
}

inline double sq(double x) { return x * x; }

// Allowance for checks evaluated at the inexact comparator w_bar.
inline double wbar_allowance(const GDTrace& tr) { return std::sqrt(tr.ball_tol); }

// Lower estimate of sum_{j<t} eta_j for a schedule, used only for diagnostics.
inline double sum_eta_estimate(Schedule s, double t) {
  return s == Schedule::constant_one ? t : 2.0 * (std::sqrt(t + 1.0) - 1.0);
}

}  // namespace detail

/// Excess-risk bound exp(|v_bar|)/t + (|v_bar|^2 + ln(t)^2/gamma^2) / (2 sum_eta);
/// the gamma term is dropped when A_c is empty.
inline double excess_risk_bound(const Structure& s, double t, double sum_eta) {
  const double v = s.sc.v_bar.norm();
  double num = v * v;
  if (s.has_margin) num += detail::sq(std::log(t)) / detail::sq(s.gamma());
  return std::exp(v) / t + num / (2.0 * sum_eta);
}

inline CheckResult check_risk_bound(const GDTrace& tr, const Structure& s) {
  CheckResult r;
  r.name = "risk_bound";
  detail::Slack sl(r);
  for (const auto& cp : tr.checkpoints) {
    if (cp.t < 1) continue;
    sl.add(excess_risk_bound(s, static_cast<double>(cp.t), cp.sum_eta), cp.risk - s.risk_inf(), cp.t);
  }
  sl.finish();
  return r;
}

/// Per-step descent (streamed during the run), plus its checkpoint-level
/// consequences: risk non-increasing and the telescoped log-risk bound.
inline CheckResult check_smoothness(const GDTrace& tr) {
  CheckResult r;
  r.name = "smoothness";
  detail::Slack sl(r);
  const auto& st = tr.stats;
  if (st.smooth_step >= 0) sl.add(st.smooth_slack, 0.0, st.smooth_step, st.smooth_scale);
  sl.add(1.0, st.max_eta_hat, -1);
  const double r0 = loss::value(tr.loss, 0.0);
  double prev = r0;
  for (const auto& cp : tr.checkpoints) {
    sl.add(prev, cp.risk, cp.t);
    sl.add(std::log(r0) - cp.sum_descent, std::log(cp.risk), cp.t);
    prev = cp.risk;
  }
  sl.finish();
  if (!r.holds) r.detail = "descent inequality violated";
  return r;
}

/// |w_t| <= sum etahat_j gamma_j and |Pi_perp w_t| <= perceptron sum.
inline CheckResult check_trace_invariants(const GDTrace& tr) {
  CheckResult r;
  r.name = "trace_invariants";
  detail::Slack sl(r);
  const auto& st = tr.stats;
  if (st.norm_step >= 0) sl.add(st.norm_slack, 0.0, st.norm_step);
  if (tr.tracked && st.perp_step >= 0) sl.add(st.perp_slack, 0.0, st.perp_step);
  for (const auto& cp : tr.checkpoints) {
    sl.add(cp.sum_etahat_gamma, cp.norm_w, cp.t);
    if (tr.tracked) sl.add(cp.perceptron_sum, cp.proj_perp_norm, cp.t);
  }
  sl.finish();
  return r;
}

/// Upper and lower growth bounds on the iterate norm. The upper bound is
/// checked on |Pi_perp w_t| and, widened by R, on |w_t|; the lower bound on
/// |Pi_perp w_t| (which never exceeds |w_t|). R is the running sup of |Pi_S w_j|.
inline CheckResult check_norm_bounds(const GDTrace& tr, const Structure& s) {
  if (!s.has_margin) return detail::not_applicable("norm_bounds", "A_c empty");
  detail::require_tracked(tr, "check_norm_bounds");
  CheckResult r;
  r.name = "norm_bounds";
  detail::Slack sl(r);
  const double g2 = detail::sq(s.gamma());
  const double v = s.sc.v_bar.norm();
  const double ratio = static_cast<double>(s.n()) / static_cast<double>(s.n_c());
  for (const auto& cp : tr.checkpoints) {
    if (cp.t < 1) continue;
    const double lt = std::log(static_cast<double>(cp.t));
    const double R = cp.sup_proj_S;
    const double perp = (cp.w - project(s.dec.basis_S, cp.w)).norm();
    const double upper = std::max({4.0 * lt / g2, 4.0 * R / g2, 2.0});
    sl.add(upper, perp, cp.t);
    sl.add(upper + R, cp.norm_w, cp.t);
    const double a = lt - std::log(2.0) - v;
    const double b = std::log(cp.sum_eta) - std::log(v * v + lt * lt / g2);
    const double lower = std::min(a, b) - R + std::log(std::log(2.0)) - std::log(ratio);
    if (std::isfinite(lower)) sl.add(perp, lower, cp.t);
  }
  sl.finish();
  return r;
}

inline CheckResult check_param_S(const GDTrace& tr, const Structure& s) {
  if (!s.s_nontrivial()) return detail::not_applicable("param_S", "S = {0}");
  CheckResult r;
  r.name = "param_S";
  r.estimate_conditioned = true;
  r.detail = "uses sampled lambda_est = " + std::to_string(s.lambda());
  detail::Slack sl(r);
  const Eigen::VectorXd& vb = s.sc.v_bar;
  for (const auto& cp : tr.checkpoints) {
    if (cp.t < 1) continue;
    const double bound =
        2.0 / s.lambda() * std::min(1.0, excess_risk_bound(s, static_cast<double>(cp.t), cp.sum_eta));
    sl.add(bound, (project(s.dec.basis_S, cp.w) - vb).squaredNorm(), cp.t);
    if (cp.has_wbar)
      sl.add(bound + detail::wbar_allowance(tr), (project(s.dec.basis_S, cp.wbar) - vb).squaredNorm(), cp.t);
  }
  sl.finish();
  return r;
}

/// Fenchel-Young lower bound on the alignment with u_bar at checkpoints where
/// R(w_t) - R_bar <= eps/n, for w_t and for w_bar_t. Also g*(q_bar) <= ln n.
inline CheckResult check_fenchel_young(const GDTrace& tr, const Structure& s, double eps = 1.0) {
  if (!s.has_margin) return detail::not_applicable("fenchel_young", "A_c empty");
  CheckResult r;
  r.name = "fenchel_young";
  detail::Slack sl(r);
  const double n = static_cast<double>(s.n());
  const double gstar = log_sum_exp_conjugate(s.margin.q_bar, n);
  sl.add(std::log(n), gstar, 0);
  const double gam = s.gamma();
  const auto& ub = s.margin.u_bar;
  int qualifying = 0;
  auto one = [&](const Eigen::VectorXd& w, double excess, long t, double allowance) {
    const double nw = w.norm();
    if (!(nw > 0)) return;
    const double lhs = ub.dot(w) / nw;
    const double ps = project(s.dec.basis_S, w).norm();
    const double rhs = (-std::log(excess) - (std::log(2.0) + gstar + ps)) / (gam * nw);
    sl.add(lhs + allowance, rhs, t, 1.0);
  };
  for (const auto& cp : tr.checkpoints) {
    const double excess = cp.risk - s.risk_inf();
    if (!(excess > 0) || excess > eps / n) continue;
    ++qualifying;
    one(cp.w, excess, cp.t, 0.0);
    if (cp.has_wbar && cp.wbar_risk - s.risk_inf() <= excess) one(cp.wbar, excess, cp.t, detail::wbar_allowance(tr));
  }
  sl.finish();
  if (qualifying == 0) {
    // Estimate from the excess-risk bound when the qualification would kick in.
    double t_est = 1.0;
    while (t_est < 1e15 && excess_risk_bound(s, t_est, detail::sum_eta_estimate(tr.schedule, t_est)) > eps / n)
      t_est *= 2.0;
    const bool ok = r.holds;
    r = detail::not_applicable("fenchel_young", "no checkpoint with excess risk <= " + std::to_string(eps / n) +
                                                    "; bound-based estimate of first qualifying t ~ " +
                                                    std::to_string(t_est));
    if (!ok) {
      r.applicable = true;
      r.holds = false;
      r.detail += "; g*(q_bar) > ln n";
    }
    return r;
  }
  r.detail = std::to_string(qualifying) + " qualifying checkpoints, g*(q_bar) = " + std::to_string(gstar);
  return r;
}

inline CheckResult check_perp_descent(const GDTrace& tr, const Structure& s) {
  if (!s.has_margin) return detail::not_applicable("perp_descent", "A_c empty");
  detail::require_tracked(tr, "check_perp_descent");
  CheckResult r;
  r.name = "perp_descent";
  detail::Slack sl(r);
  const MarginMatrix a_c = s.A.select(s.dec.sep_rows);
  const double n = static_cast<double>(s.n());
  for (const auto& cp : tr.checkpoints) {
    if (cp.t < 1) continue;
    const Eigen::VectorXd u = s.margin.u_bar * (std::log(static_cast<double>(cp.t)) / s.gamma());
    const Eigen::VectorXd z = a_c.rows() * u;
    double rc_u = 0.0;
    for (Eigen::Index i = 0; i < z.size(); ++i) rc_u += loss::value(tr.loss, z[i]);
    rc_u /= n;
    const double bound = u.squaredNorm() + 2.0 + 2.0 * rc_u * cp.sum_eta - 2.0 * cp.sum_eta_risk_c +
                         2.0 * cp.sum_eta_cross;
    const double scale =
        u.squaredNorm() + 2.0 * rc_u * cp.sum_eta + 2.0 * cp.sum_eta_risk_c + 2.0 * std::abs(cp.sum_eta_cross);
    const Eigen::VectorXd perp = cp.w - project(s.dec.basis_S, cp.w);
    sl.add(bound, (perp - u).squaredNorm(), cp.t, scale);
  }
  sl.finish();
  return r;
}

inline CheckResult check_gen_iter(const GDTrace& tr, const Structure& s) {
  if (!s.has_margin) return detail::not_applicable("gen_iter", "A_c empty");
  if (s.dec.sc_rows.empty()) return detail::not_applicable("gen_iter", "separable data (R_bar = 0)");
  detail::require_tracked(tr, "check_gen_iter");
  const auto& st = tr.stats;
  if (st.gen_count == 0) {
    const double thr = std::min(0.3 / static_cast<double>(s.n()), s.lambda() * (1.0 - 0.9) / 2.0);
    const double last = tr.checkpoints.empty() ? 0.0 : tr.checkpoints.back().risk - s.risk_inf();
    auto r = detail::not_applicable("gen_iter", "excess risk never reached min{eps/n, lambda(1-r)/2} = " +
                                                    std::to_string(thr) + "; final excess " + std::to_string(last));
    r.estimate_conditioned = true;
    return r;
  }
  CheckResult r;
  r.name = "gen_iter";
  r.estimate_conditioned = true;
  detail::Slack sl(r);
  sl.add(st.gen_slack, 0.0, st.gen_step, st.gen_scale);
  sl.finish();
  r.detail = std::to_string(st.gen_count) + " qualifying steps from j = " + std::to_string(st.gen_first);
  return r;
}

/// Ratios l'/l >= 1 - eps and l_exp/l <= 2 wherever l(z) <= eps, for both
/// losses, on `samples` random z per eps level.
inline CheckResult check_log_approx(int samples = 10000, std::uint64_t seed = 7) {
  CheckResult r;
  r.name = "log_approx";
  detail::Slack sl(r);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  long k = 0;
  for (double eps : {1.0, 0.5, 0.1, 0.01}) {
    for (LossKind lk : {LossKind::logistic, LossKind::exponential}) {
      const double zmax = lk == LossKind::logistic ? std::log(std::expm1(eps)) : std::log(eps);
      for (int s = 0; s < samples; ++s, ++k) {
        const double z = s == 0 ? zmax : zmax - 40.0 * unif(rng);
        const double l = loss::value(lk, z);
        if (l > eps) continue;
        sl.add(loss::deriv(lk, z) / l, 1.0 - eps, k, 1.0);
        sl.add(2.0, std::exp(z) / l, k, 1.0);
      }
    }
  }
  sl.finish();
  return r;
}

// ---------------------------------------------------------------------------
// Trends

namespace detail {

// Least-squares slope and intercept of y on x.
inline std::pair<double, double> linear_fit(const std::vector<double>& x, const std::vector<double>& y) {
  const double m = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  const double den = m * sxx - sx * sx;
  const double slope = den != 0 ? (m * sxy - sx * sy) / den : 0.0;
  return {slope, (sy - slope * sx) / m};
}

inline std::vector<const Checkpoint*> last_decades(const GDTrace& tr, double decades, long t_min = 1) {
  std::vector<const Checkpoint*> out;
  const double lo = static_cast<double>(tr.T) / std::pow(10.0, decades);
  for (const auto& cp : tr.checkpoints)
    if (cp.t >= t_min && static_cast<double>(cp.t) >= lo) out.push_back(&cp);
  return out;
}

}  // namespace detail

/// excess(t) ~ c ln(t)^2 / sqrt(t) fitted in log space over the last two
/// decades; residual is the largest relative deviation from the fit there.
inline TrendFit trend_excess_risk(const GDTrace& tr, const Structure& s, double max_residual = 0.2) {
  TrendFit f;
  f.name = "excess_risk_rate";
  std::vector<double> lx, ly, lr;
  for (const auto* cp : detail::last_decades(tr, 2.0, 3)) {
    const double ex = cp->risk - s.risk_inf();
    if (!(ex > 0)) continue;
    const double t = static_cast<double>(cp->t);
    const double pred = detail::sq(std::log(t)) / std::sqrt(t);
    lx.push_back(std::log(t));
    ly.push_back(std::log(ex / detail::sq(std::log(t))));
    lr.push_back(std::log(ex / pred));
  }
  if (lx.size() < 2) {
    f.applicable = false;
    f.detail = "fewer than two checkpoints with positive excess risk in the fit window";
    return f;
  }
  f.exponent = detail::linear_fit(lx, ly).first;
  double mean = 0;
  for (double v : lr) mean += v;
  mean /= static_cast<double>(lr.size());
  f.coefficient = std::exp(mean);
  for (double v : lr) f.residual = std::max(f.residual, std::abs(std::exp(v - mean) - 1.0));
  f.holds = f.residual <= max_residual;
  return f;
}

/// |Pi_perp w_t| / ln t over the last two decades stays within a factor band.
inline TrendFit trend_perp_growth(const GDTrace& tr, const Structure& s, double max_band = 4.0) {
  TrendFit f;
  f.name = "perp_growth";
  if (!s.has_margin) {
    f.applicable = false;
    f.detail = "A_c empty";
    return f;
  }
  std::vector<double> lx, ly;
  double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
  for (const auto* cp : detail::last_decades(tr, 2.0, 10)) {
    const double lt = std::log(static_cast<double>(cp->t));
    const double ratio = cp->proj_perp_norm / lt;
    lo = std::min(lo, ratio);
    hi = std::max(hi, ratio);
    lx.push_back(std::log(lt));
    ly.push_back(std::log(std::max(cp->proj_perp_norm, 1e-300)));
  }
  if (lx.size() < 2) {
    f.applicable = false;
    f.detail = "needs checkpoints with t >= 10 in the last two decades";
    return f;
  }
  const auto [slope, icpt] = detail::linear_fit(lx, ly);
  f.exponent = slope;
  f.coefficient = std::sqrt(lo * hi);
  f.residual = lo > 0 ? hi / lo : std::numeric_limits<double>::infinity();
  f.holds = f.residual <= max_band;
  return f;
}

/// First checkpoint time past the warm-start threshold:
/// separable t/ln(t)^3 >= n/gamma^4, general sqrt(t)/ln(t)^3 >= n(1+R)/gamma^2.
/// Returns -1 when not reached within the trace.
inline long warm_start_threshold(const GDTrace& tr, const Structure& s) {
  if (!s.has_margin) return -1;
  const double n = static_cast<double>(s.n());
  const double g = s.gamma();
  const bool separable = s.dec.sc_rows.empty();
  double R = 0.0;
  for (const auto& cp : tr.checkpoints) R = std::max(R, cp.sup_proj_S);
  for (const auto& cp : tr.checkpoints) {
    const double t = static_cast<double>(cp.t);
    const double lt = std::log(t);
    if (separable) {
      if (t >= std::exp(3.0) && t / (lt * lt * lt) >= n / std::pow(g, 4)) return cp.t;
    } else {
      if (t >= std::exp(6.0) && std::sqrt(t) / (lt * lt * lt) >= n * (1.0 + R) / (g * g)) return cp.t;
    }
  }
  return -1;
}

/// |dir_t - u_bar|^2 against c (ln n + lnln t)/(gamma^2 ln t). Holds when the
/// error is non-increasing past the warm-start threshold (for w_t and w_bar_t)
/// and the final error is below max_factor times the rate.
inline TrendFit trend_direction(const GDTrace& tr, const Structure& s, double max_factor = 10.0) {
  TrendFit f;
  f.name = "direction_rate";
  if (!s.has_margin) {
    f.applicable = false;
    f.detail = "A_c empty";
    return f;
  }
  const double n = static_cast<double>(s.n());
  const double g2 = detail::sq(s.gamma());
  const auto& ub = s.margin.u_bar;
  auto rate = [&](double t) { return (std::log(n) + std::log(std::log(t))) / (g2 * std::log(t)); };
  auto err2 = [&](const Eigen::VectorXd& w) {
    const double nw = w.norm();
    return nw > 0 ? (w / nw - ub).squaredNorm() : (ub).squaredNorm();
  };
  const long t0 = warm_start_threshold(tr, s);
  bool monotone = true;
  double prev = std::numeric_limits<double>::infinity(), prev_bar = prev;
  std::vector<double> lx, ly, lr;
  for (const auto& cp : tr.checkpoints) {
    if (cp.t < 3) continue;
    const double e = err2(cp.w);
    if (t0 > 0 && cp.t >= t0) {
      if (e > prev + 1e-12) monotone = false;
      prev = e;
      if (cp.has_wbar) {
        const double eb = err2(cp.wbar);
        if (eb > prev_bar + 1e-12) monotone = false;
        prev_bar = eb;
      }
    }
    if (e > 0 && static_cast<double>(cp.t) >= static_cast<double>(tr.T) / 100.0) {
      lx.push_back(std::log(std::log(static_cast<double>(cp.t))));
      ly.push_back(std::log(e));
      lr.push_back(std::log(e / rate(static_cast<double>(cp.t))));
    }
  }
  if (tr.checkpoints.empty() || tr.T < 3) {
    f.applicable = false;
    f.detail = "needs T >= 3";
    return f;
  }
  const auto& last = tr.checkpoints.back();
  const double bound = max_factor * rate(static_cast<double>(last.t));
  bool below = err2(last.w) <= bound;
  if (last.has_wbar) below = below && err2(last.wbar) <= bound;
  if (lx.size() >= 2) f.exponent = detail::linear_fit(lx, ly).first;
  if (!lr.empty()) {
    double mean = 0;
    for (double v : lr) mean += v;
    mean /= static_cast<double>(lr.size());
    f.coefficient = std::exp(mean);
    double rms = 0;
    for (double v : lr) rms += detail::sq(v - mean);
    f.residual = std::sqrt(rms / static_cast<double>(lr.size()));
  }
  f.holds = monotone && below;
  f.detail = (t0 > 0 ? "warm start at t = " + std::to_string(t0) : std::string("warm-start threshold not reached")) +
             (monotone ? "" : "; error increased past warm start") +
             "; final err^2 " + std::to_string(err2(last.w)) + " vs bound " + std::to_string(bound);
  return f;
}

/// sup |Pi_S w_t| and its log-t drift over the last two decades.
inline TrendFit trend_proj_S(const GDTrace& tr, const Structure& s) {
  TrendFit f;
  f.name = "proj_S_boundedness";
  if (!s.s_nontrivial()) {
    f.applicable = false;
    f.detail = "S = {0}";
    return f;
  }
  std::vector<double> lx, ly;
  double sup = 0.0;
  for (const auto& cp : tr.checkpoints) sup = std::max(sup, cp.proj_S.norm());
  double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
  for (const auto* cp : detail::last_decades(tr, 2.0)) {
    const double v = cp->proj_S.norm();
    lx.push_back(std::log(static_cast<double>(cp->t)));
    ly.push_back(v);
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  if (lx.size() >= 2) f.exponent = detail::linear_fit(lx, ly).first;
  f.coefficient = sup;
  f.residual = hi - lo;
  const double cap = s.sc.v_bar.norm() + std::sqrt(2.0 / s.lambda());
  f.holds = sup <= cap * (1.0 + 1e-9) + 1e-9;
  f.detail = "sup |Pi_S w_t| " + std::to_string(sup) + ", cap |v_bar| + sqrt(2/lambda) " + std::to_string(cap);
  return f;
}

// ---------------------------------------------------------------------------

inline VerificationReport build_report(const Structure& s, const GDTrace& tr, std::vector<CheckResult> checks,
                                       std::vector<TrendFit> trends) {
  if (checks.empty()) fail(ErrorKind::usage, "build_report: no checks");
  VerificationReport rep;
  rep.digest = s.digest;
  rep.loss = tr.loss;
  rep.schedule = tr.schedule;
  rep.T = tr.T;
  rep.n = s.n();
  rep.d = s.A.d();
  rep.n_c = s.n_c();
  rep.gamma = s.gamma();
  rep.risk_inf = s.risk_inf();
  rep.lambda_est = s.lambda();
  rep.v_bar_norm = s.sc.v_bar.norm();
  rep.tol = s.tol;
  std::stable_sort(checks.begin(), checks.end(), [](const auto& a, const auto& b) { return a.name < b.name; });
  for (std::size_t i = 1; i < checks.size(); ++i)
    if (checks[i].name == checks[i - 1].name) fail(ErrorKind::usage, "build_report: duplicate check " + checks[i].name);
  std::stable_sort(trends.begin(), trends.end(), [](const auto& a, const auto& b) { return a.name < b.name; });
  rep.checks = std::move(checks);
  rep.trends = std::move(trends);
  return rep;
}

/// Every registered check and trend on one trace.
inline VerificationReport verify_all(const GDTrace& tr, const Structure& s) {
  if (tr.loss != s.loss) fail(ErrorKind::usage, "verify: trace and structure use different losses");
  std::vector<CheckResult> checks{check_risk_bound(tr, s),     check_smoothness(tr),       check_trace_invariants(tr),
                                  check_norm_bounds(tr, s),    check_param_S(tr, s),       check_fenchel_young(tr, s),
                                  check_perp_descent(tr, s),   check_gen_iter(tr, s),      check_log_approx()};
  std::vector<TrendFit> trends{trend_excess_risk(tr, s), trend_perp_growth(tr, s), trend_direction(tr, s),
                               trend_proj_S(tr, s)};
  CheckResult done;
  done.name = "completed";
  done.holds = !tr.aborted;
  done.worst_slack = tr.aborted ? -std::numeric_limits<double>::infinity() : 0.0;
  done.detail = tr.aborted ? tr.abort_reason : std::to_string(tr.stats.steps) + " steps";
  checks.push_back(done);
  return build_report(s, tr, std::move(checks), std::move(trends));
}

}  // namespace optray
