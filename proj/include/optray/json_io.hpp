#pragma once

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <ostream>
#include <string>

#include <Eigen/Dense>
#include <json.hpp>

#include "optray/analysis.hpp"
#include "optray/decompose.hpp"
#include "optray/error.hpp"
#include "optray/gd.hpp"
#include "optray/margin.hpp"
#include "optray/scvx.hpp"
#include "optray/verify.hpp"

namespace optray::io {

using json = nlohmann::ordered_json;

// JSON has no infinities; they are written as the strings "inf" / "-inf".
inline json num(double x) {
  if (std::isnan(x)) return nullptr;
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  return x;
}

inline double get_num(const json& j) {
  if (j.is_null()) return std::numeric_limits<double>::quiet_NaN();
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    fail(ErrorKind::parse, "expected a number, got \"" + s + "\"");
  }
  return j.get<double>();
}

inline json vec(const Eigen::VectorXd& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(num(v[i]));
  return a;
}

inline Eigen::VectorXd get_vec(const json& j) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v[static_cast<Eigen::Index>(i)] = get_num(j[i]);
  return v;
}

// Column-major list of columns.
inline json mat_columns(const Eigen::MatrixXd& m) {
  json a = json::array();
  for (Eigen::Index c = 0; c < m.cols(); ++c) a.push_back(vec(m.col(c)));
  return a;
}

inline json to_json(const Decomposition& d) {
  return json{{"n", d.n},
              {"d", d.d},
              {"sep_rows", d.sep_rows},
              {"sc_rows", d.sc_rows},
              {"rank_S", d.basis_S.rank()},
              {"basis_S", mat_columns(d.basis_S.columns)},
              {"basis_perp", mat_columns(d.basis_perp.columns)},
              {"lp_solves", d.lp_solves}};
}

inline json to_json(const MarginSolution& m) {
  return json{{"gamma", num(m.gamma)},
              {"u_bar", vec(m.u_bar)},
              {"q_bar", vec(m.q_bar)},
              {"gap", num(m.gap)},
              {"iterations", m.iterations}};
}

inline json to_json(const ScOptimum& s) {
  return json{{"v_bar", vec(s.v_bar)},
              {"v_bar_norm", num(s.v_bar.norm())},
              {"risk_inf", num(s.risk_inf)},
              {"lambda_est", num(s.lambda_est)},
              {"grad_norm", num(s.grad_norm)},
              {"iterations", s.iterations}};
}

inline json to_json(const Checkpoint& c) {
  json j{{"t", c.t},
         {"w", vec(c.w)},
         {"risk", num(c.risk)},
         {"grad_norm", num(c.grad_norm)},
         {"gamma_t", num(c.gamma_t)},
         {"eta", num(c.eta)},
         {"eta_hat", num(c.eta_hat)},
         {"norm_w", num(c.norm_w)},
         {"proj_S", vec(c.proj_S)},
         {"proj_perp_norm", num(c.proj_perp_norm)},
         {"dir", vec(c.dir)},
         {"perceptron_sum", num(c.perceptron_sum)},
         {"sum_eta", num(c.sum_eta)},
         {"sum_etahat_gamma", num(c.sum_etahat_gamma)},
         {"sum_descent", num(c.sum_descent)},
         {"risk_c", num(c.risk_c)},
         {"sup_proj_S", num(c.sup_proj_S)},
         {"sum_eta_risk_c", num(c.sum_eta_risk_c)},
         {"sum_eta_cross", num(c.sum_eta_cross)},
         {"sum_descent_gen", num(c.sum_descent_gen)}};
  if (c.has_wbar) {
    j["wbar"] = vec(c.wbar);
    j["wbar_risk"] = num(c.wbar_risk);
    j["wbar_proj_S"] = vec(c.wbar_proj_S);
    j["wbar_grad_mapping"] = num(c.wbar_grad_mapping);
    j["wbar_converged"] = c.wbar_converged;
  }
  return j;
}

inline Checkpoint checkpoint_from_json(const json& j) {
  Checkpoint c;
  c.t = j.at("t").get<long>();
  c.w = get_vec(j.at("w"));
  c.risk = get_num(j.at("risk"));
  c.grad_norm = get_num(j.at("grad_norm"));
  c.gamma_t = get_num(j.at("gamma_t"));
  c.eta = get_num(j.at("eta"));
  c.eta_hat = get_num(j.at("eta_hat"));
  c.norm_w = get_num(j.at("norm_w"));
  c.proj_S = get_vec(j.at("proj_S"));
  c.proj_perp_norm = get_num(j.at("proj_perp_norm"));
  c.dir = get_vec(j.at("dir"));
  c.perceptron_sum = get_num(j.at("perceptron_sum"));
  c.sum_eta = get_num(j.at("sum_eta"));
  c.sum_etahat_gamma = get_num(j.at("sum_etahat_gamma"));
  c.sum_descent = get_num(j.at("sum_descent"));
  c.risk_c = get_num(j.at("risk_c"));
  c.sup_proj_S = get_num(j.at("sup_proj_S"));
  c.sum_eta_risk_c = get_num(j.at("sum_eta_risk_c"));
  c.sum_eta_cross = get_num(j.at("sum_eta_cross"));
  c.sum_descent_gen = get_num(j.at("sum_descent_gen"));
  if (j.contains("wbar")) {
    c.has_wbar = true;
    c.wbar = get_vec(j.at("wbar"));
    c.wbar_risk = get_num(j.at("wbar_risk"));
    c.wbar_proj_S = get_vec(j.at("wbar_proj_S"));
    c.wbar_grad_mapping = get_num(j.at("wbar_grad_mapping"));
    c.wbar_converged = j.at("wbar_converged").get<bool>();
  }
  return c;
}

inline json to_json(const StepStats& s) {
  return json{{"steps", s.steps},
              {"max_eta_hat", num(s.max_eta_hat)},
              {"monotone", s.monotone},
              {"smooth_slack", num(s.smooth_slack)},
              {"smooth_scale", num(s.smooth_scale)},
              {"smooth_step", s.smooth_step},
              {"norm_slack", num(s.norm_slack)},
              {"norm_step", s.norm_step},
              {"perp_slack", num(s.perp_slack)},
              {"perp_step", s.perp_step},
              {"gen_slack", num(s.gen_slack)},
              {"gen_scale", num(s.gen_scale)},
              {"gen_step", s.gen_step},
              {"gen_first", s.gen_first},
              {"gen_count", s.gen_count}};
}

inline StepStats stats_from_json(const json& j) {
  StepStats s;
  s.steps = j.at("steps").get<long>();
  s.max_eta_hat = get_num(j.at("max_eta_hat"));
  s.monotone = j.at("monotone").get<bool>();
  s.smooth_slack = get_num(j.at("smooth_slack"));
  s.smooth_scale = get_num(j.at("smooth_scale"));
  s.smooth_step = j.at("smooth_step").get<long>();
  s.norm_slack = get_num(j.at("norm_slack"));
  s.norm_step = j.at("norm_step").get<long>();
  s.perp_slack = get_num(j.at("perp_slack"));
  s.perp_step = j.at("perp_step").get<long>();
  s.gen_slack = get_num(j.at("gen_slack"));
  s.gen_scale = get_num(j.at("gen_scale"));
  s.gen_step = j.at("gen_step").get<long>();
  s.gen_first = j.at("gen_first").get<long>();
  s.gen_count = j.at("gen_count").get<long>();
  return s;
}

inline json to_json(const GDTrace& tr) {
  json cps = json::array();
  for (const auto& c : tr.checkpoints) cps.push_back(to_json(c));
  return json{{"loss", to_string(tr.loss)},
              {"schedule", to_string(tr.schedule)},
              {"T", tr.T},
              {"per_decade", tr.per_decade},
              {"ball_tol", num(tr.ball_tol)},
              {"tracked", tr.tracked},
              {"aborted", tr.aborted},
              {"abort_reason", tr.abort_reason},
              {"stats", to_json(tr.stats)},
              {"checkpoints", std::move(cps)}};
}

inline GDTrace trace_from_json(const json& j) {
  try {
    GDTrace tr;
    tr.loss = parse_loss(j.at("loss").get<std::string>());
    tr.schedule = parse_schedule(j.at("schedule").get<std::string>());
    tr.T = j.at("T").get<long>();
    tr.per_decade = j.at("per_decade").get<int>();
    tr.ball_tol = get_num(j.at("ball_tol"));
    tr.tracked = j.at("tracked").get<bool>();
    tr.aborted = j.at("aborted").get<bool>();
    tr.abort_reason = j.at("abort_reason").get<std::string>();
    tr.stats = stats_from_json(j.at("stats"));
    for (const auto& c : j.at("checkpoints")) tr.checkpoints.push_back(checkpoint_from_json(c));
    return tr;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::parse, std::string("malformed trace: ") + e.what());
  }
}

inline json to_json(const CheckResult& c) {
  return json{{"name", c.name},
              {"status", c.status()},
              {"holds", c.holds},
              {"applicable", c.applicable},
              {"worst_slack", num(c.worst_slack)},
              {"tolerance", num(c.tolerance)},
              {"location", c.location},
              {"estimate_conditioned", c.estimate_conditioned},
              {"detail", c.detail}};
}

inline json to_json(const TrendFit& f) {
  return json{{"name", f.name},
              {"applicable", f.applicable},
              {"holds", f.holds},
              {"exponent", num(f.exponent)},
              {"coefficient", num(f.coefficient)},
              {"residual", num(f.residual)},
              {"detail", f.detail}};
}

inline json to_json(const Tolerances& t) {
  return json{{"lp_slack", num(t.lp)},
              {"rank", num(t.rank)},
              {"margin_gap", num(t.margin)},
              {"scvx_grad", num(t.scvx)},
              {"ball_grad_mapping", num(t.ball)},
              {"numeric_abs", 1e-9},
              {"numeric_rel", 1e-12}};
}

inline json to_json(const VerificationReport& r) {
  json checks = json::array(), trends = json::array();
  for (const auto& c : r.checks) checks.push_back(to_json(c));
  for (const auto& f : r.trends) trends.push_back(to_json(f));
  return json{{"meta",
               {{"digest", r.digest},
                {"loss", to_string(r.loss)},
                {"schedule", to_string(r.schedule)},
                {"T", r.T},
                {"n", r.n},
                {"d", r.d},
                {"n_c", r.n_c},
                {"gamma", num(r.gamma)},
                {"risk_inf", num(r.risk_inf)},
                {"v_bar_norm", num(r.v_bar_norm)},
                {"lambda_est", num(r.lambda_est)},
                {"tolerances", to_json(r.tol)},
                {"all_hold", r.all_hold()}}},
              {"checks", std::move(checks)},
              {"trends", std::move(trends)}};
}

inline void save_json(const json& j, const std::string& path) {
  std::ofstream out(path);
  if (!out) fail(ErrorKind::usage, "cannot write '" + path + "'");
  out << j.dump(2) << '\n';
}

inline json load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::parse, "cannot open '" + path + "'");
  try {
    return json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::parse, "'" + path + "': " + e.what());
  }
}

// ---------------------------------------------------------------------------
// CSV

inline std::string fmt17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

/// One row per checkpoint, fixed column order.
inline void write_trace_csv(const GDTrace& tr, std::ostream& out) {
  if (tr.checkpoints.empty()) return;
  const Eigen::Index d = tr.checkpoints.front().w.size();
  out << "t,risk,grad_norm,gamma_t,eta_hat,norm_w,proj_perp_norm,perceptron_sum,sum_eta,sum_etahat_gamma";
  for (Eigen::Index k = 0; k < d; ++k) out << ",w" << (k + 1);
  for (Eigen::Index k = 0; k < d; ++k) out << ",proj_S" << (k + 1);
  for (Eigen::Index k = 0; k < d; ++k) out << ",dir" << (k + 1);
  out << ",wbar_risk";
  for (Eigen::Index k = 0; k < d; ++k) out << ",wbar" << (k + 1);
  out << '\n';
  for (const auto& c : tr.checkpoints) {
    out << c.t;
    for (double v : {c.risk, c.grad_norm, c.gamma_t, c.eta_hat, c.norm_w, c.proj_perp_norm, c.perceptron_sum,
                     c.sum_eta, c.sum_etahat_gamma})
      out << ',' << fmt17(v);
    for (const Eigen::VectorXd* v : {&c.w, &c.proj_S, &c.dir})
      for (Eigen::Index k = 0; k < d; ++k) out << ',' << fmt17((*v)[k]);
    out << ',' << (c.has_wbar ? fmt17(c.wbar_risk) : "");
    for (Eigen::Index k = 0; k < d; ++k) out << ',' << (c.has_wbar ? fmt17(c.wbar[k]) : "");
    out << '\n';
  }
}

/// Plot-ready per-checkpoint diagnostics against the structural objects.
inline void write_diagnostics_csv(const GDTrace& tr, const Structure& s, std::ostream& out) {
  out << "t,excess_risk,risk_bound,proj_perp_norm,proj_perp_over_lnt,proj_S_err,dir_err2,wbar_dir_err2,"
         "direction_rate\n";
  const double n = static_cast<double>(s.n());
  for (const auto& c : tr.checkpoints) {
    const double t = static_cast<double>(c.t);
    const double lt = std::log(t);
    const Eigen::VectorXd ps = project(s.dec.basis_S, c.w);
    const double perp = (c.w - ps).norm();
    auto dir_err = [&](const Eigen::VectorXd& w) {
      if (!s.has_margin || !(w.norm() > 0)) return std::numeric_limits<double>::quiet_NaN();
      return (w / w.norm() - s.margin.u_bar).squaredNorm();
    };
    const double rate = s.has_margin && t >= 3 ? (std::log(n) + std::log(lt)) / (s.gamma() * s.gamma() * lt)
                                               : std::numeric_limits<double>::quiet_NaN();
    out << c.t << ',' << fmt17(c.risk - s.risk_inf()) << ',' << fmt17(excess_risk_bound(s, t, c.sum_eta)) << ','
        << fmt17(perp) << ',' << fmt17(t > 1 ? perp / lt : std::numeric_limits<double>::quiet_NaN()) << ','
        << fmt17((ps - s.sc.v_bar).norm()) << ',' << fmt17(dir_err(c.w)) << ','
        << fmt17(c.has_wbar ? dir_err(c.wbar) : std::numeric_limits<double>::quiet_NaN()) << ',' << fmt17(rate)
        << '\n';
  }
}

}  // namespace optray::io
