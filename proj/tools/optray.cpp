// optray: command-line front end.
//
//   optray synth     --synth KIND --per-class N --seed S --out FILE.csv
//   optray decompose (--input FILE | --synth KIND) [--loss L] --out DIR
//   optray run       (--input FILE | --synth KIND) [--loss L --schedule S --steps T] --out DIR
//   optray verify    (--input FILE | --synth KIND) [--trace trace.json] --out DIR
//   optray report    (--input FILE | --synth KIND) [--trace trace.json] --out DIR
//
// Exit codes: 0 ok, 1 check failed, 2 input error, 3 numeric abort.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "optray/optray.hpp"

namespace fs = std::filesystem;
using namespace optray;

namespace {

constexpr int kOk = 0;
constexpr int kCheckFailed = 1;
constexpr int kInputError = 2;
constexpr int kNumericAbort = 3;

struct RunConfig {
  std::string input;
  std::string synth_kind;
  int per_class = 20;
  std::uint64_t seed = 1;
  std::string loss = "logistic";
  std::string schedule = "inv_sqrt";
  long steps = 10000;
  int per_decade = 20;
  Tolerances tol;
  std::string out = ".";
  std::string trace;
};

void check_config(const RunConfig& c) {
  if (c.input.empty() == c.synth_kind.empty())
    fail(ErrorKind::usage, "exactly one of --input and --synth is required");
  if (c.steps < 1) fail(ErrorKind::usage, "--steps must be >= 1");
  if (c.per_decade < 1) fail(ErrorKind::usage, "--per-decade must be >= 1");
  for (double t : {c.tol.lp, c.tol.margin, c.tol.scvx, c.tol.ball})
    if (!(t > 0)) fail(ErrorKind::usage, "tolerances must be positive");
}

MarginMatrix load_matrix(const RunConfig& c) {
  const Dataset ds = c.input.empty() ? synth(parse_synth_kind(c.synth_kind), c.per_class, c.seed)
                                     : normalize(load_csv(c.input));
  return to_margin_matrix(ds);
}

fs::path out_dir(const RunConfig& c) {
  fs::path p(c.out);
  std::error_code ec;
  fs::create_directories(p, ec);
  if (ec) fail(ErrorKind::usage, "cannot create output directory '" + c.out + "'");
  return p;
}

void print_structure(const Structure& s) {
  std::cout << std::setprecision(17) << "n=" << s.n() << " d=" << s.A.d() << " sep=" << s.n_c()
            << " sc=" << s.dec.sc_rows.size() << " rank_S=" << s.dec.basis_S.rank();
  if (s.has_margin) std::cout << " gamma=" << s.gamma();
  std::cout << " |v_bar|=" << s.sc.v_bar.norm() << " R_bar=" << s.risk_inf() << " lambda_est=" << s.lambda()
            << '\n';
}

int cmd_synth(const RunConfig& c) {
  if (c.synth_kind.empty()) fail(ErrorKind::usage, "--synth is required");
  if (c.out == ".") fail(ErrorKind::usage, "--out FILE is required");
  save_csv(synth(parse_synth_kind(c.synth_kind), c.per_class, c.seed), c.out);
  return kOk;
}

int cmd_decompose(const RunConfig& c) {
  check_config(c);
  const auto A = load_matrix(c);
  const auto s = analyze(A, parse_loss(c.loss), c.tol);
  const auto dir = out_dir(c);
  auto dj = io::to_json(s.dec);
  const auto val = validate(s.dec, A, DecomposeOptions{c.tol.lp, c.tol.rank});
  io::json entries = io::json::array();
  for (const auto& e : val.entries)
    entries.push_back({{"name", e.name}, {"passed", e.passed}, {"skipped", e.skipped},
                       {"residual", io::num(e.residual)}, {"detail", e.detail}});
  dj["validation"] = entries;
  io::save_json(dj, (dir / "decomposition.json").string());
  if (s.has_margin) io::save_json(io::to_json(s.margin), (dir / "margin.json").string());
  if (s.s_nontrivial() || !s.dec.sc_rows.empty()) io::save_json(io::to_json(s.sc), (dir / "scvx.json").string());
  print_structure(s);
  if (!val.passed()) {
    for (const auto& e : val.entries)
      if (!e.passed && !e.skipped) std::cerr << "decomposition validation failed: " << e.name << " (" << e.detail << ")\n";
    return kNumericAbort;
  }
  return kOk;
}

GDTrace obtain_trace(const RunConfig& c, const Structure& s) {
  if (!c.trace.empty()) {
    auto tr = io::trace_from_json(io::load_json(c.trace));
    if (tr.loss != s.loss) fail(ErrorKind::usage, "trace loss differs from --loss");
    return tr;
  }
  const auto tk = tracking_for(s);
  RunOptions ro;
  ro.per_decade = c.per_decade;
  ro.ball_tol = c.tol.ball;
  return run(s.A, s.loss, parse_schedule(c.schedule), c.steps, ro, &tk);
}

int cmd_run(const RunConfig& c) {
  check_config(c);
  const auto s = analyze(load_matrix(c), parse_loss(c.loss), c.tol);
  RunConfig fresh = c;
  fresh.trace.clear();
  const auto tr = obtain_trace(fresh, s);
  const auto dir = out_dir(c);
  {
    std::ofstream csv(dir / "trace.csv");
    if (!csv) fail(ErrorKind::usage, "cannot write trace.csv");
    io::write_trace_csv(tr, csv);
  }
  io::save_json(io::to_json(tr), (dir / "trace.json").string());
  if (!tr.checkpoints.empty()) {
    const auto& last = tr.checkpoints.back();
    std::cout << std::setprecision(17) << "t=" << last.t << " risk=" << last.risk << " |w|=" << last.norm_w
              << " |Pi_perp w|=" << last.proj_perp_norm << '\n';
  }
  if (tr.aborted) {
    std::cerr << "run aborted: " << tr.abort_reason << '\n';
    return kNumericAbort;
  }
  return kOk;
}

int cmd_verify(const RunConfig& c) {
  check_config(c);
  std::string loss = c.loss;
  if (!c.trace.empty()) loss = std::string(to_string(io::trace_from_json(io::load_json(c.trace)).loss));
  const auto s = analyze(load_matrix(c), parse_loss(loss), c.tol);
  const auto tr = obtain_trace(c, s);
  const auto rep = verify_all(tr, s);
  io::save_json(io::to_json(rep), (out_dir(c) / "report.json").string());
  for (const auto& chk : rep.checks)
    std::cout << chk.status() << ' ' << chk.name << (chk.estimate_conditioned ? " (estimate-conditioned)" : "")
              << '\n';
  if (tr.aborted) {
    std::cerr << "trace aborted: " << tr.abort_reason << '\n';
    return kNumericAbort;
  }
  if (!rep.all_hold()) {
    for (const auto& name : rep.failed()) std::cerr << "check failed: " << name << '\n';
    return kCheckFailed;
  }
  return kOk;
}

int cmd_report(const RunConfig& c) {
  check_config(c);
  std::string loss = c.loss;
  if (!c.trace.empty()) loss = std::string(to_string(io::trace_from_json(io::load_json(c.trace)).loss));
  const auto s = analyze(load_matrix(c), parse_loss(loss), c.tol);
  const auto tr = obtain_trace(c, s);
  const auto dir = out_dir(c);
  std::ofstream csv(dir / "diagnostics.csv");
  if (!csv) fail(ErrorKind::usage, "cannot write diagnostics.csv");
  io::write_diagnostics_csv(tr, s, csv);
  std::cout << std::setprecision(6);
  for (const auto& f : verify_all(tr, s).trends) {
    std::cout << f.name << ": ";
    if (!f.applicable)
      std::cout << "n/a (" << f.detail << ")\n";
    else
      std::cout << "exponent=" << f.exponent << " coefficient=" << f.coefficient << " residual=" << f.residual
                << (f.holds ? "" : " [outside expected trend]") << '\n';
  }
  return kOk;
}

void add_data_flags(CLI::App* cmd, RunConfig& c) {
  cmd->add_option("--input", c.input, "CSV with header f1..fd,label");
  cmd->add_option("--synth", c.synth_kind, "synthetic dataset: separable|overlap|touching|mixed");
  cmd->add_option("--per-class", c.per_class, "points per class for --synth");
  cmd->add_option("--seed", c.seed, "seed for --synth");
  cmd->add_option("--loss", c.loss, "logistic|exponential");
  cmd->add_option("--tol-lp", c.tol.lp, "LP slack threshold");
  cmd->add_option("--tol-margin", c.tol.margin, "duality gap tolerance");
  cmd->add_option("--tol-scvx", c.tol.scvx, "gradient tolerance at v_bar");
  cmd->add_option("--tol-ball", c.tol.ball, "gradient-mapping tolerance for w_bar");
  cmd->add_option("--out", c.out, "output directory");
}

void add_run_flags(CLI::App* cmd, RunConfig& c) {
  cmd->add_option("--schedule", c.schedule, "constant_one|inv_sqrt");
  cmd->add_option("--steps", c.steps, "iterations T");
  cmd->add_option("--per-decade", c.per_decade, "checkpoints per decade of t");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Gradient-descent implicit-bias toolkit"};
  app.require_subcommand(1);
  RunConfig cfg;

  auto* synth_cmd = app.add_subcommand("synth", "write a synthetic dataset CSV");
  synth_cmd->add_option("--synth", cfg.synth_kind, "separable|overlap|touching|mixed")->required();
  synth_cmd->add_option("--per-class", cfg.per_class, "points per class");
  synth_cmd->add_option("--seed", cfg.seed, "random seed");
  synth_cmd->add_option("--out", cfg.out, "output CSV path")->required();

  auto* dec_cmd = app.add_subcommand("decompose", "split rows, solve margin and strongly convex parts");
  add_data_flags(dec_cmd, cfg);

  auto* run_cmd = app.add_subcommand("run", "gradient descent, writes trace.csv and trace.json");
  add_data_flags(run_cmd, cfg);
  add_run_flags(run_cmd, cfg);

  auto* ver_cmd = app.add_subcommand("verify", "evaluate all checks, writes report.json");
  add_data_flags(ver_cmd, cfg);
  add_run_flags(ver_cmd, cfg);
  ver_cmd->add_option("--trace", cfg.trace, "trace.json from a previous run");

  auto* rep_cmd = app.add_subcommand("report", "plot-ready diagnostics.csv and trend fits");
  add_data_flags(rep_cmd, cfg);
  add_run_flags(rep_cmd, cfg);
  rep_cmd->add_option("--trace", cfg.trace, "trace.json from a previous run");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kInputError;
  }

  try {
    if (synth_cmd->parsed()) return cmd_synth(cfg);
    if (dec_cmd->parsed()) return cmd_decompose(cfg);
    if (run_cmd->parsed()) return cmd_run(cfg);
    if (ver_cmd->parsed()) return cmd_verify(cfg);
    if (rep_cmd->parsed()) return cmd_report(cfg);
  } catch (const Error& e) {
    std::cerr << "error (" << to_string(e.kind()) << "): " << e.what() << '\n';
    return e.kind() == ErrorKind::numerical ? kNumericAbort : kInputError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kInputError;
  }
  return kInputError;
}
