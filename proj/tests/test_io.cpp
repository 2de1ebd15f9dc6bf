#include <cmath>
#include <filesystem>
#include <sstream>

#include <gtest/gtest.h>

#include "optray/json_io.hpp"
#include "test_support.hpp"

using namespace optray;
using namespace optray::testing;

TEST(JsonNumbers, NonFiniteRoundTrip) {
  EXPECT_EQ(io::num(HUGE_VAL), "inf");
  EXPECT_EQ(io::num(-HUGE_VAL), "-inf");
  EXPECT_TRUE(io::num(std::nan("")).is_null());
  EXPECT_TRUE(std::isinf(io::get_num(io::json("inf"))));
  EXPECT_LT(io::get_num(io::json("-inf")), 0);
  EXPECT_TRUE(std::isnan(io::get_num(io::json(nullptr))));
  EXPECT_EQ(io::get_num(io::json(0.1)), 0.1);
  try {
    io::get_num(io::json("oops"));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::parse);
  }
}

TEST(TraceJson, RoundTripIsExact) {
  const auto A = canonical_mixed();
  const auto s = analyze(A, LossKind::logistic);
  const auto tk = tracking_for(s);
  const auto tr = run(A, LossKind::logistic, Schedule::inv_sqrt, 500, {}, &tk);
  const auto text = io::to_json(tr).dump();
  const auto back = io::trace_from_json(io::json::parse(text));
  EXPECT_EQ(back.loss, tr.loss);
  EXPECT_EQ(back.schedule, tr.schedule);
  EXPECT_EQ(back.T, tr.T);
  EXPECT_EQ(back.tracked, tr.tracked);
  EXPECT_EQ(back.stats.smooth_slack, tr.stats.smooth_slack);
  EXPECT_EQ(back.stats.gen_count, tr.stats.gen_count);
  ASSERT_EQ(back.checkpoints.size(), tr.checkpoints.size());
  for (std::size_t k = 0; k < tr.checkpoints.size(); ++k) {
    const auto &a = tr.checkpoints[k], &b = back.checkpoints[k];
    EXPECT_EQ(a.t, b.t);
    EXPECT_EQ(a.w, b.w);
    EXPECT_EQ(a.risk, b.risk);
    EXPECT_EQ(a.sum_eta, b.sum_eta);
    EXPECT_EQ(a.sup_proj_S, b.sup_proj_S);
    EXPECT_EQ(a.wbar, b.wbar);
    EXPECT_EQ(a.wbar_converged, b.wbar_converged);
  }
  // The reloaded trace verifies identically.
  const auto r1 = verify_all(tr, s), r2 = verify_all(back, s);
  EXPECT_EQ(io::to_json(r1).dump(), io::to_json(r2).dump());
}

TEST(TraceJson, InfiniteStatsSurvive) {
  GDTrace tr;
  tr.T = 1;
  const auto back = io::trace_from_json(io::json::parse(io::to_json(tr).dump()));
  EXPECT_TRUE(std::isinf(back.stats.smooth_slack));
  EXPECT_EQ(back.stats.smooth_step, -1);
}

TEST(TraceJson, MalformedIsParseError) {
  auto j = io::to_json(run(single_row(), LossKind::logistic, Schedule::inv_sqrt, 3));
  j.erase("stats");
  try {
    io::trace_from_json(j);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::parse);
  }
}

TEST(JsonFiles, SaveLoadAndErrors) {
  const auto dir = std::filesystem::temp_directory_path() / "optray_test_io";
  std::filesystem::create_directories(dir);
  const auto p = (dir / "x.json").string();
  io::save_json(io::json{{"a", 1}}, p);
  EXPECT_EQ(io::load_json(p)["a"], 1);
  {
    std::ofstream(p) << "{ not json";
  }
  EXPECT_THROW(io::load_json(p), Error);
  EXPECT_THROW(io::load_json((dir / "missing.json").string()), Error);
  std::filesystem::remove_all(dir);
}

TEST(TraceCsv, HeaderAndRows) {
  const auto tr = run(two_axis(), LossKind::exponential, Schedule::constant_one, 100, RunOptions{10});
  std::ostringstream out;
  io::write_trace_csv(tr, out);
  std::istringstream in(out.str());
  std::string header, line;
  std::getline(in, header);
  EXPECT_EQ(header,
            "t,risk,grad_norm,gamma_t,eta_hat,norm_w,proj_perp_norm,perceptron_sum,sum_eta,sum_etahat_gamma,w1,w2,"
            "proj_S1,proj_S2,dir1,dir2,wbar_risk,wbar1,wbar2");
  int rows = 0;
  while (std::getline(in, line)) {
    ++rows;
    EXPECT_EQ(std::count(line.begin(), line.end(), ','), std::count(header.begin(), header.end(), ','));
  }
  EXPECT_EQ(rows, static_cast<int>(tr.checkpoints.size()));
  EXPECT_EQ(io::fmt17(0.1), "0.10000000000000001");
}

TEST(DiagnosticsCsv, OneRowPerCheckpoint) {
  const auto A = two_axis();
  const auto s = analyze(A, LossKind::exponential);
  const auto tr = run(A, LossKind::exponential, Schedule::inv_sqrt, 1000);
  std::ostringstream out;
  io::write_diagnostics_csv(tr, s, out);
  const auto text = out.str();
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), static_cast<long>(tr.checkpoints.size()) + 1);
}

TEST(ReportJson, MetaAndChecks) {
  const auto A = canonical_mixed();
  const auto s = analyze(A, LossKind::exponential);
  const auto tk = tracking_for(s);
  const auto rep = verify_all(run(A, LossKind::exponential, Schedule::inv_sqrt, 200, {}, &tk), s);
  const auto j = io::to_json(rep);
  EXPECT_EQ(j["meta"]["n"], 3);
  EXPECT_EQ(j["meta"]["n_c"], 1);
  EXPECT_EQ(j["meta"]["loss"], "exponential");
  EXPECT_EQ(j["checks"].size(), rep.checks.size());
  for (const auto& c : j["checks"]) EXPECT_TRUE(c.contains("status"));
}
