#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "optray/analysis.hpp"
#include "optray/gd.hpp"
#include "optray/scvx.hpp"
#include "test_support.hpp"

using namespace optray;
using namespace optray::testing;

namespace {

ScOptimum solve(const MarginMatrix& A, LossKind loss, Decomposition* out = nullptr) {
  const auto dec = partition(A);
  if (out) *out = dec;
  return solve_vbar(A.select(dec.sc_rows).rows(), dec.basis_S, loss, A.n());
}

// Minimum second derivative of R_S over a dense 1-D grid of the sublevel
// set, plus its two endpoints located by bisection.
double grid_lambda_1d(const Eigen::MatrixXd& a_s, LossKind loss, double n) {
  auto val = [&](double v) {
    double s = 0;
    for (Eigen::Index i = 0; i < a_s.rows(); ++i) s += loss::value(loss, a_s(i, 0) * v);
    return s / n;
  };
  auto curv = [&](double v) {
    double s = 0;
    for (Eigen::Index i = 0; i < a_s.rows(); ++i) s += a_s(i, 0) * a_s(i, 0) * loss::second(loss, a_s(i, 0) * v);
    return s / n;
  };
  double best = 1e300;
  for (int k = -60000; k <= 60000; ++k) {
    const double v = k * 1e-3, next = (k + 1) * 1e-3;
    if (val(v) <= 1.0) best = std::min(best, curv(v));
    if ((val(v) <= 1.0) != (val(next) <= 1.0)) {
      double in = val(v) <= 1.0 ? v : next, out = val(v) <= 1.0 ? next : v;
      for (int b = 0; b < 80; ++b) {
        const double mid = 0.5 * (in + out);
        (val(mid) <= 1.0 ? in : out) = mid;
      }
      best = std::min(best, curv(in));
    }
  }
  return best;
}

}  // namespace

TEST(SolveVbar, OpposingPairLogistic) {
  const auto s = solve(opposing_pair(), LossKind::logistic);
  EXPECT_NEAR(s.v_bar[0], 0.0, 1e-12);
  EXPECT_NEAR(s.risk_inf, std::log(2.0), 1e-15);
}

TEST(SolveVbar, AsymmetricExponentialClosedForm) {
  const auto s = solve(asymmetric_1d(), LossKind::exponential);
  EXPECT_NEAR(s.v_bar[0], std::log(2.0) / 2, 1e-8);
  EXPECT_NEAR(s.risk_inf, 2 * std::sqrt(2.0) / 3, 1e-8);
  EXPECT_LE(s.grad_norm, 1e-10);
}

TEST(SolveVbar, EmptyStronglyConvexPart) {
  const auto s = solve_vbar(Eigen::MatrixXd(0, 2), Basis{Eigen::MatrixXd(2, 0)}, LossKind::logistic, 4);
  EXPECT_EQ(s.v_bar, Eigen::Vector2d::Zero());
  EXPECT_EQ(s.risk_inf, 0.0);
}

TEST(SolveVbar, RankZeroSpanKeepsLossAtZero) {
  // A_S = {0}: the origin row contributes l(0)/n to the infimum.
  const auto A = mm({{-1, 0}, {0, 0}});
  Decomposition dec;
  const auto s = solve(A, LossKind::logistic, &dec);
  EXPECT_EQ(dec.basis_S.rank(), 0);
  EXPECT_NEAR(s.risk_inf, std::log(2.0) / 2, 1e-15);
}

TEST(SolveVbar, CanonicalMixedInfimum) {
  const auto s = solve(canonical_mixed(), LossKind::logistic);
  EXPECT_NEAR(s.v_bar.norm(), 0.0, 1e-10);
  EXPECT_NEAR(s.risk_inf, 2 * std::log(2.0) / 3, 1e-12);
  EXPECT_NEAR(infimum_risk(partition(canonical_mixed()), s), s.risk_inf, 0.0);
}

TEST(SolveVbar, SeparableInfimumIsZero) {
  const auto s = solve(to_margin_matrix(synth(SynthKind::separable, 10, 1)), LossKind::exponential);
  EXPECT_EQ(s.risk_inf, 0.0);
}

TEST(SolveVbar, IterationCapIsNumericalError) {
  const auto A = to_margin_matrix(synth(SynthKind::overlap, 20, 1));
  const auto dec = partition(A);
  try {
    solve_vbar(A.select(dec.sc_rows).rows(), dec.basis_S, LossKind::logistic, A.n(), ScvxOptions{1e-14, 2});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::numerical);
  }
}

TEST(SolveVbar, VbarInSAndStationaryAndGloballyOptimal) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g;
  for (auto kind : {SynthKind::overlap, SynthKind::mixed}) {
    for (auto loss : {LossKind::logistic, LossKind::exponential}) {
      const auto A = to_margin_matrix(synth(kind, 15, 2));
      Decomposition dec;
      const auto s = solve(A, loss, &dec);
      EXPECT_LE((project(dec.basis_S, s.v_bar) - s.v_bar).norm(), 1e-9);
      const MarginMatrix a_s = A.select(dec.sc_rows);
      // Projected gradient of the restricted risk (normalized by the full n).
      const Eigen::VectorXd gr = grad(a_s, loss, s.v_bar) * (double(a_s.n()) / double(A.n()));
      EXPECT_LE(project(dec.basis_S, gr).norm(), 1e-10);
      for (int k = 0; k < 100; ++k) {
        Eigen::VectorXd v = s.v_bar;
        for (Eigen::Index c = 0; c < dec.basis_S.rank(); ++c) v += 2 * g(rng) * dec.basis_S.columns.col(c);
        EXPECT_LE(s.risk_inf, risk(a_s, loss, v) * double(a_s.n()) / double(A.n()) + 1e-15);
      }
    }
  }
}

TEST(SolveVbar, RayLimitApproachesInfimum) {
  // R(v_bar + r u_bar) decreases to R_bar as r grows.
  for (auto loss : {LossKind::logistic, LossKind::exponential}) {
    const auto A = to_margin_matrix(synth(SynthKind::mixed, 10, 1));
    const auto st = analyze(A, loss);
    double prev = 1e300;
    for (double r : {1.0, 2.0, 4.0, 8.0, 16.0, 64.0, 256.0, 1024.0}) {
      const double ex = risk(A, loss, st.sc.v_bar + r * st.margin.u_bar) - st.risk_inf();
      if (prev > 1e-12) {
        EXPECT_LT(ex, prev) << "r=" << r;
      }
      EXPECT_LE(ex, prev);
      EXPECT_GE(ex, -1e-15);
      prev = ex;
    }
    EXPECT_LT(prev, 1e-6);
  }
}

TEST(EstimateLambda, OpposingPairLogistic) {
  const auto A = opposing_pair();
  Decomposition dec;
  const auto s = solve(A, LossKind::logistic, &dec);
  const auto a_s = A.select(dec.sc_rows).rows();
  const double lam = estimate_lambda(a_s, dec.basis_S, LossKind::logistic, A.n(), s);
  EXPECT_LE(lam, 0.25 + 1e-12);
  EXPECT_GT(lam, 0.0);
  EXPECT_NEAR(lam, grid_lambda_1d(a_s, LossKind::logistic, 2.0), 1e-4);
}

TEST(EstimateLambda, OpposingPairExponential) {
  const auto A = opposing_pair();
  Decomposition dec;
  const auto s = solve(A, LossKind::exponential, &dec);
  const auto a_s = A.select(dec.sc_rows).rows();
  const double lam = estimate_lambda(a_s, dec.basis_S, LossKind::exponential, A.n(), s);
  // R_S = cosh(v); the sublevel set {cosh v <= 1} is the single point 0.
  EXPECT_NEAR(lam, 1.0, 1e-12);
  EXPECT_NEAR(lam, grid_lambda_1d(a_s, LossKind::exponential, 2.0), 1e-6);
}

TEST(EstimateLambda, AsymmetricMatchesGrid) {
  for (auto loss : {LossKind::logistic, LossKind::exponential}) {
    const auto A = asymmetric_1d();
    Decomposition dec;
    const auto s = solve(A, loss, &dec);
    const auto a_s = A.select(dec.sc_rows).rows();
    const double lam = estimate_lambda(a_s, dec.basis_S, loss, A.n(), s);
    EXPECT_NEAR(lam, grid_lambda_1d(a_s, loss, 3.0), 1e-4 * lam);
  }
}

TEST(EstimateLambda, RankZeroIsInfinite) {
  EXPECT_TRUE(std::isinf(estimate_lambda(Eigen::MatrixXd(0, 2), Basis{Eigen::MatrixXd(2, 0)}, LossKind::logistic, 2,
                                         ScOptimum{Eigen::Vector2d::Zero()})));
}

TEST(EstimateLambda, SampledValueCloseToDenseRayGrid) {
  // 720 rays with the boundary located by bisection; the 32-ray estimate
  // should agree with the dense one to within a modest factor.
  const auto A = to_margin_matrix(synth(SynthKind::overlap, 6, 3));
  Decomposition dec;
  const auto s = solve(A, LossKind::exponential, &dec);
  const auto a_s = A.select(dec.sc_rows).rows();
  ASSERT_EQ(dec.basis_S.rank(), 2);
  const double lam = estimate_lambda(a_s, dec.basis_S, LossKind::exponential, A.n(), s);
  detail::RestrictedRisk f{a_s * dec.basis_S.columns, LossKind::exponential, double(A.n())};
  const Eigen::VectorXd c0 = dec.basis_S.columns.transpose() * s.v_bar;
  auto min_eig = [&](const Eigen::VectorXd& c) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(f.hessian(c));
    return es.eigenvalues().minCoeff();
  };
  double grid_min = min_eig(c0);
  for (int k = 0; k < 720; ++k) {
    const Eigen::Vector2d dir(std::cos(k * M_PI / 360), std::sin(k * M_PI / 360));
    double lo = 0, hi = 1;
    while (f.value(c0 + hi * dir) < 1.0) hi *= 2;
    for (int b = 0; b < 100; ++b) (f.value(c0 + 0.5 * (lo + hi) * dir) < 1.0 ? lo : hi) = 0.5 * (lo + hi);
    for (int j = 1; j <= 20; ++j) grid_min = std::min(grid_min, min_eig(c0 + lo * j / 20.0 * dir));
  }
  EXPECT_GE(lam, grid_min * (1 - 1e-9));
  EXPECT_LE(lam, 1.5 * grid_min);
}
