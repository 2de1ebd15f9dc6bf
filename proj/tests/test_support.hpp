#pragma once

#include <initializer_list>
#include <random>

#include <Eigen/Dense>

#include "optray/dataset.hpp"

namespace optray::testing {

inline Eigen::MatrixXd rows(std::initializer_list<std::initializer_list<double>> r) {
  Eigen::MatrixXd m(static_cast<Eigen::Index>(r.size()), static_cast<Eigen::Index>(r.begin()->size()));
  Eigen::Index i = 0;
  for (const auto& row : r) {
    Eigen::Index j = 0;
    for (double v : row) m(i, j++) = v;
    ++i;
  }
  return m;
}

inline MarginMatrix mm(std::initializer_list<std::initializer_list<double>> r) { return MarginMatrix(rows(r)); }

// {(-1,0), (0,-1), (0,1)}: one separable row, an opposing pair on e2.
inline MarginMatrix canonical_mixed() { return mm({{-1, 0}, {0, -1}, {0, 1}}); }
inline MarginMatrix two_axis() { return mm({{-1, 0}, {0, -1}}); }
inline MarginMatrix single_row() { return mm({{-1}}); }
inline MarginMatrix opposing_pair() { return mm({{-1}, {1}}); }
inline MarginMatrix asymmetric_1d() { return mm({{-1}, {-1}, {1}}); }

inline Eigen::MatrixXd scale_into_ball(Eigen::MatrixXd m) {
  const double mx = m.rowwise().norm().maxCoeff();
  if (mx > 1.0) m /= mx;
  return m;
}

/// Random small margin matrices from three families, chosen by seed:
/// unstructured Gaussian rows, rows with entries in {-1, 0, 1} (degenerate
/// geometry), and a planted split with an inseparable block in a random
/// subspace plus rows strictly separated by a direction orthogonal to it.
inline MarginMatrix random_instance(std::uint64_t seed, int max_n = 8, int max_d = 4) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  const int d = 1 + static_cast<int>(rng() % static_cast<unsigned>(max_d));
  const int n = 1 + static_cast<int>(rng() % static_cast<unsigned>(max_n));
  Eigen::MatrixXd A(n, d);
  switch (seed % 3) {
    case 0:
      for (Eigen::Index i = 0; i < A.size(); ++i) A.data()[i] = g(rng);
      break;
    case 1:
      for (Eigen::Index i = 0; i < A.size(); ++i) A.data()[i] = static_cast<double>(static_cast<int>(rng() % 3) - 1);
      if (A.rowwise().norm().minCoeff() == 0.0 && A.norm() == 0.0) A(0, 0) = 1.0;
      break;
    default: {
      // Subspace S of dimension r < d, u orthogonal to it.
      const int r = d > 1 ? static_cast<int>(rng() % static_cast<unsigned>(d)) : 0;
      Eigen::MatrixXd G(d, d);
      for (Eigen::Index i = 0; i < G.size(); ++i) G.data()[i] = g(rng);
      const Eigen::MatrixXd Q = Eigen::HouseholderQR<Eigen::MatrixXd>(G).householderQ();
      const Eigen::VectorXd u = Q.col(d - 1);
      const int ns = r > 0 ? std::min(n, r + 1 + static_cast<int>(rng() % 2)) : 0;
      for (int i = 0; i < ns; ++i) {
        Eigen::VectorXd x = Eigen::VectorXd::Zero(d);
        if (i < ns - 1) {
          for (int k = 0; k < r; ++k) x += g(rng) * Q.col(k);
        } else {
          // Negative combination of the others puts 0 in the convex hull.
          for (int k = 0; k < ns - 1; ++k) x -= std::abs(g(rng)) * A.row(k).transpose();
        }
        A.row(i) = x.transpose();
      }
      for (int i = ns; i < n; ++i) {
        Eigen::VectorXd x = -(0.2 + std::abs(g(rng))) * u;
        for (int k = 0; k < d; ++k) x += 0.5 * g(rng) * Q.col(k);
        if (x.dot(u) > -0.1) x -= (x.dot(u) + 0.3) * u;
        A.row(i) = x.transpose();
      }
    }
  }
  if (A.norm() == 0.0) A(0, 0) = 1.0;
  return MarginMatrix(scale_into_ball(A));
}

}  // namespace optray::testing
