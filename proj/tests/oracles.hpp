// SPDX-License-Identifier: Apache-2.0
//
// Independent reference implementations shared by the unit tests and the
// acceptance binary. None of them reuse library code paths.

#ifndef RIGIDOCK_TESTS_ORACLES_HPP_
#define RIGIDOCK_TESTS_ORACLES_HPP_

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include <Eigen/Dense>

namespace rigidock::oracle {

// Exhaustive vertex enumeration with uniform marginals. Every vertex of the
// transport polytope is supported on a spanning tree of the bipartite
// row/column graph, and the flows on a tree are forced by peeling leaves.
inline double brute_force_emd(const Eigen::MatrixXd &c) {
  const int s = static_cast<int>(c.rows()), k = static_cast<int>(c.cols());
  const int cells = s * k, need = s + k - 1;
  double best = std::numeric_limits<double>::infinity();
  std::vector<int> pick(need);
  std::iota(pick.begin(), pick.end(), 0);
  while (true) {
    std::vector<int> parent(s + k);
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](int a) {
      while (parent[a] != a)
        a = parent[a] = parent[parent[a]];
      return a;
    };
    bool tree = true;
    for (int cell: pick) {
      const int a = find(cell / k), b = find(s + cell % k);
      if (a == b) {
        tree = false;
        break;
      }
      parent[a] = b;
    }
    if (tree) {
      std::vector<double> row(s, 1.0 / s), col(k, 1.0 / k);
      std::vector<bool> done(need, false);
      double cost = 0;
      bool feasible = true;
      for (int round = 0; round < need; ++round) {
        std::vector<int> deg(s + k, 0);
        for (int e = 0; e < need; ++e)
          if (!done[e]) {
            ++deg[pick[e] / k];
            ++deg[s + pick[e] % k];
          }
        for (int e = 0; e < need; ++e) {
          if (done[e])
            continue;
          const int r = pick[e] / k, q = pick[e] % k;
          double flow;
          if (deg[r] == 1)
            flow = row[r];
          else if (deg[s + q] == 1)
            flow = col[q];
          else
            continue;
          if (flow < -1e-12)
            feasible = false;
          row[r] -= flow;
          col[q] -= flow;
          cost += flow * c(r, q);
          done[e] = true;
          break;
        }
      }
      if (feasible)
        best = std::min(best, cost);
    }
    int i = need - 1;
    while (i >= 0 && pick[i] == cells - need + i)
      --i;
    if (i < 0)
      break;
    ++pick[i];
    for (int j = i + 1; j < need; ++j)
      pick[j] = pick[j - 1] + 1;
  }
  return best;
}

// Optimal proper-rotation residual via the quaternion eigenvalue
// formulation: sum |a|^2 + sum |b|^2 - 2 lambda_max(N) on centered clouds.
inline double quaternion_residual(const Eigen::Matrix3Xd &a,
                                  const Eigen::Matrix3Xd &b) {
  const Eigen::Matrix3Xd ac = a.colwise() - a.rowwise().mean();
  const Eigen::Matrix3Xd bc = b.colwise() - b.rowwise().mean();
  const Eigen::Matrix3d s = ac * bc.transpose();
  Eigen::Matrix4d n;
  n << s(0, 0) + s(1, 1) + s(2, 2), s(1, 2) - s(2, 1), s(2, 0) - s(0, 2),
      s(0, 1) - s(1, 0),
      s(1, 2) - s(2, 1), s(0, 0) - s(1, 1) - s(2, 2), s(0, 1) + s(1, 0),
      s(2, 0) + s(0, 2),
      s(2, 0) - s(0, 2), s(0, 1) + s(1, 0), -s(0, 0) + s(1, 1) - s(2, 2),
      s(1, 2) + s(2, 1),
      s(0, 1) - s(1, 0), s(2, 0) + s(0, 2), s(1, 2) + s(2, 1),
      -s(0, 0) - s(1, 1) + s(2, 2);
  const double lmax
      = Eigen::SelfAdjointEigenSolver<Eigen::Matrix4d>(n).eigenvalues()(3);
  return std::max(0.0, ac.squaredNorm() + bc.squaredNorm() - 2 * lmax);
}

inline double quaternion_rmsd(const Eigen::Matrix3Xd &a,
                              const Eigen::Matrix3Xd &b) {
  return std::sqrt(quaternion_residual(a, b) / static_cast<double>(a.cols()));
}

inline std::vector<double> ranks(const std::vector<double> &v) {
  std::vector<int> idx(v.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](int a, int b) { return v[a] < v[b]; });
  std::vector<double> r(v.size());
  for (std::size_t i = 0; i < idx.size(); ++i)
    r[idx[i]] = static_cast<double>(i);
  return r;
}

inline double spearman(const std::vector<double> &a,
                       const std::vector<double> &b) {
  const std::vector<double> ra = ranks(a), rb = ranks(b);
  const double mean = (static_cast<double>(a.size()) - 1) / 2;
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < ra.size(); ++i) {
    sab += (ra[i] - mean) * (rb[i] - mean);
    saa += (ra[i] - mean) * (ra[i] - mean);
    sbb += (rb[i] - mean) * (rb[i] - mean);
  }
  return sab / std::sqrt(saa * sbb);
}

}  // namespace rigidock::oracle

#endif  // RIGIDOCK_TESTS_ORACLES_HPP_
