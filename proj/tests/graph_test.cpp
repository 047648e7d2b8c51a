// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include <gtest/gtest.h>

#include "rigidock/graph.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

namespace rigidock {
namespace {

ResidueSet fixture() { return read_pdb(testing::fixture_pdb()); }

ResidueSet moved(const ResidueSet &rs, const RigidTransformd &g) {
  ResidueSet out = rs;
  for (Residue &r: out.residues) {
    r.ca = g.R * r.ca + g.t;
    r.n = g.R * r.n + g.t;
    r.c = g.R * r.c + g.t;
  }
  return out;
}

TEST(LocalFrames, OrthonormalAndRightHanded) {
  for (const auto &f: local_frames(fixture())) {
    const Eigen::Matrix3d b = f.basis();
    EXPECT_LE((b * b.transpose() - Eigen::Matrix3d::Identity())
                  .cwiseAbs()
                  .maxCoeff(),
              1e-12);
    EXPECT_NEAR(b.determinant(), 1.0, 1e-12);
  }
}

TEST(LocalFrames, CollinearBackboneThrows) {
  ResidueSet rs = fixture();
  rs.residues[3].c = rs.residues[3].ca + 2.0 * (rs.residues[3].ca - rs.residues[3].n);
  EXPECT_THROW(local_frames(rs), DegenerateConfigurationError);
}

TEST(KnnNeighbors, MatchesBruteForce) {
  Rng rng(21);
  const Eigen::Matrix3Xd x = testing::random_cloud(rng, 40);
  const auto nb = knn_neighbors(x, 7);
  for (int i = 0; i < 40; ++i) {
    ASSERT_EQ(nb[i].size(), 7u);
    std::vector<std::pair<double, int>> all;
    for (int j = 0; j < 40; ++j)
      if (j != i)
        all.emplace_back((x.col(i) - x.col(j)).norm(), j);
    std::sort(all.begin(), all.end());
    for (int m = 0; m < 7; ++m)
      EXPECT_EQ(nb[i][m], all[m].second);
  }
}

TEST(SurfaceFeatures, HalfCircleClosedForm) {
  // Neighbors evenly spread over an arc of angle alpha at unit distance:
  // rho = |mean of unit vectors| = 2 sin(alpha / 2) / alpha.
  const int n = 200;
  for (double alpha: { std::numbers::pi / 2, std::numbers::pi,
                       1.5 * std::numbers::pi }) {
    Eigen::Matrix3Xd x = Eigen::Matrix3Xd::Zero(3, n + 1);
    for (int j = 0; j < n; ++j) {
      const double th = (j + 0.5) * alpha / n;
      x.col(j + 1) << std::cos(th), std::sin(th), 0.0;
    }
    std::vector<std::vector<int>> nb(n + 1, std::vector<int> { 0 });
    nb[0].clear();
    for (int j = 1; j <= n; ++j)
      nb[0].push_back(j);
    const Eigen::MatrixXd rho = surface_features(x, nb);
    const double expect = 2 * std::sin(alpha / 2) / alpha;
    for (Eigen::Index l = 0; l < rho.rows(); ++l)
      EXPECT_NEAR(rho(l, 0), expect, 0.02);
  }
}

TEST(SurfaceFeatures, RegularPolygonCenterIsZero) {
  const int n = 12;
  Eigen::Matrix3Xd x = Eigen::Matrix3Xd::Zero(3, n + 1);
  for (int j = 0; j < n; ++j) {
    const double th = 2 * std::numbers::pi * j / n;
    x.col(j + 1) << 3 * std::cos(th), 3 * std::sin(th), 0.0;
  }
  std::vector<std::vector<int>> nb(n + 1, std::vector<int> { 0 });
  nb[0].resize(n);
  std::iota(nb[0].begin(), nb[0].end(), 1);
  const Eigen::MatrixXd rho = surface_features(x, nb);
  EXPECT_LE(rho.col(0).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(SurfaceFeatures, BoundaryOfDiskScoresHigher) {
  Rng rng(22);
  const int n = 200;
  Eigen::Matrix3Xd x = Eigen::Matrix3Xd::Zero(3, n);
  for (int i = 0; i < n; ++i) {
    const double r = std::sqrt(uniform(rng, 0, 1));
    const double th = uniform(rng, 0, 2 * std::numbers::pi);
    x.col(i) << r * std::cos(th), r * std::sin(th), 0.0;
  }
  std::vector<std::vector<int>> nb(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (j != i)
        nb[i].push_back(j);
  const std::array<double, 1> lambda { 0.05 };
  const Eigen::MatrixXd rho = surface_features(x, nb, lambda);
  std::vector<double> radius(n), score(n);
  for (int i = 0; i < n; ++i) {
    radius[i] = x.col(i).norm();
    score[i] = rho(0, i);
  }
  EXPECT_GE(oracle::spearman(radius, score), 0.5);
}

TEST(SurfaceFeatures, NodeWithoutNeighborsThrows) {
  const Eigen::Matrix3Xd x = Eigen::Matrix3Xd::Zero(3, 2);
  EXPECT_THROW(surface_features(x, { { 1 }, {} }), std::invalid_argument);
}

TEST(EdgeFeatures, Layout) {
  const ResidueSet rs = fixture();
  const auto frames = local_frames(rs);
  const auto f = edge_features(rs.residues[0].ca, frames[0], rs.residues[1].ca,
                               frames[1]);
  const Eigen::Vector3d rel
      = frames[0].basis() * (rs.residues[1].ca - rs.residues[0].ca);
  EXPECT_LE((f.head<3>() - rel).cwiseAbs().maxCoeff(), 1e-14);
  const double d = (rs.residues[1].ca - rs.residues[0].ca).norm();
  EXPECT_NEAR(f[12], std::exp(-d * d / 2), 1e-14);
  EXPECT_NEAR(f[26], std::exp(-d * d / (2 * std::pow(1.5, 28))), 1e-14);
}

TEST(BuildGraph, DegreeAndOrdering) {
  const ProteinGraph g = build_graph(fixture(), 6);
  EXPECT_EQ(g.k, 6);
  ASSERT_EQ(g.num_edges(), 20u * 6u);
  for (std::size_t e = 0; e < g.num_edges(); ++e) {
    EXPECT_EQ(g.dst[e], static_cast<int>(e / 6));
    EXPECT_NE(g.src[e], g.dst[e]);
  }
  EXPECT_EQ(g.surface.rows(), kNumSurfaceFeatures);
  EXPECT_EQ(build_graph(fixture(), 50).k, 19);
}

TEST(BuildGraph, TooSmallThrows) {
  ResidueSet rs = fixture();
  rs.residues.resize(1);
  EXPECT_THROW(build_graph(rs), std::invalid_argument);
}

TEST(BuildGraph, FeaturesAreRigidInvariant) {
  const ResidueSet rs = fixture();
  const ProteinGraph a = build_graph(rs);
  Rng rng(23);
  for (int trial = 0; trial < 10; ++trial) {
    const ProteinGraph b = build_graph(moved(rs, random_se3(rng)));
    EXPECT_EQ(a.src, b.src);
    EXPECT_EQ(a.dst, b.dst);
    EXPECT_LE((a.surface - b.surface).cwiseAbs().maxCoeff(), 1e-8);
    EXPECT_LE((a.edge_feats - b.edge_feats).cwiseAbs().maxCoeff(), 1e-8);
  }
}

}  // namespace
}  // namespace rigidock
