// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "rigidock/metrics.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

namespace rigidock {
namespace {

using oracle::quaternion_rmsd;

TEST(Crmsd, SingleDisplacedColumn) {
  // Ten points, one moved 1 A radially from the centroid. Without
  // superimposition the RMSD is sqrt(1/10). The optimal translation then
  // absorbs 1/10 of the displacement, leaving sqrt(9) / 10; the radial
  // direction gives no rotational gain.
  Eigen::Matrix3Xd truth(3, 10);
  for (int i = 0; i < 10; ++i) {
    const double th = 2 * std::numbers::pi * i / 10;
    truth.col(i) << 10 * std::cos(th), 10 * std::sin(th), (i % 2 ? 3.0 : -3.0);
  }
  Eigen::Matrix3Xd pred = truth;
  pred.col(0) += truth.col(0).normalized();
  EXPECT_NEAR(rmsd(pred, truth), std::sqrt(0.1), 1e-12);
  EXPECT_NEAR(crmsd(pred, truth), 0.3, 1e-9);
  EXPECT_NEAR(crmsd(pred, truth), quaternion_rmsd(pred, truth), 1e-9);
}

TEST(Crmsd, AgreesWithQuaternionOracle) {
  Rng rng(501);
  for (int trial = 0; trial < 50; ++trial) {
    const auto n = 4 + static_cast<Eigen::Index>(rng() % 40);
    const Eigen::Matrix3Xd a = testing::random_cloud(rng, n);
    const Eigen::Matrix3Xd b = testing::random_cloud(rng, n);
    EXPECT_NEAR(crmsd(a, b), quaternion_rmsd(a, b), 1e-8);
  }
}

TEST(Crmsd, InvariantUnderRigidMotionOfEitherArgument) {
  Rng rng(502);
  const Eigen::Matrix3Xd a = testing::random_cloud(rng, 15);
  const Eigen::Matrix3Xd b = a + testing::random_cloud(rng, 15, 0.5);
  const double base = crmsd(a, b);
  for (int trial = 0; trial < 10; ++trial) {
    EXPECT_NEAR(crmsd(apply_transform(random_se3(rng), a), b), base, 1e-9);
    EXPECT_NEAR(crmsd(a, apply_transform(random_se3(rng), b)), base, 1e-9);
  }
  EXPECT_THROW(crmsd(a, b.leftCols(3)), std::invalid_argument);
}

TEST(InterfaceResidues, CutoffSelection) {
  Eigen::Matrix3Xd x1(3, 2), x2(3, 2);
  x1.col(0) << 0, 0, 0;
  x1.col(1) << 0, 50, 0;
  x2.col(0) << 6, 0, 0;   // 6 A from x1[0]
  x2.col(1) << 0, 70, 0;  // 20 A from x1[1]
  const auto [i1, i2] = interface_residues(x1, x2);
  EXPECT_EQ(i1, std::vector<int> { 0 });
  EXPECT_EQ(i2, std::vector<int> { 0 });
}

TEST(Irmsd, MatchesBruteForceSelection) {
  Rng rng(503);
  const Eigen::Matrix3Xd lig = testing::random_cloud(rng, 12, 6.0);
  const Eigen::Matrix3Xd rec = testing::random_cloud(rng, 15, 6.0).colwise()
                               + Eigen::Vector3d(9, 0, 0);
  const Eigen::Matrix3Xd lig_pred = lig + testing::random_cloud(rng, 12, 1.0);
  const Eigen::Matrix3Xd rec_pred = rec + testing::random_cloud(rng, 15, 1.0);

  std::vector<Eigen::Vector3d> p, t;
  for (int i = 0; i < 12; ++i) {
    bool hit = false;
    for (int j = 0; j < 15; ++j)
      hit = hit || (lig.col(i) - rec.col(j)).norm() < 8.0;
    if (hit) {
      p.push_back(lig_pred.col(i));
      t.push_back(lig.col(i));
    }
  }
  for (int j = 0; j < 15; ++j) {
    bool hit = false;
    for (int i = 0; i < 12; ++i)
      hit = hit || (lig.col(i) - rec.col(j)).norm() < 8.0;
    if (hit) {
      p.push_back(rec_pred.col(j));
      t.push_back(rec.col(j));
    }
  }
  ASSERT_GE(p.size(), 3u);
  Eigen::Matrix3Xd pm(3, p.size()), tm(3, t.size());
  for (std::size_t c = 0; c < p.size(); ++c) {
    pm.col(c) = p[c];
    tm.col(c) = t[c];
  }
  EXPECT_NEAR(irmsd(lig_pred, rec_pred, lig, rec), quaternion_rmsd(pm, tm),
              1e-8);

  const RigidTransformd g = random_se3(rng);
  EXPECT_NEAR(irmsd(apply_transform(g, lig_pred), apply_transform(g, rec_pred),
                    lig, rec),
              irmsd(lig_pred, rec_pred, lig, rec), 1e-9);
}

TEST(Irmsd, EmptyInterfaceThrows) {
  const Eigen::Matrix3Xd a = Eigen::Matrix3Xd::Zero(3, 3);
  const Eigen::Matrix3Xd b = a.array() + 100.0;
  EXPECT_THROW(irmsd(a, b, a, b), std::invalid_argument);
}

TEST(Median, OddEvenEmpty) {
  EXPECT_EQ(median({ 3, 1, 2 }), 2.0);
  EXPECT_EQ(median({ 4, 1, 3, 2 }), 2.5);
  EXPECT_THROW(median({}), std::invalid_argument);
}

}  // namespace
}  // namespace rigidock
