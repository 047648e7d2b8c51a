// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "rigidock/geometry.hpp"
#include "test_util.hpp"

namespace rigidock {
namespace {

using testing::random_cloud;

double fit_cost(const Eigen::Matrix3d &r, const Eigen::Matrix3Xd &y1,
                const Eigen::Matrix3Xd &y2) {
  // Optimal translation for a fixed rotation aligns the centroids.
  const Eigen::Vector3d t = y2.rowwise().mean() - r * y1.rowwise().mean();
  return ((r * y1).colwise() + t - y2).squaredNorm();
}

TEST(RigidTransform, ComposeAndInverse) {
  Rng rng(1);
  const RigidTransformd a = random_se3(rng), b = random_se3(rng);
  const Eigen::Matrix3Xd x = random_cloud(rng, 7);
  const Eigen::Matrix3Xd ab = apply_transform(a * b, x);
  const Eigen::Matrix3Xd seq = apply_transform(a, apply_transform(b, x));
  EXPECT_LE((ab - seq).cwiseAbs().maxCoeff(), 1e-12);
  const Eigen::Matrix3Xd back = apply_transform(a.inverse(), apply_transform(a, x));
  EXPECT_LE((back - x).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Kabsch, RecoversProperTransforms) {
  Rng rng(2);
  for (int trial = 0; trial < 100; ++trial) {
    const int k = 4 + static_cast<int>(rng() % 47);
    const Eigen::Matrix3Xd y1 = random_cloud(rng, k);
    const RigidTransformd truth = random_se3(rng);
    const Eigen::Matrix3Xd y2 = apply_transform(truth, y1);
    const RigidTransformd est = kabsch(y1, y2);
    EXPECT_LE((apply_transform(est, y1) - y2).cwiseAbs().maxCoeff(), 1e-8);
    EXPECT_NEAR(est.R.determinant(), 1.0, 1e-10);
  }
}

TEST(Kabsch, MirroredInputsGiveBestProperRotation) {
  Rng rng(3);
  // Coarse grid of unit quaternions (Hopf-like sampling of the 3-sphere).
  std::vector<Eigen::Matrix3d> grid;
  const int steps = 18;
  for (int a = 0; a < steps; ++a)
    for (int b = 0; b < steps; ++b)
      for (int c = 0; c < steps; ++c) {
        const double u1 = (a + 0.5) / steps, u2 = (b + 0.5) / steps,
                     u3 = (c + 0.5) / steps;
        const double tau = 2 * std::numbers::pi;
        Eigen::Quaterniond q(std::sqrt(u1) * std::cos(tau * u3),
                             std::sqrt(1 - u1) * std::sin(tau * u2),
                             std::sqrt(1 - u1) * std::cos(tau * u2),
                             std::sqrt(u1) * std::sin(tau * u3));
        grid.push_back(q.normalized().toRotationMatrix());
      }
  for (int trial = 0; trial < 20; ++trial) {
    const Eigen::Matrix3Xd y1 = random_cloud(rng, 6 + trial);
    Eigen::Matrix3d mirror = Eigen::Matrix3d::Identity();
    mirror(2, 2) = -1;
    const RigidTransformd g = random_se3(rng);
    const Eigen::Matrix3Xd y2 = apply_transform(g, mirror * y1);
    const RigidTransformd est = kabsch(y1, y2);
    EXPECT_NEAR(est.R.determinant(), 1.0, 1e-10);
    double best = std::numeric_limits<double>::infinity();
    for (const auto &r: grid)
      best = std::min(best, fit_cost(r, y1, y2));
    EXPECT_LE(fit_cost(est.R, y1, y2), best + 1e-9) << "trial " << trial;
  }
}

TEST(Kabsch, DegenerateKeypointsThrow) {
  Eigen::Matrix3Xd line(3, 4);
  line << 0, 1, 2, 3, 0, 0, 0, 0, 0, 0, 0, 0;
  EXPECT_THROW(kabsch(line, line), DegenerateConfigurationError);
  Eigen::Matrix3Xd point = Eigen::Matrix3Xd::Ones(3, 3);
  EXPECT_THROW(kabsch(point, point), DegenerateConfigurationError);
}

TEST(Kabsch, PlanarInputsAreFine) {
  Rng rng(4);
  Eigen::Matrix3Xd y1 = random_cloud(rng, 5);
  y1.row(2).setZero();
  const RigidTransformd truth = random_se3(rng);
  const RigidTransformd est = kabsch(y1, apply_transform(truth, y1));
  EXPECT_LE((est.R - truth.R).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(Rmsd, KnownValues) {
  Eigen::Matrix3Xd a = Eigen::Matrix3Xd::Zero(3, 4), b = a;
  b(0, 0) = 2.0;
  EXPECT_DOUBLE_EQ(rmsd(a, b), 1.0);
  Rng rng(5);
  const Eigen::Matrix3Xd x = random_cloud(rng, 9);
  EXPECT_LE(superimposed_rmsd(apply_transform(random_se3(rng), x), x), 1e-10);
  EXPECT_THROW(rmsd(a, Eigen::Matrix3Xd::Zero(3, 3)), ShapeError);
}

TEST(RandomSe3, RotationsAreProper) {
  Rng rng(6);
  for (int i = 0; i < 10000; ++i) {
    const RigidTransformd t = random_se3(rng);
    ASSERT_NEAR(t.R.determinant(), 1.0, 1e-10);
    ASSERT_LE((t.R.transpose() * t.R - Eigen::Matrix3d::Identity())
                  .cwiseAbs()
                  .maxCoeff(),
              1e-12);
    ASSERT_LE(t.t.cwiseAbs().maxCoeff(), kDefaultMaxTranslation);
  }
}

TEST(RandomSe3, EntryMomentsMatchHaarMeasure) {
  // Under the Haar measure each entry has mean 0 and variance 1/3.
  Rng rng(7);
  const int n = 20000;
  Eigen::Matrix3d sum = Eigen::Matrix3d::Zero(), sq = Eigen::Matrix3d::Zero();
  for (int i = 0; i < n; ++i) {
    const Eigen::Matrix3d r = random_se3(rng).R;
    sum += r;
    sq += r.cwiseAbs2();
  }
  const double sigma = 1.0 / std::sqrt(3.0);
  const double bound = 3.0 * sigma / std::sqrt(double(n));
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      EXPECT_LE(std::abs(sum(i, j) / n), bound) << i << "," << j;
      // Var(R_ij^2) = E[R^4] - 1/9 = 1/5 - 1/9.
      EXPECT_LE(std::abs(sq(i, j) / n - 1.0 / 3.0),
                3.0 * std::sqrt(1.0 / 5.0 - 1.0 / 9.0) / std::sqrt(double(n)));
    }
}

TEST(RandomSe3, SeedIsDeterministic) {
  const RigidTransformd a = random_se3(std::uint64_t { 42 });
  const RigidTransformd b = random_se3(std::uint64_t { 42 });
  EXPECT_TRUE(a.R == b.R);
  EXPECT_TRUE(a.t == b.t);
  const RigidTransformd c = random_se3(std::uint64_t { 43 });
  EXPECT_FALSE(a.R == c.R);
}

}  // namespace
}  // namespace rigidock
