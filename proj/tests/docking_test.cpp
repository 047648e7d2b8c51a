// SPDX-License-Identifier: Apache-2.0

#include <cmath>

#include <gtest/gtest.h>

#include "rigidock/checks.hpp"
#include "rigidock/docking.hpp"
#include "test_util.hpp"

namespace rigidock {
namespace {

TEST(Keypoints, AttentionRowsSumToOneAndPointsAreConvex) {
  const Model m = testing::small_model(1);
  const PreparedPair pair = testing::synthetic_pair(201, 6);
  ad::Tape tape;
  const BoundParams p(tape, m.params, false);
  const DockForward f = dock_forward(p, m.config, pair.ligand, pair.receptor);
  for (const KeypointSet *k: { &f.ligand_keypoints, &f.receptor_keypoints }) {
    const Eigen::MatrixXd a = k->attention.value();
    EXPECT_EQ(a.rows(), m.config.num_heads);
    EXPECT_LE((a.rowwise().sum().array() - 1.0).abs().maxCoeff(), 1e-12);
    EXPECT_GE(a.minCoeff(), 0.0);
    EXPECT_EQ(k->y.cols(), m.config.num_heads);
  }
  // Ligand keypoints are convex combinations of ligand output coordinates,
  // which were shifted back to the raw frame.
  const Eigen::Vector3d mean_in = pair.ligand.x.rowwise().mean();
  const Eigen::Matrix3Xd z = f.ligand_state.z.value().colwise() + mean_in;
  const Eigen::MatrixXd expect
      = z * f.ligand_keypoints.attention.value().transpose();
  EXPECT_LE((expect - f.ligand_keypoints.y.value()).cwiseAbs().maxCoeff(),
            1e-10);
}

TEST(KabschTensor, MatchesDoubleVersionAndGradient) {
  Rng rng(202);
  const Eigen::Matrix3Xd y1 = testing::random_cloud(rng, 6);
  const Eigen::Matrix3Xd y2
      = apply_transform(random_se3(rng), y1) + testing::random_cloud(rng, 6, 0.3);
  ad::Tape tape;
  const TransformTensors tt = kabsch(tape.constant(y1), tape.constant(y2));
  const RigidTransformd ref = kabsch(y1, y2);
  EXPECT_LE((to_rigid(tt).R - ref.R).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LE((to_rigid(tt).t - ref.t).cwiseAbs().maxCoeff(), 1e-12);

  const MatrixXd wr = testing::random_matrix(rng, 3, 3),
                 wt = testing::random_matrix(rng, 3, 1);
  std::vector<MatrixXd> params { y1, y2 };
  const double err = ad::grad_check(
      [&](ad::Tape &t, std::span<const ad::Tensor> v) {
        const TransformTensors k = kabsch(v[0], v[1]);
        return ad::sum(ad::hadamard(k.R, t.constant(wr)))
               + ad::sum(ad::hadamard(k.t, t.constant(wt)));
      },
      params);
  EXPECT_LE(err, 1e-4);
}

TEST(KabschTensor, DegenerateThrows) {
  Eigen::Matrix3Xd line(3, 4);
  line << 0, 1, 2, 3, 0, 0, 0, 0, 0, 0, 0, 0;
  ad::Tape tape;
  EXPECT_THROW(kabsch(tape.constant(line), tape.constant(line)),
               DegenerateConfigurationError);
}

TEST(PredictDock, RotationIsProper) {
  const Model m = testing::small_model(2);
  const PreparedPair pair = testing::synthetic_pair(203, 6);
  const RigidTransformd t = predict_dock(m, pair.ligand, pair.receptor);
  EXPECT_NEAR(t.R.determinant(), 1.0, 1e-10);
  EXPECT_LE((t.R.transpose() * t.R - Eigen::Matrix3d::Identity())
                .cwiseAbs()
                .maxCoeff(),
            1e-10);
}

TEST(Symmetries, HoldForJitteredModels) {
  const PreparedPair pair = testing::synthetic_pair(204, 6);
  for (int layers: { 1, 2, 4 }) {
    const Model m = testing::small_model(3 + layers, layers);
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
      const SymmetryReport r
          = check_symmetries(m, pair.ligand, pair.receptor, seed);
      EXPECT_LE(r.max_relative(), 1e-6) << r.to_json().dump();
      EXPECT_LE(r.complex_rmsd, 1e-4);
      EXPECT_LE(r.swap_complex_rmsd, 1e-4);
      EXPECT_GT(r.coords + 1.0, 1.0 - 1e-12);  // report is populated
    }
  }
}

TEST(Symmetries, CoordinateHeadIsActiveAfterJitter) {
  // With phi_x at zero the coordinate check is trivially exact; make sure
  // the jittered model actually moves coordinates.
  const Model m = testing::small_model(11);
  const PreparedPair pair = testing::synthetic_pair(205, 6);
  ad::Tape tape;
  const BoundParams p(tape, m.params, false);
  const auto [s1, s2] = iegmn_forward(p, m.config, pair.ligand, pair.ligand.x,
                                      pair.receptor, pair.receptor.x);
  (void)s2;
  const Eigen::Matrix3Xd centered
      = pair.ligand.x.colwise() - pair.ligand.x.rowwise().mean();
  EXPECT_GT((s1.z.value() - pair.ligand.x).cwiseAbs().maxCoeff(), 1e-3);
  EXPECT_GT((s1.z.value() - centered).cwiseAbs().maxCoeff(), 1e-3);
}

TEST(TransformJson, RoundTrip) {
  Rng rng(206);
  const RigidTransformd t = random_se3(rng);
  const RigidTransformd back
      = transform_from_json(nlohmann::json::parse(transform_to_json(t).dump()));
  EXPECT_EQ(back.R, t.R);
  EXPECT_EQ(back.t, t.t);
  EXPECT_THROW(transform_from_json(nlohmann::json { { "R", 1 } }),
               nlohmann::json::exception);
}

TEST(ModelCheckpoint, SaveLoad) {
  const Model m = testing::small_model(12);
  const auto path = testing::scratch_dir("model") / "m.ckpt";
  m.save(path);
  const Model back = Model::load(path);
  EXPECT_TRUE(back.params == m.params);
  EXPECT_EQ(nlohmann::json(back.config), nlohmann::json(m.config));
}

// Central differences on every parameter entry of a small model against
// the backward pass through IEGMN, keypoints, Kabsch and all losses.
TEST(EndToEnd, GradientsMatchFiniteDifferences) {
  const PreparedPair pair = prepare_pair(
      generate_synthetic(1, 207, testing::tiny_pair_options())[0], 4);
  ASSERT_TRUE(pair.pockets.has_value());
  const Model m = testing::small_model(13, 2, 8, 4);
  Rng rng(208);
  std::string where;
  const double err = testing::end_to_end_grad_error(
      m, pair, random_se3(rng, 5.0), LossWeights {}, &where);
  EXPECT_LE(err, 1e-4) << where;
}

}  // namespace
}  // namespace rigidock
