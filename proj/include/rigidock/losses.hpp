// SPDX-License-Identifier: Apache-2.0
//
// Training objectives: ligand MSE, optimal-transport pocket loss and the
// non-intersection loss built on the surface function G.

#ifndef RIGIDOCK_LOSSES_HPP_
#define RIGIDOCK_LOSSES_HPP_

#include <stdexcept>

#include <Eigen/Dense>

#include "json.hpp"
#include "rigidock/autodiff.hpp"
#include "rigidock/emd.hpp"

namespace rigidock {

constexpr double kPocketCutoff = 8.0;
constexpr double kSurfaceGamma = 10.0;
constexpr double kSurfaceSigma = 25.0;

/// No cross pair is closer than the pocket cutoff.
class NoContactError: public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Midpoints of all cross pairs (i, j) with ||x1_i - x2_j|| < tau, i-major.
/// In the bound pose p1 == p2; each can later be carried into its own
/// protein's unbound frame.
struct PocketPoints {
  Eigen::Matrix3Xd p1, p2;
  Eigen::Index size() const { return p1.cols(); }
};

PocketPoints pocket_points(const Eigen::Matrix3Xd &x1,
                           const Eigen::Matrix3Xd &x2,
                           double tau = kPocketCutoff);

/// <T*, C> with C_sk = ||y1_k - p1_s||^2 + ||y2_k - p2_s||^2 and T* the exact
/// EMD plan, held constant in the backward pass.
ad::Tensor ot_pocket_loss(const ad::Tensor &y1, const ad::Tensor &y2,
                          const Eigen::Matrix3Xd &p1,
                          const Eigen::Matrix3Xd &p2);

/// G(x) = -sigma log sum_i exp(-||x - x_i||^2 / sigma).
double surface_G(const Eigen::Vector3d &x, const Eigen::Matrix3Xd &cloud,
                 double sigma = kSurfaceSigma);

/// mean_i max(0, gamma - G2(x1_i)) + mean_j max(0, gamma - G1(x2_j)).
ad::Tensor intersection_loss(const ad::Tensor &x1, const ad::Tensor &x2,
                             double gamma = kSurfaceGamma,
                             double sigma = kSurfaceSigma);
double intersection_loss(const Eigen::Matrix3Xd &x1,
                         const Eigen::Matrix3Xd &x2,
                         double gamma = kSurfaceGamma,
                         double sigma = kSurfaceSigma);

/// (1/n) sum ||pred_i - truth_i||^2.
ad::Tensor mse_loss(const ad::Tensor &pred, const Eigen::Matrix3Xd &truth);

struct LossWeights {
  double mse = 1.0;
  double ot = 1.0;
  double intersection = 1.0;
  double gamma = kSurfaceGamma;
  double sigma = kSurfaceSigma;
  double pocket_cutoff = kPocketCutoff;
};

void to_json(nlohmann::json &j, const LossWeights &w);
void from_json(const nlohmann::json &j, LossWeights &w);

struct LossTerms {
  ad::Tensor total;
  double mse = 0.0;
  double ot = 0.0;
  double intersection = 0.0;
};

/// Everything the combined loss needs besides the network outputs. Pocket
/// points are expressed in each protein's input frame.
struct LossTargets {
  Eigen::Matrix3Xd ligand_true;  // bound ligand, receptor frame
  Eigen::Matrix3Xd receptor;     // receptor input
  PocketPoints pockets;          // p1: ligand input frame, p2: receptor frame
};

/// Predicted ligand is R x + t applied to `ligand_input`. Terms with zero
/// weight are neither evaluated nor recorded on the tape.
LossTerms total_loss(const ad::Tensor &R, const ad::Tensor &t,
                     const Eigen::Matrix3Xd &ligand_input,
                     const ad::Tensor &ligand_keypoints,
                     const ad::Tensor &receptor_keypoints,
                     const LossTargets &targets, const LossWeights &w);

}  // namespace rigidock

#endif  // RIGIDOCK_LOSSES_HPP_
