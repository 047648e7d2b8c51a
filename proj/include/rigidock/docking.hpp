// SPDX-License-Identifier: Apache-2.0
//
// Attention keypoints, differentiable Kabsch and the end-to-end docking
// prediction.

#ifndef RIGIDOCK_DOCKING_HPP_
#define RIGIDOCK_DOCKING_HPP_

#include <cstdint>
#include <filesystem>

#include "json.hpp"
#include "rigidock/autodiff.hpp"
#include "rigidock/geometry.hpp"
#include "rigidock/graph.hpp"
#include "rigidock/iegmn.hpp"
#include "rigidock/params.hpp"

namespace rigidock {

/// Configuration plus weights.
struct Model {
  ModelConfig config;
  ParamStore params;

  static Model initialize(const ModelConfig &cfg, std::uint64_t seed);
  static Model load(const std::filesystem::path &path);
  void save(const std::filesystem::path &path,
            const nlohmann::json &extra = {}) const;
};

struct KeypointSet {
  ad::Tensor y;          // 3 x K
  ad::Tensor attention;  // K x n, rows sum to one
};

/// y_k = sum_i alpha_i^k z_i with
/// alpha^k = softmax_i(h_i^T W'_k mean(phi(H_other)) / sqrt(d)).
KeypointSet keypoints(const BoundParams &p, const ModelConfig &cfg,
                      const ad::Tensor &z, const ad::Tensor &h,
                      const ad::Tensor &h_other);

struct TransformTensors {
  ad::Tensor R;  // 3 x 3
  ad::Tensor t;  // 3 x 1
};

/// Differentiable Kabsch mapping y1 onto y2. Throws
/// DegenerateConfigurationError when the second singular value of the
/// cross-covariance is below kKabschRankTolerance times the first.
TransformTensors kabsch(const ad::Tensor &y1, const ad::Tensor &y2);

RigidTransformd to_rigid(const TransformTensors &t);

struct DockForward {
  TransformTensors transform;  // applies to the raw ligand coordinates
  KeypointSet ligand_keypoints;     // in raw ligand coordinates
  KeypointSet receptor_keypoints;   // in raw receptor coordinates
  GraphState ligand_state, receptor_state;  // centered frames
};

/// Full forward pass. Both inputs are shifted to zero mean before the
/// network and the shifts are folded back into t and the keypoints.
DockForward dock_forward(const BoundParams &p, const ModelConfig &cfg,
                         const ProteinGraph &ligand,
                         const ProteinGraph &receptor);

/// Inference: returns (R, t) so that R X_ligand + t is the docked ligand.
RigidTransformd predict_dock(const Model &model, const ProteinGraph &ligand,
                             const ProteinGraph &receptor);

/// Transform JSON: {"R": [[...]], "t": [...], "convention": ...}.
nlohmann::json transform_to_json(const RigidTransformd &t);
RigidTransformd transform_from_json(const nlohmann::json &j);

}  // namespace rigidock

#endif  // RIGIDOCK_DOCKING_HPP_
