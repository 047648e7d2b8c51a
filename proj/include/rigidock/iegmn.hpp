// SPDX-License-Identifier: Apache-2.0
//
// Independent E(3)-equivariant graph matching layers.
//
// Each layer updates, for both graphs at once,
//   m_ji  = phi_e(h_i, h_j, exp(-|x_i - x_j|^2 / sigma), f_ji)   (intra edges)
//   a_ji  = softmax_j <psi_q(h_i), psi_k(h_j)>                   (cross pairs)
//   mu_i  = sum_j a_ji W h_j
//   m_i   = mean_j m_ji
//   x_i' = eta x_i^0 + (1 - eta) x_i + sum_j (x_i - x_j) phi_x(m_ji)
//   h_i' = (1 - beta) h_i + beta phi_h(h_i, m_i, mu_i, f_i)
// Cross-graph terms only read feature embeddings, so each graph's
// coordinates transform independently of the other's.

#ifndef RIGIDOCK_IEGMN_HPP_
#define RIGIDOCK_IEGMN_HPP_

#include <cstdint>
#include <string>
#include <utility>

#include "json.hpp"
#include "rigidock/autodiff.hpp"
#include "rigidock/graph.hpp"
#include "rigidock/params.hpp"

namespace rigidock {

struct ModelConfig {
  int hidden_dim = 32;
  int residue_embed_dim = 32;
  int num_layers = 5;
  bool share_layers = false;  // layers 2..L reuse one parameter set
  double leaky_slope = 0.01;
  double eta = 0.25;          // coordinate skip weight
  double beta = 0.5;          // feature skip weight
  double sigma_msg = 30.0;    // A^2, distance kernel in messages
  bool layer_norm_h = true;
  bool mean_coordinate_update = false;
  int num_heads = 50;         // keypoints K
  int num_neighbors = kDefaultNeighbors;
  /// Negative control only: feeds cross-graph squared distances into the
  /// attention logits, which breaks pairwise independence.
  bool cross_coordinate_leak = false;

  /// Throws std::invalid_argument on out-of-range values.
  void validate() const;
  int node_feature_dim() const { return residue_embed_dim + kNumSurfaceFeatures; }
};

void to_json(nlohmann::json &j, const ModelConfig &c);
void from_json(const nlohmann::json &j, ModelConfig &c);

/// Parameter prefix of layer l (0-based), honoring share_layers.
std::string layer_prefix(const ModelConfig &cfg, int layer);

/// Allocates and initializes every IEGMN and keypoint-head parameter.
/// The last layer of phi_x starts at zero.
ParamStore init_params(const ModelConfig &cfg, std::uint64_t seed);

/// Adds N(0, stddev^2) noise to every entry. Used to move a fresh model
/// away from its zero-initialized coordinate heads before symmetry checks.
void jitter_params(ParamStore &params, std::uint64_t seed, double stddev);

struct GraphState {
  ad::Tensor z;  // 3 x n coordinate embeddings
  ad::Tensor h;  // d x n feature embeddings
};

/// Per-graph inputs that stay fixed across layers.
struct GraphContext {
  const ProteinGraph *graph = nullptr;
  ad::Tensor x0;          // 3 x n input coordinates
  ad::Tensor node_feats;  // (embed + 5) x n
  ad::Tensor edge_feats;  // 27 x E
};

GraphContext make_context(const BoundParams &p, const ModelConfig &cfg,
                          const ProteinGraph &g, const Eigen::Matrix3Xd &x);

/// Initial state: z = x0, h = W_in f + b_in.
GraphState initial_state(const BoundParams &p, const ModelConfig &cfg,
                         const GraphContext &c);

std::pair<GraphState, GraphState>
layer_forward(const BoundParams &p, const ModelConfig &cfg,
              const std::string &prefix, const GraphContext &c1,
              const GraphState &s1, const GraphContext &c2,
              const GraphState &s2);

/// Cross-graph attention a (n1 x n2, rows sum to one) used by a layer.
ad::Tensor cross_attention(const BoundParams &p, const std::string &prefix,
                           const ad::Tensor &h_query, const ad::Tensor &h_key);

/// Runs all layers on input coordinates x1 / x2 (defaults to graph.x).
std::pair<GraphState, GraphState>
iegmn_forward(const BoundParams &p, const ModelConfig &cfg,
              const ProteinGraph &g1, const Eigen::Matrix3Xd &x1,
              const ProteinGraph &g2, const Eigen::Matrix3Xd &x2);

}  // namespace rigidock

#endif  // RIGIDOCK_IEGMN_HPP_
