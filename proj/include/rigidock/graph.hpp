// SPDX-License-Identifier: Apache-2.0
//
// k-NN residue graphs with rigid-motion invariant node and edge features.

#ifndef RIGIDOCK_GRAPH_HPP_
#define RIGIDOCK_GRAPH_HPP_

#include <array>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "rigidock/pdb.hpp"

namespace rigidock {

constexpr int kDefaultNeighbors = 10;
constexpr int kNumRbf = 15;
constexpr int kEdgeFeatureDim = 3 + 9 + kNumRbf;  // 27
constexpr std::array<double, 5> kSurfaceLambdas { 1.0, 2.0, 5.0, 10.0, 30.0 };
constexpr int kNumSurfaceFeatures = static_cast<int>(kSurfaceLambdas.size());

using EdgeFeatures = Eigen::Matrix<double, kEdgeFeatureDim, Eigen::Dynamic>;

/// Orthonormal residue basis. Rows of basis() are (n, u, v).
template <class Scalar>
struct LocalFrame {
  Eigen::Matrix<Scalar, 3, 1> n, u, v;

  Eigen::Matrix<Scalar, 3, 3> basis() const {
    Eigen::Matrix<Scalar, 3, 3> b;
    b.row(0) = n.transpose();
    b.row(1) = u.transpose();
    b.row(2) = v.transpose();
    return b;
  }
};

constexpr double kCollinearTolerance = 1e-6;

/// u = unit(N - CA), t = unit(C - CA), n = unit(u x t), v = n x u.
/// Returns false when ||u x t|| <= kCollinearTolerance.
template <class Scalar>
bool make_local_frame(const Eigen::Matrix<Scalar, 3, 1> &ca,
                      const Eigen::Matrix<Scalar, 3, 1> &n_atom,
                      const Eigen::Matrix<Scalar, 3, 1> &c_atom,
                      LocalFrame<Scalar> &out) {
  const Eigen::Matrix<Scalar, 3, 1> to_n = n_atom - ca, to_c = c_atom - ca;
  if (to_n.norm() == Scalar(0) || to_c.norm() == Scalar(0))
    return false;
  const Eigen::Matrix<Scalar, 3, 1> u = to_n.normalized();
  const Eigen::Matrix<Scalar, 3, 1> t = to_c.normalized();
  const Eigen::Matrix<Scalar, 3, 1> cross = u.cross(t);
  if (cross.norm() <= Scalar(kCollinearTolerance))
    return false;
  out.u = u;
  out.n = cross.normalized();
  out.v = out.n.cross(u);
  return true;
}

/// Throws DegenerateConfigurationError naming the first collinear residue.
std::vector<LocalFrame<double>> local_frames(const ResidueSet &rs);

/// Relative tolerance on squared distances below which neighbors tie.
constexpr double kTieTolerance = 1e-9;

/// Incoming neighbor lists: neighbors[i] holds the k nearest residues of i
/// (by Euclidean distance, ties to the lower index), nearest first.
std::vector<std::vector<int>> knn_neighbors(const Eigen::Matrix3Xd &x, int k);

/// rho_i(lambda) for each lambda; result is lambdas.size() x n, one column
/// per node. Every node needs at least one neighbor.
Eigen::MatrixXd surface_features(const Eigen::Matrix3Xd &x,
                                 const std::vector<std::vector<int>> &neighbors,
                                 std::span<const double> lambdas
                                 = kSurfaceLambdas);

/// RBF scales 1.5^r, r = 0..14.
std::array<double, kNumRbf> rbf_scales();

/// 27 features of edge j -> i: relative position (3), relative orientation
/// of n_j, u_j, v_j (3 each), then RBF distance encodings (15).
Eigen::Matrix<double, kEdgeFeatureDim, 1>
edge_features(const Eigen::Vector3d &xi, const LocalFrame<double> &fi,
              const Eigen::Vector3d &xj, const LocalFrame<double> &fj);

struct ProteinGraph {
  Eigen::Matrix3Xd x;                 // CA coordinates, 3 x n
  std::vector<int> residue_types;     // n
  Eigen::MatrixXd surface;            // kNumSurfaceFeatures x n
  std::vector<int> src, dst;          // edge e is src[e] -> dst[e]
  EdgeFeatures edge_feats;            // 27 x E
  int k = kDefaultNeighbors;          // effective degree

  Eigen::Index num_nodes() const { return x.cols(); }
  std::size_t num_edges() const { return src.size(); }
};

/// Edges are grouped by destination in node order. If the set has fewer
/// than k + 1 residues, k becomes n - 1. Throws for n < 2.
ProteinGraph build_graph(const ResidueSet &rs, int k = kDefaultNeighbors);

}  // namespace rigidock

#endif  // RIGIDOCK_GRAPH_HPP_
