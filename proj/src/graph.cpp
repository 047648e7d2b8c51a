// SPDX-License-Identifier: Apache-2.0

#include "rigidock/graph.hpp"

#include "rigidock/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace rigidock {

std::vector<LocalFrame<double>> local_frames(const ResidueSet &rs) {
  std::vector<LocalFrame<double>> frames(rs.size());
  for (std::size_t i = 0; i < rs.size(); ++i) {
    const Residue &r = rs.residues[i];
    if (!make_local_frame<double>(r.ca, r.n, r.c, frames[i]))
      throw DegenerateConfigurationError("collinear backbone at residue "
                                  + std::to_string(i) + " (" + r.name + " "
                                  + std::string(1, r.chain) + r.seq_id + ")");
  }
  return frames;
}

std::vector<std::vector<int>> knn_neighbors(const Eigen::Matrix3Xd &x, int k) {
  const int n = static_cast<int>(x.cols());
  std::vector<std::vector<int>> out(n);
  std::vector<int> idx;
  std::vector<double> d2(n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j)
      d2[j] = (x.col(j) - x.col(i)).squaredNorm();
    idx.clear();
    for (int j = 0; j < n; ++j)
      if (j != i)
        idx.push_back(j);
    const int take = std::min<int>(k, static_cast<int>(idx.size()));
    std::stable_sort(idx.begin(), idx.end(),
                     [&d2](int a, int b) { return d2[a] < d2[b]; });
    // Distances equal up to rounding noise are ties: without this, a rigid
    // motion of a symmetric structure could reorder them.
    for (std::size_t g = 0; g < idx.size();) {
      const double limit = d2[idx[g]] * (1 + kTieTolerance) + kTieTolerance;
      std::size_t end = g + 1;
      while (end < idx.size() && d2[idx[end]] <= limit)
        ++end;
      std::sort(idx.begin() + static_cast<std::ptrdiff_t>(g),
                idx.begin() + static_cast<std::ptrdiff_t>(end));
      g = end;
    }
    out[i].assign(idx.begin(), idx.begin() + take);
  }
  return out;
}

Eigen::MatrixXd surface_features(const Eigen::Matrix3Xd &x,
                                 const std::vector<std::vector<int>> &neighbors,
                                 std::span<const double> lambdas) {
  const Eigen::Index n = x.cols();
  if (static_cast<Eigen::Index>(neighbors.size()) != n)
    throw std::invalid_argument("surface_features: adjacency size mismatch");
  Eigen::MatrixXd rho(static_cast<Eigen::Index>(lambdas.size()), n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto &nb = neighbors[i];
    if (nb.empty())
      throw std::invalid_argument("surface_features: node "
                                  + std::to_string(i) + " has no neighbors");
    Eigen::Matrix3Xd diff(3, static_cast<Eigen::Index>(nb.size()));
    for (std::size_t e = 0; e < nb.size(); ++e)
      diff.col(static_cast<Eigen::Index>(e)) = x.col(i) - x.col(nb[e]);
    const Eigen::RowVectorXd d2 = diff.colwise().squaredNorm();
    const Eigen::RowVectorXd dist = d2.array().sqrt();
    const double d2min = d2.minCoeff();
    for (std::size_t l = 0; l < lambdas.size(); ++l) {
      // Normalization of w cancels between numerator and denominator.
      const Eigen::RowVectorXd w
          = (-(d2.array() - d2min) / lambdas[l]).exp();
      const double num = (diff.array().rowwise() * w.array()).rowwise().sum()
                             .matrix()
                             .norm();
      const double den = w.dot(dist);
      rho(static_cast<Eigen::Index>(l), i) = den > 0 ? num / den : 0.0;
    }
  }
  return rho;
}

std::array<double, kNumRbf> rbf_scales() {
  std::array<double, kNumRbf> s {};
  for (int r = 0; r < kNumRbf; ++r)
    s[r] = std::pow(1.5, r);
  return s;
}

Eigen::Matrix<double, kEdgeFeatureDim, 1>
edge_features(const Eigen::Vector3d &xi, const LocalFrame<double> &fi,
              const Eigen::Vector3d &xj, const LocalFrame<double> &fj) {
  static const std::array<double, kNumRbf> scales = rbf_scales();
  const Eigen::Matrix3d b = fi.basis();
  Eigen::Matrix<double, kEdgeFeatureDim, 1> f;
  f.segment<3>(0) = b * (xj - xi);
  f.segment<3>(3) = b * fj.n;
  f.segment<3>(6) = b * fj.u;
  f.segment<3>(9) = b * fj.v;
  const double d2 = (xj - xi).squaredNorm();
  for (int r = 0; r < kNumRbf; ++r)
    f[12 + r] = std::exp(-d2 / (2 * scales[r] * scales[r]));
  return f;
}

ProteinGraph build_graph(const ResidueSet &rs, int k) {
  const int n = static_cast<int>(rs.size());
  if (n < 2)
    throw std::invalid_argument("build_graph: need at least 2 residues, got "
                                + std::to_string(n));
  if (k < 1)
    throw std::invalid_argument("build_graph: k must be positive");
  k = std::min(k, n - 1);

  const std::vector<LocalFrame<double>> frames = local_frames(rs);
  ProteinGraph g;
  g.k = k;
  g.x = rs.ca_coords();
  g.residue_types.reserve(n);
  for (const Residue &r: rs.residues)
    g.residue_types.push_back(r.type);

  const auto nb = knn_neighbors(g.x, k);
  g.surface = surface_features(g.x, nb);
  g.edge_feats.resize(kEdgeFeatureDim, static_cast<Eigen::Index>(n) * k);
  Eigen::Index e = 0;
  for (int i = 0; i < n; ++i) {
    for (int j: nb[i]) {
      g.src.push_back(j);
      g.dst.push_back(i);
      g.edge_feats.col(e++)
          = edge_features(g.x.col(i), frames[i], g.x.col(j), frames[j]);
    }
  }
  return g;
}

}  // namespace rigidock
