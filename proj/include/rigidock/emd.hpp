// SPDX-License-Identifier: Apache-2.0
//
// Exact earth mover's distance via the transportation simplex.

#ifndef RIGIDOCK_EMD_HPP_
#define RIGIDOCK_EMD_HPP_

#include <Eigen/Dense>

namespace rigidock {

struct TransportPlan {
  Eigen::MatrixXd plan;  // S x K, nonnegative
  double objective = 0.0;
  int iterations = 0;
};

/// min <T, C> over plans with row sums `supply` and column sums `demand`.
/// Both marginals must be positive and sum to the same total. Starts from a
/// least-cost basis and pivots with Bland's rule, so the result is a vertex
/// of the transport polytope. Throws NumericalError for non-finite
/// costs.
TransportPlan transport_simplex(const Eigen::MatrixXd &cost,
                                const Eigen::VectorXd &supply,
                                const Eigen::VectorXd &demand);

/// Uniform marginals 1/S and 1/K.
TransportPlan emd_solve(const Eigen::MatrixXd &cost);

}  // namespace rigidock

#endif  // RIGIDOCK_EMD_HPP_
