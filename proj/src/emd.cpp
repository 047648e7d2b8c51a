// SPDX-License-Identifier: Apache-2.0

#include "rigidock/emd.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include "rigidock/autodiff.hpp"

namespace rigidock {

namespace {

struct Cell {
  int row;
  int col;
  double flow;
};

// The basis as a tree rooted at row 0. Nodes 0..S-1 are rows, S..S+K-1
// are columns.
struct BasisTree {
  std::vector<int> parent, parent_edge, depth;
  Eigen::VectorXd potential;  // u for rows, v for columns
};

BasisTree root_basis(const std::vector<Cell> &basis, const Eigen::MatrixXd &cost,
                     int num_rows, int num_nodes) {
  std::vector<std::vector<std::pair<int, int>>> adj(num_nodes);
  for (int b = 0; b < static_cast<int>(basis.size()); ++b) {
    const int r = basis[b].row, c = num_rows + basis[b].col;
    adj[r].emplace_back(c, b);
    adj[c].emplace_back(r, b);
  }
  BasisTree t;
  t.parent.assign(num_nodes, -1);
  t.parent_edge.assign(num_nodes, -1);
  t.depth.assign(num_nodes, -1);
  t.potential = Eigen::VectorXd::Zero(num_nodes);
  std::vector<int> queue { 0 };
  t.depth[0] = 0;
  for (std::size_t q = 0; q < queue.size(); ++q) {
    const int x = queue[q];
    for (auto [y, e]: adj[x]) {
      if (t.depth[y] >= 0)
        continue;
      t.depth[y] = t.depth[x] + 1;
      t.parent[y] = x;
      t.parent_edge[y] = e;
      // u_i + v_j = c_ij on basic cells, u_0 = 0.
      t.potential[y] = cost(basis[e].row, basis[e].col) - t.potential[x];
      queue.push_back(y);
    }
  }
  if (static_cast<int>(queue.size()) != num_nodes)
    throw NumericalError("transport_simplex: basis is not a spanning tree");
  return t;
}

// Basis cells on the tree path from `from` to `to`, in order.
std::vector<int> tree_path(const BasisTree &t, int from, int to) {
  std::vector<int> up, down;
  while (from != to) {
    if (t.depth[from] >= t.depth[to]) {
      up.push_back(t.parent_edge[from]);
      from = t.parent[from];
    } else {
      down.push_back(t.parent_edge[to]);
      to = t.parent[to];
    }
  }
  up.insert(up.end(), down.rbegin(), down.rend());
  return up;
}

}  // namespace

TransportPlan transport_simplex(const Eigen::MatrixXd &cost,
                                const Eigen::VectorXd &supply,
                                const Eigen::VectorXd &demand) {
  const int s = static_cast<int>(cost.rows()), k = static_cast<int>(cost.cols());
  if (s < 1 || k < 1)
    throw ShapeError("transport_simplex: empty cost matrix");
  if (supply.size() != s || demand.size() != k)
    throw ShapeError("transport_simplex: marginal sizes differ from cost");
  if (!cost.allFinite())
    throw NumericalError("transport_simplex: non-finite cost");

  // Least-cost start: visit cells by increasing cost and close exactly one
  // exhausted line per allocation, which yields S + K - 1 cells forming a
  // spanning tree. Far fewer pivots follow than from the northwest corner.
  std::vector<Cell> basis;
  {
    std::vector<int> cells(static_cast<std::size_t>(s) * k);
    std::iota(cells.begin(), cells.end(), 0);
    std::stable_sort(cells.begin(), cells.end(), [&](int x, int y) {
      return cost(x / k, x % k) < cost(y / k, y % k);
    });
    Eigen::VectorXd a = supply, b = demand;
    std::vector<char> row_open(s, 1), col_open(k, 1);
    int open_rows = s, open_cols = k;
    for (int cell: cells) {
      const int i = cell / k, j = cell % k;
      if (!row_open[i] || !col_open[j])
        continue;
      const double x = std::max(0.0, std::min(a[i], b[j]));
      basis.push_back({ i, j, x });
      if (open_rows == 1 && open_cols == 1)
        break;
      // Close the row unless it is the last open one.
      if ((a[i] <= b[j] && open_rows > 1) || open_cols == 1) {
        row_open[i] = 0;
        --open_rows;
        b[j] -= x;
        a[i] = 0;
      } else {
        col_open[j] = 0;
        --open_cols;
        a[i] -= x;
        b[j] = 0;
      }
    }
  }

  const double scale = std::max(1.0, cost.cwiseAbs().maxCoeff());
  const double tol = 1e-12 * scale;
  const int num_nodes = s + k;
  std::vector<char> is_basic(static_cast<std::size_t>(s) * k, 0);
  for (const Cell &c: basis)
    is_basic[static_cast<std::size_t>(c.row) * k + c.col] = 1;
  TransportPlan out;

  while (true) {
    const BasisTree tree = root_basis(basis, cost, s, num_nodes);
    const auto u = tree.potential.head(s);
    const auto v = tree.potential.tail(k);

    // Bland: lowest-index improving cell enters.
    int enter_r = -1, enter_c = -1;
    for (int i = 0; i < s && enter_r < 0; ++i)
      for (int j = 0; j < k; ++j) {
        if (is_basic[static_cast<std::size_t>(i) * k + j])
          continue;
        if (cost(i, j) - u[i] - v[j] < -tol) {
          enter_r = i;
          enter_c = j;
          break;
        }
      }
    if (enter_r < 0)
      break;

    // Cycle: entering cell (+), then the tree path from column back to row
    // with alternating signs starting at (-).
    const std::vector<int> path = tree_path(tree, enter_r, s + enter_c);
    const int len = static_cast<int>(path.size());
    double theta = std::numeric_limits<double>::infinity();
    for (int m = len - 1, sign = -1; m >= 0; --m, sign = -sign)
      if (sign < 0)
        theta = std::min(theta, basis[path[m]].flow);
    int leave = -1;
    for (int m = len - 1, sign = -1; m >= 0; --m, sign = -sign) {
      if (sign > 0 || basis[path[m]].flow > theta)
        continue;
      const Cell &c = basis[path[m]];
      if (leave < 0 || c.row < basis[leave].row
          || (c.row == basis[leave].row && c.col < basis[leave].col))
        leave = path[m];
    }
    for (int m = len - 1, sign = -1; m >= 0; --m, sign = -sign) {
      Cell &c = basis[path[m]];
      c.flow = std::max(0.0, c.flow + sign * theta);
    }
    is_basic[static_cast<std::size_t>(basis[leave].row) * k + basis[leave].col]
        = 0;
    is_basic[static_cast<std::size_t>(enter_r) * k + enter_c] = 1;
    basis[leave] = { enter_r, enter_c, theta };
    ++out.iterations;
  }

  out.plan = Eigen::MatrixXd::Zero(s, k);
  for (const Cell &c: basis)
    out.plan(c.row, c.col) = c.flow;
  out.objective = (out.plan.array() * cost.array()).sum();
  return out;
}

TransportPlan emd_solve(const Eigen::MatrixXd &cost) {
  const Eigen::Index s = cost.rows(), k = cost.cols();
  if (s < 1 || k < 1)
    throw ShapeError("emd_solve: empty cost matrix");
  return transport_simplex(cost,
                           Eigen::VectorXd::Constant(s, 1.0 / double(s)),
                           Eigen::VectorXd::Constant(k, 1.0 / double(k)));
}

}  // namespace rigidock
