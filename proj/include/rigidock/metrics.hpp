// SPDX-License-Identifier: Apache-2.0
//
// Complex and interface RMSD.

#ifndef RIGIDOCK_METRICS_HPP_
#define RIGIDOCK_METRICS_HPP_

#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace rigidock {

constexpr double kInterfaceCutoff = 8.0;

/// RMSD between two complexes after Kabsch superimposition of the whole
/// complex. Column counts must match.
double crmsd(const Eigen::Matrix3Xd &z_pred, const Eigen::Matrix3Xd &z_true);

/// Residues of each protein with some residue of the other closer than
/// `cutoff`, in index order.
std::pair<std::vector<int>, std::vector<int>>
interface_residues(const Eigen::Matrix3Xd &x1, const Eigen::Matrix3Xd &x2,
                   double cutoff = kInterfaceCutoff);

/// Interface selected on the true complex, then crmsd on those columns.
/// Throws std::invalid_argument when the true interface is empty.
double irmsd(const Eigen::Matrix3Xd &ligand_pred,
             const Eigen::Matrix3Xd &receptor_pred,
             const Eigen::Matrix3Xd &ligand_true,
             const Eigen::Matrix3Xd &receptor_true,
             double cutoff = kInterfaceCutoff);

/// Columns of (a, b) stacked side by side.
Eigen::Matrix3Xd concat_complex(const Eigen::Matrix3Xd &a,
                                const Eigen::Matrix3Xd &b);

double median(std::vector<double> values);

}  // namespace rigidock

#endif  // RIGIDOCK_METRICS_HPP_
