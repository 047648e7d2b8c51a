// SPDX-License-Identifier: Apache-2.0

#include "rigidock/metrics.hpp"

#include <algorithm>
#include <stdexcept>

#include "rigidock/geometry.hpp"

namespace rigidock {

double crmsd(const Eigen::Matrix3Xd &z_pred, const Eigen::Matrix3Xd &z_true) {
  if (z_pred.cols() != z_true.cols())
    throw std::invalid_argument("crmsd: complexes have "
                                + std::to_string(z_pred.cols()) + " and "
                                + std::to_string(z_true.cols()) + " residues");
  return superimposed_rmsd(z_pred, z_true);
}

std::pair<std::vector<int>, std::vector<int>>
interface_residues(const Eigen::Matrix3Xd &x1, const Eigen::Matrix3Xd &x2,
                   double cutoff) {
  const double c2 = cutoff * cutoff;
  std::vector<char> in1(x1.cols(), 0), in2(x2.cols(), 0);
  for (Eigen::Index i = 0; i < x1.cols(); ++i)
    for (Eigen::Index j = 0; j < x2.cols(); ++j)
      if ((x1.col(i) - x2.col(j)).squaredNorm() < c2)
        in1[i] = in2[j] = 1;
  std::pair<std::vector<int>, std::vector<int>> out;
  for (Eigen::Index i = 0; i < x1.cols(); ++i)
    if (in1[i])
      out.first.push_back(static_cast<int>(i));
  for (Eigen::Index j = 0; j < x2.cols(); ++j)
    if (in2[j])
      out.second.push_back(static_cast<int>(j));
  return out;
}

double irmsd(const Eigen::Matrix3Xd &ligand_pred,
             const Eigen::Matrix3Xd &receptor_pred,
             const Eigen::Matrix3Xd &ligand_true,
             const Eigen::Matrix3Xd &receptor_true, double cutoff) {
  if (ligand_pred.cols() != ligand_true.cols()
      || receptor_pred.cols() != receptor_true.cols())
    throw std::invalid_argument("irmsd: predicted and true complexes differ "
                                "in residue counts");
  const auto [lig, rec] = interface_residues(ligand_true, receptor_true, cutoff);
  if (lig.empty())
    throw std::invalid_argument("irmsd: empty interface in the true complex");
  const Eigen::Index n = static_cast<Eigen::Index>(lig.size() + rec.size());
  Eigen::Matrix3Xd pred(3, n), truth(3, n);
  Eigen::Index c = 0;
  for (int i: lig) {
    pred.col(c) = ligand_pred.col(i);
    truth.col(c++) = ligand_true.col(i);
  }
  for (int j: rec) {
    pred.col(c) = receptor_pred.col(j);
    truth.col(c++) = receptor_true.col(j);
  }
  return crmsd(pred, truth);
}

Eigen::Matrix3Xd concat_complex(const Eigen::Matrix3Xd &a,
                                const Eigen::Matrix3Xd &b) {
  Eigen::Matrix3Xd out(3, a.cols() + b.cols());
  out << a, b;
  return out;
}

double median(std::vector<double> values) {
  if (values.empty())
    throw std::invalid_argument("median of an empty set");
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

}  // namespace rigidock
