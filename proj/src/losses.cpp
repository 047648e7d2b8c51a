// SPDX-License-Identifier: Apache-2.0

#include "rigidock/losses.hpp"

#include <cmath>
#include <vector>

namespace rigidock {

PocketPoints pocket_points(const Eigen::Matrix3Xd &x1,
                           const Eigen::Matrix3Xd &x2, double tau) {
  const double tau2 = tau * tau;
  std::vector<Eigen::Vector3d> mids;
  for (Eigen::Index i = 0; i < x1.cols(); ++i)
    for (Eigen::Index j = 0; j < x2.cols(); ++j)
      if ((x1.col(i) - x2.col(j)).squaredNorm() < tau2)
        mids.push_back(0.5 * (x1.col(i) + x2.col(j)));
  if (mids.empty())
    throw NoContactError("pocket_points: no cross pair closer than "
                         + std::to_string(tau) + " A");
  PocketPoints out;
  out.p1.resize(3, static_cast<Eigen::Index>(mids.size()));
  for (std::size_t s = 0; s < mids.size(); ++s)
    out.p1.col(static_cast<Eigen::Index>(s)) = mids[s];
  out.p2 = out.p1;
  return out;
}

ad::Tensor ot_pocket_loss(const ad::Tensor &y1, const ad::Tensor &y2,
                          const Eigen::Matrix3Xd &p1,
                          const Eigen::Matrix3Xd &p2) {
  if (p1.cols() == 0)
    throw NoContactError("ot_pocket_loss: empty pocket");
  if (p1.cols() != p2.cols() || y1.rows() != 3 || y2.rows() != 3
      || y1.cols() != y2.cols() || y1.cols() < 1)
    throw ShapeError("ot_pocket_loss: expected 3xK keypoints and 3xS "
                     "pockets, got "
                     + y1.shape_str() + ", " + y2.shape_str());
  ad::Tape &tape = y1.tape();
  ad::Tensor cost
      = ad::pairwise_squared_distance(tape.constant(p1), y1)
        + ad::pairwise_squared_distance(tape.constant(p2), y2);  // S x K
  const TransportPlan plan = emd_solve(cost.value());
  return ad::sum(ad::hadamard(tape.constant(plan.plan), cost));
}

double surface_G(const Eigen::Vector3d &x, const Eigen::Matrix3Xd &cloud,
                 double sigma) {
  if (cloud.cols() == 0)
    throw ShapeError("surface_G: empty point cloud");
  const Eigen::ArrayXd e
      = -(cloud.colwise() - x).colwise().squaredNorm().transpose().array()
        / sigma;
  const double m = e.maxCoeff();
  return -sigma * (m + std::log((e - m).exp().sum()));
}

ad::Tensor intersection_loss(const ad::Tensor &x1, const ad::Tensor &x2,
                             double gamma, double sigma) {
  if (x1.rows() != 3 || x2.rows() != 3 || x1.cols() == 0 || x2.cols() == 0)
    throw ShapeError("intersection_loss: expected nonempty 3xn clouds");
  ad::Tensor scaled = (-1.0 / sigma) * ad::pairwise_squared_distance(x1, x2);
  ad::Tensor g2_of_x1 = -sigma * ad::logsumexp_rows(scaled);            // n x 1
  ad::Tensor g1_of_x2
      = -sigma * ad::logsumexp_rows(ad::transpose(scaled));             // m x 1
  return ad::mean(ad::relu(ad::add_scalar(-g2_of_x1, gamma)))
         + ad::mean(ad::relu(ad::add_scalar(-g1_of_x2, gamma)));
}

double intersection_loss(const Eigen::Matrix3Xd &x1,
                         const Eigen::Matrix3Xd &x2, double gamma,
                         double sigma) {
  auto side = [&](const Eigen::Matrix3Xd &pts, const Eigen::Matrix3Xd &cloud) {
    double acc = 0.0;
    for (Eigen::Index i = 0; i < pts.cols(); ++i)
      acc += std::max(0.0, gamma - surface_G(pts.col(i), cloud, sigma));
    return acc / static_cast<double>(pts.cols());
  };
  if (x1.cols() == 0 || x2.cols() == 0)
    throw ShapeError("intersection_loss: expected nonempty clouds");
  return side(x1, x2) + side(x2, x1);
}

ad::Tensor mse_loss(const ad::Tensor &pred, const Eigen::Matrix3Xd &truth) {
  if (pred.rows() != 3 || pred.cols() != truth.cols() || truth.cols() == 0)
    throw ShapeError("mse_loss: prediction " + pred.shape_str()
                     + " does not match ground truth");
  return ad::mean(
      ad::colwise_squared_norm(pred - pred.tape().constant(truth)));
}

void to_json(nlohmann::json &j, const LossWeights &w) {
  j = { { "mse", w.mse },
        { "ot", w.ot },
        { "intersection", w.intersection },
        { "gamma", w.gamma },
        { "sigma", w.sigma },
        { "pocket_cutoff", w.pocket_cutoff } };
}

void from_json(const nlohmann::json &j, LossWeights &w) {
  const LossWeights d;
  w.mse = j.value("mse", d.mse);
  w.ot = j.value("ot", d.ot);
  w.intersection = j.value("intersection", d.intersection);
  w.gamma = j.value("gamma", d.gamma);
  w.sigma = j.value("sigma", d.sigma);
  w.pocket_cutoff = j.value("pocket_cutoff", d.pocket_cutoff);
}

LossTerms total_loss(const ad::Tensor &R, const ad::Tensor &t,
                     const Eigen::Matrix3Xd &ligand_input,
                     const ad::Tensor &ligand_keypoints,
                     const ad::Tensor &receptor_keypoints,
                     const LossTargets &targets, const LossWeights &w) {
  ad::Tape &tape = R.tape();
  ad::Tensor pred
      = ad::add_colwise(ad::matmul(R, tape.constant(ligand_input)), t);
  LossTerms out;
  ad::Tensor total = tape.constant(MatrixXd::Zero(1, 1));
  if (w.mse != 0.0) {
    ad::Tensor l = mse_loss(pred, targets.ligand_true);
    out.mse = l.item();
    total = total + w.mse * l;
  }
  if (w.ot != 0.0) {
    ad::Tensor l = ot_pocket_loss(ligand_keypoints, receptor_keypoints,
                                  targets.pockets.p1, targets.pockets.p2);
    out.ot = l.item();
    total = total + w.ot * l;
  }
  if (w.intersection != 0.0) {
    ad::Tensor l = intersection_loss(pred, tape.constant(targets.receptor),
                                     w.gamma, w.sigma);
    out.intersection = l.item();
    total = total + w.intersection * l;
  }
  out.total = total;
  return out;
}

}  // namespace rigidock
