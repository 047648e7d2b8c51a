// SPDX-License-Identifier: Apache-2.0

#include "rigidock/docking.hpp"

#include <cmath>
#include <stdexcept>

#include "rigidock/svd3.hpp"

namespace rigidock {

Model Model::initialize(const ModelConfig &cfg, std::uint64_t seed) {
  return { cfg, init_params(cfg, seed) };
}

Model Model::load(const std::filesystem::path &path) {
  DecodedCheckpoint ck = load_checkpoint(path);
  Model m;
  m.config = ck.metadata.value("model", nlohmann::json::object())
                 .get<ModelConfig>();
  m.config.validate();
  // Shape check against a freshly allocated layout.
  const ParamStore layout = init_params(m.config, 0);
  for (const auto &name: layout.names()) {
    if (!ck.params.contains(name))
      throw std::runtime_error("checkpoint is missing parameter " + name);
    const MatrixXd &a = ck.params.at(name), &b = layout.at(name);
    if (a.rows() != b.rows() || a.cols() != b.cols())
      throw std::runtime_error("checkpoint parameter " + name
                               + " has the wrong shape");
  }
  m.params = std::move(ck.params);
  return m;
}

void Model::save(const std::filesystem::path &path,
                 const nlohmann::json &extra) const {
  nlohmann::json meta = extra.is_object() ? extra : nlohmann::json::object();
  meta["model"] = config;
  save_checkpoint(path, params, meta);
}

KeypointSet keypoints(const BoundParams &p, const ModelConfig &cfg,
                      const ad::Tensor &z, const ad::Tensor &h,
                      const ad::Tensor &h_other) {
  const Eigen::Index d = cfg.hidden_dim, k = cfg.num_heads;
  if (k < 1)
    throw std::invalid_argument("keypoints: need at least one head");
  if (h.rows() != d || h_other.rows() != d || z.cols() != h.cols())
    throw ShapeError("keypoints: expected d x n features matching 3 x n "
                     "coordinates, got "
                     + z.shape_str() + ", " + h.shape_str());
  ad::Tensor phi = ad::leaky_relu(
      ad::add_colwise(ad::matmul(p["keypoint.phi.w"], h_other),
                      p["keypoint.phi.b"]),
      cfg.leaky_slope);
  ad::Tensor context = ad::rowwise_mean(phi);                     // d x 1
  ad::Tensor queries = ad::reshape(
      ad::matmul(p["keypoint.heads"], context), d, k);            // d x K
  ad::Tensor logits = (1.0 / std::sqrt(static_cast<double>(d)))
                      * ad::matmul(ad::transpose(queries), h);    // K x n
  KeypointSet out;
  out.attention = ad::softmax_rows(logits);
  out.y = ad::matmul(z, ad::transpose(out.attention));            // 3 x K
  return out;
}

TransformTensors kabsch(const ad::Tensor &y1, const ad::Tensor &y2) {
  if (y1.rows() != 3 || y2.rows() != 3 || y1.cols() != y2.cols())
    throw ShapeError("kabsch: expected two 3xK tensors, got "
                     + y1.shape_str() + " and " + y2.shape_str());
  ad::Tape &tape = y1.tape();
  ad::Tensor m1 = ad::rowwise_mean(y1);
  ad::Tensor m2 = ad::rowwise_mean(y2);
  ad::Tensor c1 = ad::add_colwise(y1, -m1);
  ad::Tensor c2 = ad::add_colwise(y2, -m2);
  ad::Tensor a = ad::matmul(c2, ad::transpose(c1));
  const Svd3Tensors svd = svd3(a);
  const Eigen::Vector3d s = svd.S.value();
  if (!(s[1] > kKabschRankTolerance * s[0]))
    throw DegenerateConfigurationError(
        "kabsch: keypoint cross-covariance has rank <= 1");
  const double det = (svd.U.value() * svd.V.value().transpose()).determinant();
  Eigen::Matrix3d diag = Eigen::Matrix3d::Identity();
  diag(2, 2) = det < 0 ? -1.0 : 1.0;
  TransformTensors out;
  out.R = ad::matmul(ad::matmul(svd.U, tape.constant(diag)),
                     ad::transpose(svd.V));
  out.t = m2 - ad::matmul(out.R, m1);
  return out;
}

RigidTransformd to_rigid(const TransformTensors &t) {
  RigidTransformd out;
  out.R = t.R.value();
  out.t = t.t.value();
  return out;
}

DockForward dock_forward(const BoundParams &p, const ModelConfig &cfg,
                         const ProteinGraph &ligand,
                         const ProteinGraph &receptor) {
  ad::Tape &tape = p.tape();
  const Eigen::Vector3d c1 = ligand.x.rowwise().mean();
  const Eigen::Vector3d c2 = receptor.x.rowwise().mean();
  const Eigen::Matrix3Xd x1 = ligand.x.colwise() - c1;
  const Eigen::Matrix3Xd x2 = receptor.x.colwise() - c2;

  auto [s1, s2] = iegmn_forward(p, cfg, ligand, x1, receptor, x2);
  KeypointSet k1 = keypoints(p, cfg, s1.z, s1.h, s2.h);
  KeypointSet k2 = keypoints(p, cfg, s2.z, s2.h, s1.h);
  const TransformTensors centered = kabsch(k1.y, k2.y);

  DockForward out;
  out.transform.R = centered.R;
  // R (x - c1) + t_c + c2 = R x + (t_c + c2 - R c1)
  out.transform.t = (centered.t + tape.constant(c2))
                    - ad::matmul(centered.R, tape.constant(c1));
  out.ligand_keypoints = { ad::add_colwise(k1.y, tape.constant(c1)),
                           k1.attention };
  out.receptor_keypoints = { ad::add_colwise(k2.y, tape.constant(c2)),
                             k2.attention };
  out.ligand_state = s1;
  out.receptor_state = s2;
  return out;
}

RigidTransformd predict_dock(const Model &model, const ProteinGraph &ligand,
                             const ProteinGraph &receptor) {
  ad::Tape tape;
  BoundParams p(tape, model.params, /*trainable=*/false);
  return to_rigid(dock_forward(p, model.config, ligand, receptor).transform);
}

nlohmann::json transform_to_json(const RigidTransformd &t) {
  nlohmann::json r = nlohmann::json::array();
  for (int i = 0; i < 3; ++i)
    r.push_back({ t.R(i, 0), t.R(i, 1), t.R(i, 2) });
  return { { "R", r },
           { "t", { t.t[0], t.t[1], t.t[2] } },
           { "convention", "y = R x + t, Å" } };
}

RigidTransformd transform_from_json(const nlohmann::json &j) {
  RigidTransformd out;
  const auto &r = j.at("R");
  const auto &t = j.at("t");
  if (r.size() != 3 || t.size() != 3)
    throw std::runtime_error("transform JSON: R must be 3x3 and t length 3");
  for (int i = 0; i < 3; ++i) {
    if (r[i].size() != 3)
      throw std::runtime_error("transform JSON: R must be 3x3");
    for (int k = 0; k < 3; ++k)
      out.R(i, k) = r[i][k].get<double>();
    out.t[i] = t[i].get<double>();
  }
  return out;
}

}  // namespace rigidock
