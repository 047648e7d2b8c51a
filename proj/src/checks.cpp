// SPDX-License-Identifier: Apache-2.0

#include "rigidock/checks.hpp"

#include <algorithm>

#include "rigidock/metrics.hpp"
#include "rigidock/trainer.hpp"

namespace rigidock {

double relative_deviation(const Eigen::MatrixXd &a, const Eigen::MatrixXd &b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw ShapeError("relative_deviation: shape mismatch");
  if (a.size() == 0)
    return 0.0;
  return (a - b).cwiseAbs().maxCoeff() / std::max(1.0, b.cwiseAbs().maxCoeff());
}

double SymmetryReport::max_relative() const {
  return std::max({ coords, features, rotation, translation, swap_rotation,
                    swap_translation });
}

nlohmann::json SymmetryReport::to_json() const {
  return { { "iegmn_coordinates", coords },
           { "iegmn_features", features },
           { "transform_rotation", rotation },
           { "transform_translation", translation },
           { "swap_rotation", swap_rotation },
           { "swap_translation", swap_translation },
           { "complex_rmsd", complex_rmsd },
           { "swap_complex_rmsd", swap_complex_rmsd } };
}

SymmetryReport check_symmetries(const Model &model, const ProteinGraph &ligand,
                                const ProteinGraph &receptor,
                                std::uint64_t seed) {
  Rng rng(seed);
  const RigidTransformd m1 = random_se3(rng), m2 = random_se3(rng);
  const ProteinGraph lig_moved = moved(ligand, m1);
  const ProteinGraph rec_moved = moved(receptor, m2);
  SymmetryReport r;

  {
    ad::Tape tape;
    BoundParams p(tape, model.params, /*trainable=*/false);
    auto [a1, a2] = iegmn_forward(p, model.config, ligand, ligand.x, receptor,
                                  receptor.x);
    auto [b1, b2] = iegmn_forward(p, model.config, lig_moved, lig_moved.x,
                                  rec_moved, rec_moved.x);
    r.coords = std::max(
        relative_deviation(b1.z.value(), apply_transform(m1, a1.z.value())),
        relative_deviation(b2.z.value(), apply_transform(m2, a2.z.value())));
    r.features = std::max(relative_deviation(b1.h.value(), a1.h.value()),
                          relative_deviation(b2.h.value(), a2.h.value()));
  }

  const RigidTransformd base = predict_dock(model, ligand, receptor);
  const RigidTransformd after = predict_dock(model, lig_moved, rec_moved);
  const RigidTransformd expected = m2 * base * m1.inverse();
  r.rotation = relative_deviation(after.R, expected.R);
  r.translation = relative_deviation(after.t, expected.t);
  const Eigen::Matrix3Xd complex_base = concat_complex(
      apply_transform(base, ligand.x), receptor.x);
  r.complex_rmsd = crmsd(
      concat_complex(apply_transform(after, lig_moved.x), rec_moved.x),
      complex_base);

  const RigidTransformd swapped = predict_dock(model, receptor, ligand);
  r.swap_rotation = relative_deviation(swapped.R, base.R.transpose());
  r.swap_translation
      = relative_deviation(swapped.t, -(base.R.transpose() * base.t));
  r.swap_complex_rmsd = crmsd(
      concat_complex(ligand.x, apply_transform(swapped, receptor.x)),
      complex_base);
  return r;
}

}  // namespace rigidock
