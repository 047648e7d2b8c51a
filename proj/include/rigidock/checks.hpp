// SPDX-License-Identifier: Apache-2.0
//
// Numerical checks of the model's symmetry guarantees on concrete inputs.

#ifndef RIGIDOCK_CHECKS_HPP_
#define RIGIDOCK_CHECKS_HPP_

#include <cstdint>

#include "json.hpp"
#include "rigidock/docking.hpp"

namespace rigidock {

/// max |a - b| / max(1, max |b|).
double relative_deviation(const Eigen::MatrixXd &a, const Eigen::MatrixXd &b);

/// Relative deviations from exact symmetry for one draw of independent
/// rigid motions (Q1, g1) on the ligand and (Q2, g2) on the receptor.
struct SymmetryReport {
  // Network outputs: Z_l move with (Q_l, g_l), H_l are unchanged.
  double coords = 0, features = 0;
  // R' = Q2 R Q1^T and t' = Q2 t - Q2 R Q1^T g1 + g2.
  double rotation = 0, translation = 0;
  // Swapped roles: R21 = R12^T and t21 = -R12^T t12.
  double swap_rotation = 0, swap_translation = 0;
  // Superimposed RMSD (A) between docked complexes: moved vs original
  // inputs, and swapped vs original roles.
  double complex_rmsd = 0, swap_complex_rmsd = 0;

  /// Largest of the six relative deviations.
  double max_relative() const;
  nlohmann::json to_json() const;
};

SymmetryReport check_symmetries(const Model &model, const ProteinGraph &ligand,
                                const ProteinGraph &receptor,
                                std::uint64_t seed);

}  // namespace rigidock

#endif  // RIGIDOCK_CHECKS_HPP_
