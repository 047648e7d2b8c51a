// SPDX-License-Identifier: Apache-2.0
//
// Docking-pair datasets on disk and the synthetic pair generator.
//
// Layout:
//   <root>/pairs/<id>/ligand.pdb     unbound ligand
//   <root>/pairs/<id>/receptor.pdb   receptor, defines the complex frame
//   <root>/pairs/<id>/complex.json   {"ligand_to_bound": transform}
//   <root>/splits.json               {"train": [...], "val": [...], "test": [...]}

#ifndef RIGIDOCK_DATASET_HPP_
#define RIGIDOCK_DATASET_HPP_

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "rigidock/geometry.hpp"
#include "rigidock/pdb.hpp"

namespace rigidock {

struct DockingPair {
  std::string id;
  ResidueSet ligand;
  ResidueSet receptor;
  RigidTransformd ligand_to_bound;

  Eigen::Matrix3Xd bound_ligand() const {
    return apply_transform(ligand_to_bound, ligand.ca_coords());
  }
};

struct Splits {
  std::vector<std::string> train, val, test;
};

void to_json(nlohmann::json &j, const Splits &s);
void from_json(const nlohmann::json &j, Splits &s);

/// 20% test and 10% val (at least one each when there are three or more
/// pairs), the rest train. With fewer than three pairs every split gets
/// all of them.
Splits default_splits(const std::vector<std::string> &ids);

Splits read_splits(const std::filesystem::path &root);
DockingPair load_pair(const std::filesystem::path &root, const std::string &id);
std::vector<DockingPair> load_pairs(const std::filesystem::path &root,
                                    const std::vector<std::string> &ids);

/// Writes the pair files and splits.json, each atomically.
void write_dataset(const std::filesystem::path &root,
                   const std::vector<DockingPair> &pairs, const Splits &splits);

struct SyntheticOptions {
  int receptor_min = 30, receptor_max = 80;
  int ligand_min = 20, ligand_max = 40;
  double min_spacing = 3.8;         // A between pseudo-residues
  double volume_per_residue = 120;  // A^3, sets blob size
  int min_contacts = 5;
  double contact_cutoff = 7.9;      // stricter than 8 A to survive rounding
  double max_intersection = 0.05;   // stricter than 0.1 for the same reason
  double labeling_cutoff = 10.0;    // residues typed by interface sector
  int max_tries = 1000;
};

/// Deterministic in (num_pairs, seed, options). Each pair holds a receptor
/// blob, a ligand blob placed against a random surface patch and then moved
/// by a random rigid motion, and the motion's inverse as ground truth.
/// Throws std::runtime_error if placement fails max_tries times.
std::vector<DockingPair> generate_synthetic(int num_pairs, std::uint64_t seed,
                                            const SyntheticOptions &opt = {});

}  // namespace rigidock

#endif  // RIGIDOCK_DATASET_HPP_
