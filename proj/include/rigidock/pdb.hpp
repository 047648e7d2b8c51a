// SPDX-License-Identifier: Apache-2.0
//
// Residue-level PDB ingestion. Only ATOM/HETATM fixed-column records of the
// first model are read; each residue keeps its alpha carbon, amide nitrogen
// and carbonyl carbon.

#ifndef RIGIDOCK_PDB_HPP_
#define RIGIDOCK_PDB_HPP_

#include <array>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace rigidock {

constexpr int kNumResidueTypes = 21;  // 20 standard + UNK
constexpr int kUnknownResidue = 20;

/// Three-letter code for a residue type index; "UNK" for kUnknownResidue.
std::string_view residue_name(int type);
/// Type index for a three-letter code; kUnknownResidue if non-standard.
int residue_type(std::string_view name);

struct Residue {
  std::string name;    // as written in the file, columns 18-20
  int type = kUnknownResidue;
  char chain = ' ';
  std::string seq_id;  // columns 23-27 (sequence number + insertion code)
  Eigen::Vector3d ca, n, c;
};

struct AtomRecord {
  std::string line;    // original record text
  Eigen::Vector3d xyz;
};

struct ResidueSet {
  std::vector<Residue> residues;
  /// Every ATOM/HETATM record that passed the chain filter, in file order.
  std::vector<AtomRecord> atoms;
  /// Residues dropped because a backbone atom was missing.
  int skipped = 0;

  std::size_t size() const { return residues.size(); }
  Eigen::Matrix3Xd ca_coords() const;
};

class PdbParseError: public std::runtime_error {
public:
  PdbParseError(const std::string &msg, int line, int skipped)
      : std::runtime_error(msg), line_(line), skipped_(skipped) { }
  /// 1-based line number, or 0 when not tied to a line.
  int line() const { return line_; }
  int skipped() const { return skipped_; }

private:
  int line_;
  int skipped_;
};

/// `chains`: when set, only records whose chain id appears in the string
/// are kept. All kept chains are merged into one residue set.
ResidueSet parse_pdb(std::istream &in,
                     const std::optional<std::string> &chains = std::nullopt);
ResidueSet parse_pdb(std::string_view text,
                     const std::optional<std::string> &chains = std::nullopt);
ResidueSet read_pdb(const std::filesystem::path &path,
                    const std::optional<std::string> &chains = std::nullopt);

/// CA-only records with the residues' original names, chains and numbering,
/// placed at `ca` (3 x n).
std::string format_ca_pdb(const ResidueSet &rs, const Eigen::Matrix3Xd &ca);
/// N, CA, C records per residue at the stored coordinates.
std::string format_backbone_pdb(const ResidueSet &rs);
/// All stored atom records with coordinates mapped through x -> R x + t.
std::string format_transformed_atoms(const ResidueSet &rs,
                                     const Eigen::Matrix3d &r,
                                     const Eigen::Vector3d &t);

}  // namespace rigidock

#endif  // RIGIDOCK_PDB_HPP_
