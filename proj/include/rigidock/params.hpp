// SPDX-License-Identifier: Apache-2.0

#ifndef RIGIDOCK_PARAMS_HPP_
#define RIGIDOCK_PARAMS_HPP_

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "rigidock/autodiff.hpp"

namespace rigidock {

/// Named learnable matrices in insertion order.
class ParamStore {
public:
  /// Adds a new entry; throws if the name already exists.
  MatrixXd &add(const std::string &name, MatrixXd value);

  bool contains(std::string_view name) const;
  MatrixXd &at(std::string_view name);
  const MatrixXd &at(std::string_view name) const;

  const std::vector<std::string> &names() const { return names_; }
  std::size_t size() const { return names_.size(); }
  std::size_t num_scalars() const;

  bool operator==(const ParamStore &other) const;

private:
  std::vector<std::string> names_;
  std::map<std::string, MatrixXd, std::less<>> values_;
};

/// ParamStore entries bound to one tape for a forward pass.
class BoundParams {
public:
  /// With `trainable` false the entries become constants and the forward
  /// pass records no operations.
  BoundParams(ad::Tape &tape, const ParamStore &store, bool trainable);

  const ad::Tensor &operator[](std::string_view name) const;
  ad::Tape &tape() const { return *tape_; }

  /// Copies gradients after backward into a store-shaped map; entries never
  /// reached get zeros.
  std::map<std::string, MatrixXd> gradients() const;

private:
  ad::Tape *tape_;
  std::map<std::string, ad::Tensor, std::less<>> bound_;
};

// ---- named-tensor checkpoint -----------------------------------------------
//
// Layout: one line of compact JSON
//   {"format_version":1,"names":[...],"shapes":[[r,c],...],
//    "offsets":[...],"metadata":{...}}
// terminated by '\n', followed by the payload: each tensor row-major as
// little-endian IEEE-754 binary64. Offsets are byte offsets into the payload.

constexpr int kCheckpointFormatVersion = 1;

std::string encode_checkpoint(const ParamStore &params,
                              const nlohmann::json &metadata = {});

struct DecodedCheckpoint {
  ParamStore params;
  nlohmann::json metadata;
};

/// Throws std::runtime_error on malformed input.
DecodedCheckpoint decode_checkpoint(std::string_view bytes);

void save_checkpoint(const std::filesystem::path &path,
                     const ParamStore &params,
                     const nlohmann::json &metadata = {});
DecodedCheckpoint load_checkpoint(const std::filesystem::path &path);

/// Writes to a sibling temporary file and renames it over `path`.
void write_file_atomic(const std::filesystem::path &path,
                       std::string_view contents);
std::string read_file(const std::filesystem::path &path);

}  // namespace rigidock

#endif  // RIGIDOCK_PARAMS_HPP_
