// SPDX-License-Identifier: Apache-2.0

#include "rigidock/params.hpp"

#include <bit>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace rigidock {

MatrixXd &ParamStore::add(const std::string &name, MatrixXd value) {
  auto [it, inserted] = values_.emplace(name, std::move(value));
  if (!inserted)
    throw std::invalid_argument("duplicate parameter name: " + name);
  names_.push_back(name);
  return it->second;
}

bool ParamStore::contains(std::string_view name) const {
  return values_.find(name) != values_.end();
}

MatrixXd &ParamStore::at(std::string_view name) {
  auto it = values_.find(name);
  if (it == values_.end())
    throw std::out_of_range("unknown parameter: " + std::string(name));
  return it->second;
}

const MatrixXd &ParamStore::at(std::string_view name) const {
  auto it = values_.find(name);
  if (it == values_.end())
    throw std::out_of_range("unknown parameter: " + std::string(name));
  return it->second;
}

std::size_t ParamStore::num_scalars() const {
  std::size_t n = 0;
  for (const auto &[_, v]: values_)
    n += static_cast<std::size_t>(v.size());
  return n;
}

bool ParamStore::operator==(const ParamStore &other) const {
  if (names_ != other.names_)
    return false;
  for (const auto &name: names_) {
    const MatrixXd &a = at(name), &b = other.at(name);
    if (a.rows() != b.rows() || a.cols() != b.cols())
      return false;
    for (Eigen::Index i = 0; i < a.size(); ++i)
      if (std::bit_cast<std::uint64_t>(a(i)) != std::bit_cast<std::uint64_t>(b(i)))
        return false;
  }
  return true;
}

BoundParams::BoundParams(ad::Tape &tape, const ParamStore &store,
                         bool trainable)
    : tape_(&tape) {
  for (const auto &name: store.names()) {
    const MatrixXd &v = store.at(name);
    bound_.emplace(name, trainable ? tape.variable(v) : tape.constant(v));
  }
}

const ad::Tensor &BoundParams::operator[](std::string_view name) const {
  auto it = bound_.find(name);
  if (it == bound_.end())
    throw std::out_of_range("unknown parameter: " + std::string(name));
  return it->second;
}

std::map<std::string, MatrixXd> BoundParams::gradients() const {
  std::map<std::string, MatrixXd> out;
  for (const auto &[name, t]: bound_) {
    const MatrixXd &g = t.grad();
    out.emplace(name, g.size() == 0 ? MatrixXd::Zero(t.rows(), t.cols()) : g);
  }
  return out;
}

// ---- checkpoint ------------------------------------------------------------

namespace {

void put_f64_le(std::string &out, double x) {
  std::uint64_t bits = std::bit_cast<std::uint64_t>(x);
  for (int i = 0; i < 8; ++i)
    out.push_back(static_cast<char>((bits >> (8 * i)) & 0xff));
}

double get_f64_le(const char *p) {
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i)
    bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(p[i]))
            << (8 * i);
  return std::bit_cast<double>(bits);
}

DecodedCheckpoint decode_body(const nlohmann::json &header,
                              std::string_view payload) {
  const auto &names = header.at("names");
  const auto &shapes = header.at("shapes");
  const auto &offsets = header.at("offsets");
  if (names.size() != shapes.size() || names.size() != offsets.size())
    throw std::runtime_error("checkpoint: header arrays differ in length");

  DecodedCheckpoint out;
  std::size_t used = 0;
  for (std::size_t i = 0; i < names.size(); ++i) {
    const auto rows = shapes[i].at(0).get<Eigen::Index>();
    const auto cols = shapes[i].at(1).get<Eigen::Index>();
    const auto off = offsets[i].get<std::size_t>();
    const std::size_t len = static_cast<std::size_t>(rows * cols) * 8;
    if (rows < 0 || cols < 0 || off + len > payload.size())
      throw std::runtime_error("checkpoint: tensor "
                               + names[i].get<std::string>()
                               + " exceeds payload");
    used += len;
    MatrixXd m(rows, cols);
    const char *p = payload.data() + off;
    for (Eigen::Index r = 0; r < rows; ++r)
      for (Eigen::Index c = 0; c < cols; ++c, p += 8)
        m(r, c) = get_f64_le(p);
    out.params.add(names[i].get<std::string>(), std::move(m));
  }
  if (used != payload.size())
    throw std::runtime_error("checkpoint: payload size does not match header");
  out.metadata = header.value("metadata", nlohmann::json::object());
  return out;
}

}  // namespace

std::string encode_checkpoint(const ParamStore &params,
                              const nlohmann::json &metadata) {
  nlohmann::json header;
  header["format_version"] = kCheckpointFormatVersion;
  header["names"] = params.names();
  auto shapes = nlohmann::json::array();
  auto offsets = nlohmann::json::array();
  std::string payload;
  for (const auto &name: params.names()) {
    const MatrixXd &m = params.at(name);
    shapes.push_back({ m.rows(), m.cols() });
    offsets.push_back(payload.size());
    for (Eigen::Index r = 0; r < m.rows(); ++r)
      for (Eigen::Index c = 0; c < m.cols(); ++c)
        put_f64_le(payload, m(r, c));
  }
  header["shapes"] = std::move(shapes);
  header["offsets"] = std::move(offsets);
  header["metadata"] = metadata.is_null() ? nlohmann::json::object() : metadata;
  std::string out = header.dump();
  out.push_back('\n');
  out += payload;
  return out;
}

DecodedCheckpoint decode_checkpoint(std::string_view bytes) {
  const auto nl = bytes.find('\n');
  if (nl == std::string_view::npos)
    throw std::runtime_error("checkpoint: missing header terminator");
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(bytes.substr(0, nl));
  } catch (const nlohmann::json::exception &e) {
    throw std::runtime_error(std::string("checkpoint: bad header: ") + e.what());
  }
  if (header.value("format_version", -1) != kCheckpointFormatVersion)
    throw std::runtime_error("checkpoint: unsupported format_version");
  const std::string_view payload = bytes.substr(nl + 1);
  try {
    return decode_body(header, payload);
  } catch (const nlohmann::json::exception &e) {
    throw std::runtime_error(std::string("checkpoint: bad header: ") + e.what());
  }
}

void save_checkpoint(const std::filesystem::path &path,
                     const ParamStore &params,
                     const nlohmann::json &metadata) {
  write_file_atomic(path, encode_checkpoint(params, metadata));
}

DecodedCheckpoint load_checkpoint(const std::filesystem::path &path) {
  return decode_checkpoint(read_file(path));
}

void write_file_atomic(const std::filesystem::path &path,
                       std::string_view contents) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os)
      throw std::runtime_error("cannot open for writing: " + tmp.string());
    os.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!os)
      throw std::runtime_error("write failed: " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

std::string read_file(const std::filesystem::path &path) {
  std::ifstream is(path, std::ios::binary);
  if (!is)
    throw std::runtime_error("cannot open: " + path.string());
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

}  // namespace rigidock
