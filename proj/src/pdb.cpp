// SPDX-License-Identifier: Apache-2.0

#include "rigidock/pdb.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <istream>
#include <sstream>

namespace rigidock {

namespace {

constexpr std::array<std::string_view, kNumResidueTypes> kResidueNames {
  "ALA", "ARG", "ASN", "ASP", "CYS", "GLN", "GLU", "GLY", "HIS", "ILE", "LEU",
  "LYS", "MET", "PHE", "PRO", "SER", "THR", "TRP", "TYR", "VAL", "UNK",
};

std::string_view trim(std::string_view s) {
  while (!s.empty() && s.front() == ' ')
    s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\r'))
    s.remove_suffix(1);
  return s;
}

// Columns are 1-based and inclusive, as in the format description.
std::string_view columns(std::string_view line, std::size_t first,
                         std::size_t last) {
  if (line.size() < first)
    return {};
  return line.substr(first - 1, std::min(last, line.size()) - first + 1);
}

bool parse_double(std::string_view field, double &out) {
  field = trim(field);
  if (field.empty())
    return false;
  if (field.front() == '+')
    field.remove_prefix(1);
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(),
                                   out);
  return ec == std::errc() && ptr == field.data() + field.size();
}

bool is_water(std::string_view name) {
  return name == "HOH" || name == "WAT" || name == "DOD";
}

struct PendingResidue {
  std::string key;
  Residue res;
  bool has_ca = false, has_n = false, has_c = false;
};

}  // namespace

std::string_view residue_name(int type) {
  if (type < 0 || type >= kNumResidueTypes)
    return kResidueNames[kUnknownResidue];
  return kResidueNames[type];
}

int residue_type(std::string_view name) {
  for (int i = 0; i < kUnknownResidue; ++i)
    if (kResidueNames[i] == name)
      return i;
  return kUnknownResidue;
}

Eigen::Matrix3Xd ResidueSet::ca_coords() const {
  Eigen::Matrix3Xd x(3, static_cast<Eigen::Index>(residues.size()));
  for (std::size_t i = 0; i < residues.size(); ++i)
    x.col(static_cast<Eigen::Index>(i)) = residues[i].ca;
  return x;
}

ResidueSet parse_pdb(std::istream &in,
                     const std::optional<std::string> &chains) {
  ResidueSet out;
  std::optional<PendingResidue> cur;

  auto flush = [&]() {
    if (!cur)
      return;
    if (cur->has_ca && cur->has_n && cur->has_c)
      out.residues.push_back(std::move(cur->res));
    else if (!is_water(cur->res.name))
      ++out.skipped;
    cur.reset();
  };

  std::string raw;
  int lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    std::string_view line = raw;
    if (!line.empty() && line.back() == '\r')
      line.remove_suffix(1);
    const std::string_view record = columns(line, 1, 6);
    if (record.starts_with("ENDMDL"))
      break;
    const bool atom = record == "ATOM  " || record.starts_with("ATOM ")
                      || record == "ATOM";
    const bool het = record.starts_with("HETATM");
    if (!atom && !het)
      continue;

    const char chain = line.size() >= 22 ? line[21] : ' ';
    if (chains && chains->find(chain) == std::string::npos)
      continue;

    if (line.size() < 54)
      throw PdbParseError("line " + std::to_string(lineno)
                              + ": coordinate field truncated",
                          lineno, out.skipped);
    Eigen::Vector3d xyz;
    for (int k = 0; k < 3; ++k) {
      const std::size_t first = 31 + 8 * static_cast<std::size_t>(k);
      if (!parse_double(columns(line, first, first + 7), xyz[k]))
        throw PdbParseError("line " + std::to_string(lineno)
                                + ": malformed coordinate field '"
                                + std::string(columns(line, first, first + 7))
                                + "'",
                            lineno, out.skipped);
    }

    const std::string atom_name(trim(columns(line, 13, 16)));
    const std::string res_name(trim(columns(line, 18, 20)));
    const std::string seq_id(columns(line, 23, 27));
    std::string key;
    key.push_back(chain);
    key += seq_id;
    key += '|';
    key += res_name;

    out.atoms.push_back({ std::string(line), xyz });

    if (!cur || cur->key != key) {
      flush();
      cur.emplace();
      cur->key = key;
      cur->res.name = res_name;
      cur->res.type = residue_type(res_name);
      cur->res.chain = chain;
      cur->res.seq_id = seq_id;
    }
    // The first occurrence wins for alternate locations.
    if (atom_name == "CA" && !cur->has_ca) {
      cur->res.ca = xyz;
      cur->has_ca = true;
    } else if (atom_name == "N" && !cur->has_n) {
      cur->res.n = xyz;
      cur->has_n = true;
    } else if (atom_name == "C" && !cur->has_c) {
      cur->res.c = xyz;
      cur->has_c = true;
    }
  }
  flush();

  if (out.residues.empty())
    throw PdbParseError("zero valid residues (" + std::to_string(out.skipped)
                            + " skipped for missing backbone atoms)",
                        0, out.skipped);
  return out;
}

ResidueSet parse_pdb(std::string_view text,
                     const std::optional<std::string> &chains) {
  std::istringstream is { std::string(text) };
  return parse_pdb(is, chains);
}

ResidueSet read_pdb(const std::filesystem::path &path,
                    const std::optional<std::string> &chains) {
  std::ifstream is(path);
  if (!is)
    throw PdbParseError("cannot open " + path.string(), 0, 0);
  return parse_pdb(is, chains);
}

namespace {

void append_atom(std::string &out, int serial, std::string_view atom,
                 const Residue &res, const Eigen::Vector3d &x,
                 std::string_view element) {
  char buf[128];
  std::string seq = res.seq_id;
  seq.resize(5, ' ');
  std::snprintf(buf, sizeof(buf),
                "ATOM  %5d %-4s %3s %c%5s   %8.3f%8.3f%8.3f%6.2f%6.2f"
                "          %2s\n",
                serial % 100000, std::string(atom).c_str(), res.name.c_str(),
                res.chain, seq.c_str(), x[0], x[1], x[2], 1.0, 0.0,
                std::string(element).c_str());
  out += buf;
}

}  // namespace

std::string format_ca_pdb(const ResidueSet &rs, const Eigen::Matrix3Xd &ca) {
  if (ca.cols() != static_cast<Eigen::Index>(rs.size()))
    throw std::invalid_argument("format_ca_pdb: coordinate count mismatch");
  std::string out;
  for (std::size_t i = 0; i < rs.size(); ++i)
    append_atom(out, static_cast<int>(i) + 1, " CA", rs.residues[i],
                ca.col(static_cast<Eigen::Index>(i)), "C");
  out += "END\n";
  return out;
}

std::string format_backbone_pdb(const ResidueSet &rs) {
  std::string out;
  int serial = 1;
  for (const Residue &r: rs.residues) {
    append_atom(out, serial++, " N", r, r.n, "N");
    append_atom(out, serial++, " CA", r, r.ca, "C");
    append_atom(out, serial++, " C", r, r.c, "C");
  }
  out += "END\n";
  return out;
}

std::string format_transformed_atoms(const ResidueSet &rs,
                                     const Eigen::Matrix3d &r,
                                     const Eigen::Vector3d &t) {
  std::string out;
  char buf[32];
  for (const AtomRecord &a: rs.atoms) {
    std::string line = a.line;
    if (line.size() < 54)
      line.resize(54, ' ');
    const Eigen::Vector3d y = r * a.xyz + t;
    std::snprintf(buf, sizeof(buf), "%8.3f%8.3f%8.3f", y[0], y[1], y[2]);
    line.replace(30, 24, buf);
    out += line;
    out += '\n';
  }
  out += "END\n";
  return out;
}

}  // namespace rigidock
