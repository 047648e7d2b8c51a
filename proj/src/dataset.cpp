// SPDX-License-Identifier: Apache-2.0

#include "rigidock/dataset.hpp"

#include <array>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <stdexcept>

#include "rigidock/docking.hpp"
#include "rigidock/losses.hpp"
#include "rigidock/metrics.hpp"
#include "rigidock/params.hpp"

namespace rigidock {

namespace fs = std::filesystem;

void to_json(nlohmann::json &j, const Splits &s) {
  j = { { "train", s.train }, { "val", s.val }, { "test", s.test } };
}

void from_json(const nlohmann::json &j, Splits &s) {
  s.train = j.value("train", std::vector<std::string> {});
  s.val = j.value("val", std::vector<std::string> {});
  s.test = j.value("test", std::vector<std::string> {});
}

Splits default_splits(const std::vector<std::string> &ids) {
  Splits s;
  const std::size_t n = ids.size();
  if (n < 3) {
    s.train = s.val = s.test = ids;
    return s;
  }
  const std::size_t n_test = std::max<std::size_t>(1, (n + 2) / 5);
  const std::size_t n_val = std::max<std::size_t>(1, (n + 5) / 10);
  const std::size_t n_train = n - n_test - n_val;
  s.train.assign(ids.begin(), ids.begin() + n_train);
  s.val.assign(ids.begin() + n_train, ids.begin() + n_train + n_val);
  s.test.assign(ids.begin() + n_train + n_val, ids.end());
  return s;
}

Splits read_splits(const fs::path &root) {
  const fs::path p = root / "splits.json";
  try {
    return nlohmann::json::parse(read_file(p)).get<Splits>();
  } catch (const nlohmann::json::exception &e) {
    throw std::runtime_error(p.string() + ": " + e.what());
  }
}

DockingPair load_pair(const fs::path &root, const std::string &id) {
  const fs::path dir = root / "pairs" / id;
  DockingPair pair;
  pair.id = id;
  pair.ligand = read_pdb(dir / "ligand.pdb");
  pair.receptor = read_pdb(dir / "receptor.pdb");
  const fs::path cj = dir / "complex.json";
  try {
    pair.ligand_to_bound = transform_from_json(
        nlohmann::json::parse(read_file(cj)).at("ligand_to_bound"));
  } catch (const nlohmann::json::exception &e) {
    throw std::runtime_error(cj.string() + ": " + e.what());
  }
  return pair;
}

std::vector<DockingPair> load_pairs(const fs::path &root,
                                    const std::vector<std::string> &ids) {
  std::vector<DockingPair> out;
  out.reserve(ids.size());
  for (const auto &id: ids)
    out.push_back(load_pair(root, id));
  return out;
}

void write_dataset(const fs::path &root, const std::vector<DockingPair> &pairs,
                   const Splits &splits) {
  for (const auto &pair: pairs) {
    const fs::path dir = root / "pairs" / pair.id;
    fs::create_directories(dir);
    write_file_atomic(dir / "ligand.pdb", format_backbone_pdb(pair.ligand));
    write_file_atomic(dir / "receptor.pdb", format_backbone_pdb(pair.receptor));
    nlohmann::json cj
        = { { "ligand_to_bound", transform_to_json(pair.ligand_to_bound) } };
    write_file_atomic(dir / "complex.json", cj.dump(2) + "\n");
  }
  fs::create_directories(root);
  write_file_atomic(root / "splits.json", nlohmann::json(splits).dump(2) + "\n");
}

// ---- synthetic generator ---------------------------------------------------

namespace {

// Interface residues carry a type fixed by their angular sector around the
// contact normal, so the two sides of an interface are recognizable and
// matched across pairs.
constexpr std::array<const char *, 4> kReceptorSectorTypes { "TRP", "TYR",
                                                             "ARG", "ASP" };
constexpr std::array<const char *, 4> kLigandSectorTypes { "PHE", "HIS", "LYS",
                                                           "GLU" };
constexpr std::array<const char *, 12> kBulkTypes { "ALA", "ASN", "CYS", "GLN",
                                                    "GLY", "ILE", "LEU", "MET",
                                                    "PRO", "SER", "THR",
                                                    "VAL" };

constexpr double kCaN = 1.46, kCaC = 1.52;
constexpr double kTriadAngle = 110.0 * std::numbers::pi / 180.0;

Eigen::Vector3d random_unit(Rng &rng) {
  Eigen::Vector3d v;
  do {
    v = Eigen::Vector3d(standard_normal(rng), standard_normal(rng),
                        standard_normal(rng));
  } while (v.norm() < 1e-8);
  return v.normalized();
}

Eigen::Matrix3Xd random_blob(Rng &rng, int n, const SyntheticOptions &opt) {
  const double radius
      = std::cbrt(3.0 * n * opt.volume_per_residue / (4.0 * std::numbers::pi));
  Eigen::Vector3d axes;
  for (int a = 0; a < 3; ++a)
    axes[a] = radius * uniform(rng, 0.85, 1.2);
  const double min2 = opt.min_spacing * opt.min_spacing;
  Eigen::Matrix3Xd pts(3, n);
  int placed = 0, misses = 0;
  while (placed < n) {
    Eigen::Vector3d p;
    for (int a = 0; a < 3; ++a)
      p[a] = uniform(rng, -axes[a], axes[a]);
    bool ok = p.cwiseQuotient(axes).squaredNorm() <= 1.0;
    for (int i = 0; ok && i < placed; ++i)
      ok = (pts.col(i) - p).squaredNorm() >= min2;
    if (ok) {
      pts.col(placed++) = p;
      misses = 0;
    } else if (++misses > 2000) {
      axes *= 1.05;
      misses = 0;
    }
  }
  const Eigen::Vector3d c = pts.rowwise().mean();
  return pts.colwise() - c;
}

ResidueSet make_residues(Rng &rng, const Eigen::Matrix3Xd &ca, char chain) {
  ResidueSet rs;
  for (Eigen::Index i = 0; i < ca.cols(); ++i) {
    Residue r;
    r.chain = chain;
    char seq[16];
    std::snprintf(seq, sizeof seq, "%4d ", static_cast<int>(i + 1));
    r.seq_id = seq;
    r.ca = ca.col(i);
    const Eigen::Vector3d a = random_unit(rng);
    Eigen::Vector3d b = random_unit(rng);
    b -= b.dot(a) * a;
    b = b.norm() < 1e-6 ? a.unitOrthogonal() : b.normalized();
    r.n = r.ca + kCaN * a;
    r.c = r.ca + kCaC * (std::cos(kTriadAngle) * a + std::sin(kTriadAngle) * b);
    rs.residues.push_back(std::move(r));
  }
  return rs;
}

int count_contacts(const Eigen::Matrix3Xd &x1, const Eigen::Matrix3Xd &x2,
                   double cutoff) {
  const double c2 = cutoff * cutoff;
  int s = 0;
  for (Eigen::Index i = 0; i < x1.cols(); ++i)
    for (Eigen::Index j = 0; j < x2.cols(); ++j)
      s += (x1.col(i) - x2.col(j)).squaredNorm() < c2;
  return s;
}

void assign_types(Rng &rng, ResidueSet &rs, const Eigen::Matrix3Xd &x,
                  const Eigen::Matrix3Xd &other,
                  const std::array<const char *, 4> &sector_types,
                  const Eigen::Vector3d &center, const Eigen::Vector3d &e1,
                  const Eigen::Vector3d &e2, double cutoff) {
  const double c2 = cutoff * cutoff;
  for (Eigen::Index i = 0; i < x.cols(); ++i) {
    const bool interface
        = ((other.colwise() - x.col(i)).colwise().squaredNorm().array() < c2)
              .any();
    std::string name;
    if (interface) {
      const Eigen::Vector3d d = x.col(i) - center;
      double angle = std::atan2(d.dot(e2), d.dot(e1));
      if (angle < 0)
        angle += 2.0 * std::numbers::pi;
      const int sector
          = std::min(3, static_cast<int>(angle / (0.5 * std::numbers::pi)));
      name = sector_types[sector];
    } else {
      name = kBulkTypes[rng() % kBulkTypes.size()];
    }
    rs.residues[i].name = name;
    rs.residues[i].type = residue_type(name);
  }
}

DockingPair generate_pair(Rng &rng, const std::string &id,
                          const SyntheticOptions &opt) {
  auto draw_size = [&](int lo, int hi) {
    return lo + static_cast<int>(rng() % static_cast<std::uint64_t>(hi - lo + 1));
  };
  const Eigen::Matrix3Xd rec = random_blob(
      rng, draw_size(opt.receptor_min, opt.receptor_max), opt);
  const Eigen::Matrix3Xd lig0
      = random_blob(rng, draw_size(opt.ligand_min, opt.ligand_max), opt);
  const double reach = rec.colwise().norm().maxCoeff()
                       + lig0.colwise().norm().maxCoeff() + 10.0;

  for (int attempt = 0; attempt < opt.max_tries; ++attempt) {
    const Eigen::Matrix3d rot = random_se3(rng, 0.0).R;
    const Eigen::Vector3d dir = random_unit(rng);
    const Eigen::Matrix3Xd lig_rot = rot * lig0;
    for (double s = reach; s > 0.0; s -= 0.2) {
      const Eigen::Matrix3Xd lig = lig_rot.colwise() + s * dir;
      if (count_contacts(lig, rec, opt.contact_cutoff) < opt.min_contacts)
        continue;
      if (intersection_loss(lig, rec) > opt.max_intersection)
        break;

      DockingPair pair;
      pair.id = id;
      pair.receptor = make_residues(rng, rec, 'A');
      ResidueSet bound = make_residues(rng, lig, 'B');
      Eigen::Vector3d e1 = random_unit(rng);
      e1 = (e1 - e1.dot(dir) * dir);
      if (e1.norm() < 1e-6)
        e1 = dir.unitOrthogonal();
      e1.normalize();
      const Eigen::Vector3d e2 = dir.cross(e1);
      const auto [li, ri] = interface_residues(lig, rec, opt.labeling_cutoff);
      Eigen::Vector3d center = Eigen::Vector3d::Zero();
      for (int i: li)
        center += lig.col(i);
      for (int j: ri)
        center += rec.col(j);
      center /= static_cast<double>(li.size() + ri.size());
      assign_types(rng, pair.receptor, rec, lig, kReceptorSectorTypes, center,
                   e1, e2, opt.labeling_cutoff);
      assign_types(rng, bound, lig, rec, kLigandSectorTypes, center, e1, e2,
                   opt.labeling_cutoff);

      const RigidTransformd move = random_se3(rng);
      for (Residue &r: bound.residues) {
        r.ca = move.R * r.ca + move.t;
        r.n = move.R * r.n + move.t;
        r.c = move.R * r.c + move.t;
      }
      pair.ligand = std::move(bound);
      pair.ligand_to_bound = move.inverse();
      return pair;
    }
  }
  throw std::runtime_error("generate_synthetic: could not place ligand for "
                           + id + " after "
                           + std::to_string(opt.max_tries) + " tries");
}

}  // namespace

std::vector<DockingPair> generate_synthetic(int num_pairs, std::uint64_t seed,
                                            const SyntheticOptions &opt) {
  if (num_pairs < 1)
    throw std::invalid_argument("generate_synthetic: num_pairs must be >= 1");
  Rng rng(seed);
  std::vector<DockingPair> out;
  for (int p = 0; p < num_pairs; ++p) {
    char id[32];
    std::snprintf(id, sizeof id, "pair_%04d", p);
    out.push_back(generate_pair(rng, id, opt));
  }
  return out;
}

}  // namespace rigidock
