// SPDX-License-Identifier: Apache-2.0

#include <sstream>

#include <gtest/gtest.h>

#include "rigidock/cli.hpp"
#include "rigidock/metrics.hpp"
#include "test_util.hpp"

namespace rigidock {
namespace {

namespace fs = std::filesystem;

struct CliResult {
  int code;
  std::string out, err;
};

CliResult run(std::vector<std::string> args) {
  args.insert(args.begin(), "rigidock");
  std::vector<const char *> argv;
  for (const auto &a: args)
    argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code
      = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return { code, out.str(), err.str() };
}

class CliTest: public ::testing::Test {
protected:
  static void SetUpTestSuite() {
    dir_ = testing::scratch_dir("cli");
    testing::small_model(1).save(dir_ / "model.ckpt");
  }
  static fs::path dir_;

  CliResult dock(const fs::path &ligand, const fs::path &receptor,
           const std::string &tag, std::vector<std::string> extra = {}) {
    std::vector<std::string> args
        = { "dock", "--ligand", ligand.string(), "--receptor",
            receptor.string(), "--model", (dir_ / "model.ckpt").string(),
            "--out-pdb", (dir_ / (tag + ".pdb")).string(), "--out-transform",
            (dir_ / (tag + ".json")).string() };
    args.insert(args.end(), extra.begin(), extra.end());
    return run(args);
  }
};
fs::path CliTest::dir_;

TEST_F(CliTest, DockRoundTrip) {
  const fs::path fx = testing::fixture_pdb();
  const CliResult r = dock(fx, fx, "rt", { "--chains-ligand", "B",
                                     "--chains-receptor", "A" });
  ASSERT_EQ(r.code, 0) << r.err;
  const ResidueSet lig = read_pdb(fx, "B");
  const RigidTransformd t = transform_from_json(
      nlohmann::json::parse(read_file(dir_ / "rt.json")));
  EXPECT_NEAR(t.R.determinant(), 1.0, 1e-9);

  // CA-only output keeps names and numbering, at R x + t.
  const std::string pdb = read_file(dir_ / "rt.pdb");
  std::istringstream in(pdb);
  std::string line;
  std::size_t i = 0;
  Eigen::Matrix3Xd out(3, lig.size());
  while (std::getline(in, line)) {
    if (line.rfind("ATOM", 0) != 0)
      continue;
    ASSERT_LT(i, lig.size());
    EXPECT_EQ(line.substr(17, 3), lig.residues[i].name);
    EXPECT_EQ(line.substr(22, 5), lig.residues[i].seq_id);
    for (int k = 0; k < 3; ++k)
      out(k, static_cast<Eigen::Index>(i)) = std::stod(line.substr(30 + 8 * k, 8));
    ++i;
  }
  ASSERT_EQ(i, lig.size());
  EXPECT_LE((out - apply_transform(t, lig.ca_coords())).cwiseAbs().maxCoeff(),
            1e-3);

  // Rigid: internal distances are unchanged.
  const Eigen::Matrix3Xd in_ca = lig.ca_coords();
  for (Eigen::Index a = 0; a < in_ca.cols(); ++a)
    for (Eigen::Index b = a + 1; b < in_ca.cols(); ++b)
      EXPECT_NEAR((out.col(a) - out.col(b)).norm(),
                  (in_ca.col(a) - in_ca.col(b)).norm(), 1e-3);
}

TEST_F(CliTest, DockIsDeterministic) {
  const fs::path fx = testing::fixture_pdb();
  ASSERT_EQ(dock(fx, fx, "d1", { "--chains-ligand", "B", "--chains-receptor", "A" }).code, 0);
  ASSERT_EQ(dock(fx, fx, "d2", { "--chains-ligand", "B", "--chains-receptor", "A" }).code, 0);
  EXPECT_EQ(read_file(dir_ / "d1.pdb"), read_file(dir_ / "d2.pdb"));
  EXPECT_EQ(read_file(dir_ / "d1.json"), read_file(dir_ / "d2.json"));
}

Eigen::Matrix3Xd atom_coords(const fs::path &p) {
  Eigen::Matrix3Xd x(3, 0);
  std::istringstream in(read_file(p));
  std::string line;
  while (std::getline(in, line))
    if (line.rfind("ATOM", 0) == 0) {
      x.conservativeResize(3, x.cols() + 1);
      for (int k = 0; k < 3; ++k)
        x(k, x.cols() - 1) = std::stod(line.substr(30 + 8 * k, 8));
    }
  return x;
}

// Lattice motions keep the moved files exact; a generic rotation would add
// up to 5e-4 A of rounding that an untrained model can amplify past 1e-3.
TEST_F(CliTest, PreRotatedInputsGiveSameComplex) {
  const fs::path fx = testing::fixture_pdb();
  const ResidueSet lig = read_pdb(fx, "B"), rec = read_pdb(fx, "A");
  Rng rng(801);
  const RigidTransformd q1 = testing::lattice_se3(rng),
                        q2 = testing::lattice_se3(rng);
  const fs::path lig0 = dir_ / "lig0.pdb", rec0 = dir_ / "rec0.pdb";
  const fs::path lig1 = dir_ / "lig1.pdb", rec1 = dir_ / "rec1.pdb";
  write_file_atomic(lig0, format_backbone_pdb(lig));
  write_file_atomic(rec0, format_backbone_pdb(rec));
  write_file_atomic(lig1, format_transformed_atoms(lig, q1.R, q1.t));
  write_file_atomic(rec1, format_transformed_atoms(rec, q2.R, q2.t));

  ASSERT_EQ(dock(lig0, rec0, "orig").code, 0);
  ASSERT_EQ(dock(lig1, rec1, "rot").code, 0);
  const Eigen::Matrix3Xd c0
      = concat_complex(atom_coords(dir_ / "orig.pdb"), rec.ca_coords());
  const Eigen::Matrix3Xd c1 = concat_complex(atom_coords(dir_ / "rot.pdb"),
                                             read_pdb(rec1).ca_coords());
  EXPECT_LE(crmsd(c1, c0), 1e-3);
}

TEST_F(CliTest, CopyFullAtomsMovesEveryRecord) {
  const fs::path fx = testing::fixture_pdb();
  ASSERT_EQ(dock(fx, fx, "full", { "--chains-ligand", "B", "--chains-receptor",
                                   "A", "--copy-full-atoms" })
                .code,
            0);
  const ResidueSet lig = read_pdb(fx, "B");
  const ResidueSet out = read_pdb(dir_ / "full.pdb");
  EXPECT_EQ(out.atoms.size(), lig.atoms.size());
  const RigidTransformd t = transform_from_json(
      nlohmann::json::parse(read_file(dir_ / "full.json")));
  EXPECT_LE((out.ca_coords() - apply_transform(t, lig.ca_coords()))
                .cwiseAbs()
                .maxCoeff(),
            1e-3);
}

TEST_F(CliTest, Features) {
  const CliResult r = run({ "features", "--pdb", testing::fixture_pdb().string(),
                      "--neighbors", "4" });
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = nlohmann::json::parse(r.out);
  EXPECT_EQ(j["k"], 4);
  EXPECT_EQ(j["nodes"].size(), 20u);
  EXPECT_EQ(j["edges"].size(), 80u);
  EXPECT_EQ(j["edges"][0]["features"].size(), 27u);
  EXPECT_EQ(j["nodes"][15]["seq_id"], "  52A");
}

TEST_F(CliTest, GenEvalTrainPipeline) {
  const fs::path data = dir_ / "data";
  CliResult r = run({ "gen-synthetic", "--out", data.string(), "--num-pairs", "5",
                "--seed", "3" });
  ASSERT_EQ(r.code, 0) << r.err;
  ASSERT_TRUE(fs::exists(data / "splits.json"));

  r = run({ "eval", "--data", data.string(), "--oracle", "--out-csv",
            (dir_ / "oracle.csv").string(), "--jobs", "2" });
  ASSERT_EQ(r.code, 0) << r.err;
  const auto s = nlohmann::json::parse(r.out);
  EXPECT_LE(s["crmsd"]["median"].get<double>(), 1e-6);
  EXPECT_LE(s["irmsd"]["mean"].get<double>(), 1e-6);
  EXPECT_EQ(s["failures"], 0);
  EXPECT_EQ(read_file(dir_ / "oracle.csv").substr(0, 26),
            "pair_id,crmsd,irmsd,status");

  const fs::path run_dir = dir_ / "run";
  r = run({ "train", "--data", data.string(), "--out", run_dir.string(),
            "--max-epochs", "2", "--layers", "1", "--hidden", "8", "--heads",
            "4", "--neighbors", "6", "--lr", "1e-3" });
  ASSERT_EQ(r.code, 0) << r.err;
  const Model m = Model::load(run_dir / "best.ckpt");
  EXPECT_EQ(m.config.num_layers, 1);
  const auto cfg = nlohmann::json::parse(read_file(run_dir / "config.json"));
  EXPECT_EQ(cfg["learning_rate"], 1e-3);
  EXPECT_TRUE(fs::exists(run_dir / "losses.csv"));

  r = run({ "eval", "--data", data.string(), "--model",
            (run_dir / "best.ckpt").string(), "--split", "test" });
  EXPECT_EQ(r.code, 0) << r.err;
}

TEST_F(CliTest, CheckEquivariancePasses) {
  const CliResult r = run({ "check-equivariance", "--layers", "2", "--draws", "2" });
  ASSERT_EQ(r.code, 0) << r.err << r.out;
  const auto j = nlohmann::json::parse(r.out);
  EXPECT_TRUE(j["pass"].get<bool>());
  EXPECT_LE(j["max_relative_deviation"].get<double>(), 1e-5);
}

TEST_F(CliTest, ExitCodes) {
  EXPECT_EQ(run({}).code, kExitUsage);
  EXPECT_EQ(run({ "bogus" }).code, kExitUsage);
  EXPECT_EQ(run({ "features" }).code, kExitUsage);
  EXPECT_EQ(run({ "features", "--pdb", (dir_ / "missing.pdb").string() }).code,
            kExitUsage);
  EXPECT_EQ(run({ "eval", "--data", dir_.string() }).code, kExitUsage);

  const fs::path bad = dir_ / "bad.pdb";
  write_file_atomic(bad, "ATOM      1  CA  ALA A   1       5.0x0   6.500  -4.000\n");
  CliResult r = run({ "features", "--pdb", bad.string() });
  EXPECT_EQ(r.code, kExitInput);
  EXPECT_NE(r.err.find("line 1"), std::string::npos);

  const fs::path empty = dir_ / "empty.pdb";
  write_file_atomic(empty, "HEADER nothing\nEND\n");
  EXPECT_EQ(run({ "features", "--pdb", empty.string() }).code, kExitInput);

  // Collinear backbone: degenerate geometry.
  const fs::path line = dir_ / "line.pdb";
  write_file_atomic(
      line,
      "ATOM      1  N   GLY A   1       0.000   0.000   0.000  1.00  0.00           N\n"
      "ATOM      2  CA  GLY A   1       1.000   0.000   0.000  1.00  0.00           C\n"
      "ATOM      3  C   GLY A   1       2.000   0.000   0.000  1.00  0.00           C\n"
      "ATOM      4  N   GLY A   2       3.000   0.000   0.000  1.00  0.00           N\n"
      "ATOM      5  CA  GLY A   2       4.000   0.000   0.000  1.00  0.00           C\n"
      "ATOM      6  C   GLY A   2       5.000   1.000   0.000  1.00  0.00           C\n");
  EXPECT_EQ(run({ "features", "--pdb", line.string() }).code, kExitNumerical);

  const fs::path garbage = dir_ / "garbage.ckpt";
  write_file_atomic(garbage, "{}\n");
  const fs::path fx = testing::fixture_pdb();
  EXPECT_EQ(run({ "dock", "--ligand", fx.string(), "--receptor", fx.string(),
                  "--model", garbage.string(), "--out-pdb",
                  (dir_ / "x.pdb").string(), "--out-transform",
                  (dir_ / "x.json").string() })
                .code,
            kExitInput);
}

}  // namespace
}  // namespace rigidock
