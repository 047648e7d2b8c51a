// SPDX-License-Identifier: Apache-2.0

#include "rigidock/cli.hpp"

#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "CLI11.hpp"
#include "json.hpp"
#include "rigidock/checks.hpp"
#include "rigidock/dataset.hpp"
#include "rigidock/docking.hpp"
#include "rigidock/trainer.hpp"

namespace rigidock {

namespace fs = std::filesystem;

namespace {

void configure_logging() {
  static const bool once = [] {
    auto logger = spdlog::stderr_color_mt("rigidock");
    spdlog::set_default_logger(logger);
    return true;
  }();
  (void)once;
  const char *env = std::getenv("RIGIDOCK_LOG_LEVEL");
  spdlog::set_level(env ? spdlog::level::from_str(env) : spdlog::level::info);
}

std::optional<std::string> non_empty(const std::string &s) {
  return s.empty() ? std::nullopt : std::optional<std::string>(s);
}

ResidueSet read_protein(const std::string &path, const std::string &chains) {
  ResidueSet rs = read_pdb(path, non_empty(chains));
  if (rs.size() < 2)
    throw PdbParseError(path + ": need at least 2 residues, found "
                            + std::to_string(rs.size()),
                        0, rs.skipped);
  return rs;
}

// ---- dock -------------------------------------------------------------------

struct DockArgs {
  std::string ligand, receptor, model, out_pdb, out_transform;
  std::string chains_ligand, chains_receptor;
  bool copy_full_atoms = false;
};

int cmd_dock(const DockArgs &a, std::ostream &out) {
  const Model model = Model::load(a.model);
  const ResidueSet lig = read_protein(a.ligand, a.chains_ligand);
  const ResidueSet rec = read_protein(a.receptor, a.chains_receptor);
  const int k = model.config.num_neighbors;
  const RigidTransformd tr
      = predict_dock(model, build_graph(lig, k), build_graph(rec, k));
  const std::string pdb
      = a.copy_full_atoms
            ? format_transformed_atoms(lig, tr.R, tr.t)
            : format_ca_pdb(lig, apply_transform(tr, lig.ca_coords()));
  write_file_atomic(a.out_pdb, pdb);
  write_file_atomic(a.out_transform, transform_to_json(tr).dump(2) + "\n");
  out << "docked " << lig.size() << " ligand residues onto " << rec.size()
      << " receptor residues\n";
  return kExitOk;
}

// ---- train ------------------------------------------------------------------

struct TrainArgs {
  std::string data, out, config, preset = "default";
  std::optional<double> lr;
  std::optional<int> patience, max_epochs, layers, hidden, heads, neighbors;
  std::optional<std::uint64_t> seed;
};

int cmd_train(const TrainArgs &a, std::ostream &out) {
  TrainConfig cfg = TrainConfig::preset(a.preset);
  if (!a.config.empty())
    nlohmann::json::parse(read_file(a.config)).get_to(cfg);
  if (a.lr)
    cfg.learning_rate = *a.lr;
  if (a.patience)
    cfg.patience = *a.patience;
  if (a.max_epochs)
    cfg.max_epochs = *a.max_epochs;
  if (a.seed)
    cfg.seed = *a.seed;
  if (a.layers)
    cfg.model.num_layers = *a.layers;
  if (a.hidden)
    cfg.model.hidden_dim = *a.hidden;
  if (a.heads)
    cfg.model.num_heads = *a.heads;
  if (a.neighbors)
    cfg.model.num_neighbors = *a.neighbors;
  cfg.validate();

  const Splits splits = read_splits(a.data);
  const auto train_pairs = load_pairs(a.data, splits.train);
  const auto val_pairs = load_pairs(a.data, splits.val);
  fs::create_directories(a.out);
  write_file_atomic(fs::path(a.out) / "config.json",
                    nlohmann::json(cfg).dump(2) + "\n");
  const TrainResult r = train(cfg, train_pairs, val_pairs, a.out);
  out << nlohmann::json { { "best_checkpoint", r.best_checkpoint.string() },
                          { "best_val_median_ligand_rmsd", r.best_score },
                          { "epochs", r.epochs },
                          { "steps", r.steps },
                          { "skipped", r.skipped } }
             .dump(2)
      << "\n";
  return kExitOk;
}

// ---- eval -------------------------------------------------------------------

struct EvalArgs {
  std::string data, model, split = "test", out_csv, out_json;
  bool oracle = false, swap_roles = false;
  std::uint64_t seed = 0;
  int jobs = 1;
};

int cmd_eval(const EvalArgs &a, std::ostream &out) {
  const Splits splits = read_splits(a.data);
  const std::vector<std::string> *ids = a.split == "train" ? &splits.train
                                        : a.split == "val" ? &splits.val
                                                           : &splits.test;
  std::optional<Model> model;
  int k = kDefaultNeighbors;
  if (!a.oracle) {
    model = Model::load(a.model);
    k = model->config.num_neighbors;
  }
  const auto pairs = prepare_pairs(load_pairs(a.data, *ids), k);
  const Predictor predict
      = a.oracle ? oracle_predictor(a.seed) : model_predictor(*model);
  const EvalReport report = evaluate(predict, pairs, a.seed, a.jobs,
                                     a.swap_roles);
  if (!a.out_csv.empty())
    write_file_atomic(a.out_csv, report.to_csv());
  const std::string summary = report.summary().dump(2) + "\n";
  if (!a.out_json.empty())
    write_file_atomic(a.out_json, summary);
  out << summary;
  return kExitOk;
}

// ---- gen-synthetic ------------------------------------------------------------

struct GenArgs {
  std::string out;
  int num_pairs = 50;
  std::uint64_t seed = 0;
};

int cmd_gen(const GenArgs &a, std::ostream &out) {
  const auto pairs = generate_synthetic(a.num_pairs, a.seed);
  std::vector<std::string> ids;
  for (const auto &p: pairs)
    ids.push_back(p.id);
  const Splits splits = default_splits(ids);
  write_dataset(a.out, pairs, splits);
  out << "wrote " << pairs.size() << " pairs (" << splits.train.size()
      << " train, " << splits.val.size() << " val, " << splits.test.size()
      << " test) to " << a.out << "\n";
  return kExitOk;
}

// ---- features -----------------------------------------------------------------

struct FeatureArgs {
  std::string pdb, out, chains;
  int neighbors = kDefaultNeighbors;
};

int cmd_features(const FeatureArgs &a, std::ostream &out) {
  const ResidueSet rs = read_protein(a.pdb, a.chains);
  const ProteinGraph g = build_graph(rs, a.neighbors);
  nlohmann::json nodes = nlohmann::json::array();
  for (std::size_t i = 0; i < rs.size(); ++i) {
    const Residue &r = rs.residues[i];
    const auto col = static_cast<Eigen::Index>(i);
    nlohmann::json surface = nlohmann::json::array();
    for (Eigen::Index f = 0; f < g.surface.rows(); ++f)
      surface.push_back(g.surface(f, col));
    nodes.push_back({ { "chain", std::string(1, r.chain) },
                      { "seq_id", r.seq_id },
                      { "name", r.name },
                      { "type", r.type },
                      { "ca", { r.ca[0], r.ca[1], r.ca[2] } },
                      { "surface", surface } });
  }
  nlohmann::json edges = nlohmann::json::array();
  for (std::size_t e = 0; e < g.num_edges(); ++e) {
    const auto col = static_cast<Eigen::Index>(e);
    std::vector<double> f(g.edge_feats.col(col).data(),
                          g.edge_feats.col(col).data() + kEdgeFeatureDim);
    edges.push_back({ { "src", g.src[e] }, { "dst", g.dst[e] },
                      { "features", f } });
  }
  const nlohmann::json doc = { { "k", g.k },
                               { "surface_lambdas", kSurfaceLambdas },
                               { "nodes", nodes },
                               { "edges", edges } };
  if (a.out.empty())
    out << doc.dump(2) << "\n";
  else
    write_file_atomic(a.out, doc.dump(2) + "\n");
  return kExitOk;
}

// ---- check-equivariance -------------------------------------------------------

struct CheckArgs {
  std::string model, ligand, receptor;
  int layers = 5, draws = 5;
  double noise = 0.1, tolerance = 1e-5;
  std::uint64_t seed = 0;
};

int cmd_check(const CheckArgs &a, std::ostream &out) {
  Model model;
  if (!a.model.empty()) {
    model = Model::load(a.model);
  } else {
    ModelConfig cfg;
    cfg.num_layers = a.layers;
    model = Model::initialize(cfg, a.seed);
    jitter_params(model.params, a.seed + 1, a.noise);
  }
  const int k = model.config.num_neighbors;
  ProteinGraph lig, rec;
  if (!a.ligand.empty() && !a.receptor.empty()) {
    lig = build_graph(read_protein(a.ligand, ""), k);
    rec = build_graph(read_protein(a.receptor, ""), k);
  } else {
    const PreparedPair p = prepare_pair(generate_synthetic(1, a.seed)[0], k);
    lig = p.ligand;
    rec = p.receptor;
  }
  double worst = 0.0;
  nlohmann::json draws = nlohmann::json::array();
  for (int d = 0; d < a.draws; ++d) {
    const SymmetryReport r
        = check_symmetries(model, lig, rec, a.seed * 1000003ULL + d);
    worst = std::max(worst, r.max_relative());
    draws.push_back(r.to_json());
  }
  const bool ok = worst <= a.tolerance;
  out << nlohmann::json { { "draws", draws },
                          { "max_relative_deviation", worst },
                          { "tolerance", a.tolerance },
                          { "pass", ok } }
             .dump(2)
      << "\n";
  return ok ? kExitOk : kExitNumerical;
}

}  // namespace

int run_cli(int argc, const char *const *argv, std::ostream &out,
            std::ostream &err) {
  configure_logging();
  CLI::App app { "Rigid protein-protein docking with pairwise-equivariant "
                 "graph matching",
                 "rigidock" };
  app.require_subcommand(1);

  DockArgs dock;
  auto *sc_dock = app.add_subcommand("dock", "dock a ligand onto a receptor");
  sc_dock->add_option("--ligand", dock.ligand, "ligand PDB")
      ->required()
      ->check(CLI::ExistingFile);
  sc_dock->add_option("--receptor", dock.receptor, "receptor PDB")
      ->required()
      ->check(CLI::ExistingFile);
  sc_dock->add_option("--model", dock.model, "checkpoint")
      ->required()
      ->check(CLI::ExistingFile);
  sc_dock->add_option("--out-pdb", dock.out_pdb, "docked ligand PDB")
      ->required();
  sc_dock->add_option("--out-transform", dock.out_transform,
                      "transform JSON")
      ->required();
  sc_dock->add_option("--chains-ligand", dock.chains_ligand,
                      "ligand chain ids to keep");
  sc_dock->add_option("--chains-receptor", dock.chains_receptor,
                      "receptor chain ids to keep");
  sc_dock->add_flag("--copy-full-atoms", dock.copy_full_atoms,
                    "write every ligand atom record, rigidly moved");

  TrainArgs tr;
  auto *sc_train = app.add_subcommand("train", "train a model on a dataset");
  sc_train->add_option("--data", tr.data, "dataset root")
      ->required()
      ->check(CLI::ExistingDirectory);
  sc_train->add_option("--out", tr.out, "output directory")->required();
  sc_train->add_option("--config", tr.config, "JSON training config")
      ->check(CLI::ExistingFile);
  sc_train->add_option("--preset", tr.preset, "default or db5");
  sc_train->add_option("--lr", tr.lr, "learning rate");
  sc_train->add_option("--patience", tr.patience, "early-stopping patience");
  sc_train->add_option("--max-epochs", tr.max_epochs, "epoch limit");
  sc_train->add_option("--seed", tr.seed, "random seed");
  sc_train->add_option("--layers", tr.layers, "IEGMN layers");
  sc_train->add_option("--hidden", tr.hidden, "hidden width d");
  sc_train->add_option("--heads", tr.heads, "keypoints K");
  sc_train->add_option("--neighbors", tr.neighbors, "k-NN degree");

  EvalArgs ev;
  auto *sc_eval = app.add_subcommand("eval", "evaluate CRMSD / IRMSD");
  sc_eval->add_option("--data", ev.data, "dataset root")
      ->required()
      ->check(CLI::ExistingDirectory);
  auto *opt_model = sc_eval->add_option("--model", ev.model, "checkpoint")
                        ->check(CLI::ExistingFile);
  auto *opt_oracle = sc_eval->add_flag(
      "--oracle", ev.oracle, "use ground-truth transforms (pipeline check)");
  opt_model->excludes(opt_oracle);
  sc_eval->add_option("--split", ev.split, "train, val or test")
      ->check(CLI::IsMember({ "train", "val", "test" }));
  sc_eval->add_option("--out-csv", ev.out_csv, "per-pair report CSV");
  sc_eval->add_option("--out-json", ev.out_json, "summary JSON");
  sc_eval->add_option("--seed", ev.seed, "perturbation seed");
  sc_eval->add_option("--jobs", ev.jobs, "worker threads")
      ->check(CLI::PositiveNumber);
  sc_eval->add_flag("--swap-roles", ev.swap_roles,
                    "dock the receptor onto the ligand instead");

  GenArgs gen;
  auto *sc_gen = app.add_subcommand("gen-synthetic",
                                    "write a synthetic docking dataset");
  sc_gen->add_option("--out", gen.out, "dataset root")->required();
  sc_gen->add_option("--num-pairs", gen.num_pairs, "number of pairs")
      ->check(CLI::PositiveNumber);
  sc_gen->add_option("--seed", gen.seed, "random seed");

  FeatureArgs feat;
  auto *sc_feat = app.add_subcommand("features",
                                     "dump residue graph features as JSON");
  sc_feat->add_option("--pdb", feat.pdb, "input PDB")
      ->required()
      ->check(CLI::ExistingFile);
  sc_feat->add_option("--out", feat.out, "output JSON (stdout if omitted)");
  sc_feat->add_option("--chains", feat.chains, "chain ids to keep");
  sc_feat->add_option("--neighbors", feat.neighbors, "k-NN degree")
      ->check(CLI::PositiveNumber);

  CheckArgs chk;
  auto *sc_check = app.add_subcommand(
      "check-equivariance", "measure deviations from the symmetry guarantees");
  sc_check->add_option("--model", chk.model, "checkpoint (fresh if omitted)")
      ->check(CLI::ExistingFile);
  sc_check->add_option("--ligand", chk.ligand, "ligand PDB")
      ->check(CLI::ExistingFile);
  sc_check->add_option("--receptor", chk.receptor, "receptor PDB")
      ->check(CLI::ExistingFile);
  sc_check->add_option("--layers", chk.layers, "layers of a fresh model")
      ->check(CLI::PositiveNumber);
  sc_check->add_option("--noise", chk.noise,
                       "weight noise added to a fresh model");
  sc_check->add_option("--draws", chk.draws, "random motions to test")
      ->check(CLI::PositiveNumber);
  sc_check->add_option("--tolerance", chk.tolerance,
                       "maximum relative deviation");
  sc_check->add_option("--seed", chk.seed, "random seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp &e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp &e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError &e) {
    app.exit(e, out, err);
    return kExitUsage;
  }
  if (*sc_eval && !ev.oracle && ev.model.empty()) {
    err << "eval: one of --model or --oracle is required\n";
    return kExitUsage;
  }
  if (*sc_check && chk.ligand.empty() != chk.receptor.empty()) {
    err << "check-equivariance: give both --ligand and --receptor or "
           "neither\n";
    return kExitUsage;
  }

  try {
    if (*sc_dock)
      return cmd_dock(dock, out);
    if (*sc_train)
      return cmd_train(tr, out);
    if (*sc_eval)
      return cmd_eval(ev, out);
    if (*sc_gen)
      return cmd_gen(gen, out);
    if (*sc_feat)
      return cmd_features(feat, out);
    if (*sc_check)
      return cmd_check(chk, out);
  } catch (const PdbParseError &e) {
    err << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const DegenerateConfigurationError &e) {
    err << "error: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const NumericalError &e) {
    err << "error: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const nlohmann::json::exception &e) {
    err << "error: malformed JSON: " << e.what() << "\n";
    return kExitInput;
  } catch (const std::invalid_argument &e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception &e) {
    err << "error: " << e.what() << "\n";
    return kExitInput;
  }
  return kExitUsage;
}

}  // namespace rigidock
