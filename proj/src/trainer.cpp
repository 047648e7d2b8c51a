// SPDX-License-Identifier: Apache-2.0

#include "rigidock/trainer.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <thread>

#include <spdlog/spdlog.h>

#include "rigidock/metrics.hpp"

namespace rigidock {

namespace fs = std::filesystem;

TrainConfig TrainConfig::preset(std::string_view name) {
  TrainConfig c;
  if (name == "default")
    return c;
  if (name == "db5") {
    c.learning_rate = 1e-4;
    c.patience = 150;
    return c;
  }
  throw std::invalid_argument("unknown training preset '" + std::string(name)
                              + "' (expected default or db5)");
}

void TrainConfig::validate() const {
  model.validate();
  auto require = [](bool ok, const char *what) {
    if (!ok)
      throw std::invalid_argument(std::string("TrainConfig: ") + what);
  };
  require(learning_rate >= 0 && std::isfinite(learning_rate),
          "learning_rate must be finite and >= 0");
  require(patience >= 1, "patience must be >= 1");
  require(improvement_factor > 0 && improvement_factor <= 1,
          "improvement_factor must be in (0, 1]");
  require(max_epochs >= 1, "max_epochs must be >= 1");
  require(max_translation >= 0, "max_translation must be >= 0");
  require(loss.mse >= 0 && loss.ot >= 0 && loss.intersection >= 0,
          "loss weights must be >= 0");
  require(loss.gamma > 0 && loss.sigma > 0 && loss.pocket_cutoff > 0,
          "gamma, sigma and pocket_cutoff must be > 0");
}

void to_json(nlohmann::json &j, const TrainConfig &c) {
  j = { { "model", c.model },
        { "loss", c.loss },
        { "learning_rate", c.learning_rate },
        { "patience", c.patience },
        { "improvement_factor", c.improvement_factor },
        { "max_epochs", c.max_epochs },
        { "seed", c.seed },
        { "val_seed", c.val_seed },
        { "max_translation", c.max_translation },
        { "random_roles", c.random_roles },
        { "augment", c.augment } };
}

void from_json(const nlohmann::json &j, TrainConfig &c) {
  if (j.contains("model")) {
    nlohmann::json merged = c.model;
    merged.merge_patch(j.at("model"));
    c.model = merged.get<ModelConfig>();
  }
  if (j.contains("loss")) {
    nlohmann::json merged = c.loss;
    merged.merge_patch(j.at("loss"));
    c.loss = merged.get<LossWeights>();
  }
  c.learning_rate = j.value("learning_rate", c.learning_rate);
  c.patience = j.value("patience", c.patience);
  c.improvement_factor = j.value("improvement_factor", c.improvement_factor);
  c.max_epochs = j.value("max_epochs", c.max_epochs);
  c.seed = j.value("seed", c.seed);
  c.val_seed = j.value("val_seed", c.val_seed);
  c.max_translation = j.value("max_translation", c.max_translation);
  c.random_roles = j.value("random_roles", c.random_roles);
  c.augment = j.value("augment", c.augment);
}

PreparedPair prepare_pair(const DockingPair &pair, int num_neighbors) {
  PreparedPair out;
  out.id = pair.id;
  out.ligand = moved(build_graph(pair.ligand, num_neighbors),
                     pair.ligand_to_bound);
  out.receptor = build_graph(pair.receptor, num_neighbors);
  try {
    out.pockets = pocket_points(out.ligand.x, out.receptor.x);
  } catch (const NoContactError &) {
    out.pockets.reset();
  }
  return out;
}

std::vector<PreparedPair> prepare_pairs(const std::vector<DockingPair> &pairs,
                                        int num_neighbors) {
  std::vector<PreparedPair> out;
  out.reserve(pairs.size());
  for (const auto &p: pairs)
    out.push_back(prepare_pair(p, num_neighbors));
  return out;
}

ProteinGraph moved(const ProteinGraph &g, const RigidTransformd &tr) {
  ProteinGraph out = g;
  out.x = apply_transform(tr, g.x);
  return out;
}

PairLoss pair_loss(const Model &model, const PreparedPair &pair,
                   bool swap_roles, const RigidTransformd &augmentation,
                   const LossWeights &w) {
  const ProteinGraph &moving = swap_roles ? pair.receptor : pair.ligand;
  const ProteinGraph &fixed = swap_roles ? pair.ligand : pair.receptor;
  const ProteinGraph input = moved(moving, augmentation);

  LossTargets targets;
  targets.ligand_true = moving.x;
  targets.receptor = fixed.x;
  if (w.ot != 0.0) {
    if (!pair.pockets)
      throw NoContactError("pair " + pair.id + " has no contact");
    targets.pockets.p1 = apply_transform(augmentation, pair.pockets->p1);
    targets.pockets.p2 = pair.pockets->p2;
  }

  ad::Tape tape;
  BoundParams p(tape, model.params, /*trainable=*/true);
  const DockForward fwd = dock_forward(p, model.config, input, fixed);
  const LossTerms terms = total_loss(
      fwd.transform.R, fwd.transform.t, input.x, fwd.ligand_keypoints.y,
      fwd.receptor_keypoints.y, targets, w);
  tape.backward(terms.total);

  PairLoss out;
  out.mse = terms.mse;
  out.ot = terms.ot;
  out.intersection = terms.intersection;
  out.total = terms.total.item();
  out.grads = p.gradients();
  return out;
}

void Adam::step(ParamStore &params,
                const std::map<std::string, MatrixXd> &grads) {
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, t_);
  const double c2 = 1.0 - std::pow(beta2_, t_);
  for (const auto &name: params.names()) {
    auto g = grads.find(name);
    if (g == grads.end())
      continue;
    MatrixXd &w = params.at(name);
    auto [mi, m_new] = m_.try_emplace(name, MatrixXd::Zero(w.rows(), w.cols()));
    auto [vi, v_new] = v_.try_emplace(name, MatrixXd::Zero(w.rows(), w.cols()));
    MatrixXd &m = mi->second, &v = vi->second;
    m = beta1_ * m + (1.0 - beta1_) * g->second;
    v = beta2_ * v + (1.0 - beta2_) * g->second.cwiseAbs2();
    w.array() -= lr_ * (m.array() / c1)
                 / ((v.array() / c2).sqrt() + eps_);
  }
}

RigidTransformd evaluation_perturbation(std::uint64_t seed, std::size_t index,
                                        double t_max) {
  std::seed_seq seq { static_cast<std::uint32_t>(seed),
                      static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(index),
                      static_cast<std::uint32_t>(index >> 32) };
  Rng rng(seq);
  return random_se3(rng, t_max);
}

namespace {

double safe_mean(const std::vector<double> &v) {
  return v.empty() ? 0.0
                   : std::accumulate(v.begin(), v.end(), 0.0)
                         / static_cast<double>(v.size());
}

double safe_std(const std::vector<double> &v) {
  if (v.empty())
    return 0.0;
  const double m = safe_mean(v);
  double acc = 0.0;
  for (double x: v)
    acc += (x - m) * (x - m);
  return std::sqrt(acc / static_cast<double>(v.size()));
}

std::string fmt_num(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.9g", x);
  return buf;
}

// Runs fn(i) for i in [0, n) on `jobs` threads.
template <class Fn>
void parallel_for(std::size_t n, int jobs, Fn &&fn) {
  if (jobs <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i)
      fn(i);
    return;
  }
  std::atomic<std::size_t> next { 0 };
  std::vector<std::thread> workers;
  const int count = static_cast<int>(std::min<std::size_t>(n, jobs));
  for (int w = 0; w < count; ++w)
    workers.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++)
        fn(i);
    });
  for (auto &t: workers)
    t.join();
}

}  // namespace

double validation_score(const Model &model,
                        const std::vector<PreparedPair> &pairs,
                        std::uint64_t seed, double t_max) {
  if (pairs.empty())
    throw std::invalid_argument("validation_score: empty validation set");
  std::vector<double> scores;
  scores.reserve(pairs.size());
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const PreparedPair &pair = pairs[i];
    const ProteinGraph input
        = moved(pair.ligand, evaluation_perturbation(seed, i, t_max));
    Eigen::Matrix3Xd pred = input.x;
    try {
      pred = apply_transform(predict_dock(model, input, pair.receptor),
                             input.x);
    } catch (const DegenerateConfigurationError &) {
    } catch (const NumericalError &) {
    }
    scores.push_back(rmsd(pred, pair.ligand.x));
  }
  return median(scores);
}

TrainResult train(const TrainConfig &cfg,
                  const std::vector<DockingPair> &train_pairs,
                  const std::vector<DockingPair> &val_pairs,
                  const fs::path &out_dir) {
  cfg.validate();
  if (train_pairs.empty())
    throw std::runtime_error("train: empty training set");
  if (val_pairs.empty())
    throw std::runtime_error("train: empty validation set");
  const std::vector<PreparedPair> tr
      = prepare_pairs(train_pairs, cfg.model.num_neighbors);
  const std::vector<PreparedPair> val
      = prepare_pairs(val_pairs, cfg.model.num_neighbors);

  std::vector<std::size_t> usable;
  int no_contact = 0;
  for (std::size_t i = 0; i < tr.size(); ++i) {
    if (tr[i].pockets || cfg.loss.ot == 0.0)
      usable.push_back(i);
    else
      ++no_contact;
  }
  if (usable.empty())
    throw std::runtime_error("train: every training pair lacks a contact");
  if (no_contact)
    spdlog::warn("skipping {} training pair(s) without contacts", no_contact);

  fs::create_directories(out_dir);
  Model model = Model::initialize(cfg.model, cfg.seed);
  Adam adam(cfg.learning_rate);
  Rng rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);

  TrainResult result;
  result.best_checkpoint = out_dir / "best.ckpt";
  result.skipped = no_contact;
  double best = std::numeric_limits<double>::infinity();
  int stale = 0;
  std::string losses_csv = "step,mse,ot,intersection,total\n";
  std::string val_csv = "epoch,val_median_ligand_rmsd,accepted\n";
  const nlohmann::json train_meta = { { "train", cfg } };

  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    std::vector<std::size_t> order = usable;
    for (std::size_t i = order.size(); i > 1; --i)
      std::swap(order[i - 1], order[rng() % i]);

    for (std::size_t idx: order) {
      const bool swap_roles = cfg.random_roles && (rng() & 1u);
      const RigidTransformd aug = cfg.augment
                                      ? random_se3(rng, cfg.max_translation)
                                      : RigidTransformd::identity();
      PairLoss loss;
      try {
        loss = pair_loss(model, tr[idx], swap_roles, aug, cfg.loss);
      } catch (const DegenerateConfigurationError &e) {
        ++result.skipped;
        spdlog::debug("{}: skipped step ({})", tr[idx].id, e.what());
        continue;
      } catch (const NumericalError &e) {
        ++result.skipped;
        spdlog::debug("{}: skipped step ({})", tr[idx].id, e.what());
        continue;
      }
      if (!std::isfinite(loss.total)) {
        ++result.skipped;
        continue;
      }
      adam.step(model.params, loss.grads);
      ++result.steps;
      losses_csv += std::to_string(result.steps) + "," + fmt_num(loss.mse)
                    + "," + fmt_num(loss.ot) + ","
                    + fmt_num(loss.intersection) + ","
                    + fmt_num(loss.total) + "\n";
    }

    const double score
        = validation_score(model, val, cfg.val_seed, cfg.max_translation);
    result.val_scores.push_back(score);
    result.epochs = epoch;
    const bool accepted = score < cfg.improvement_factor * best;
    if (accepted) {
      best = score;
      stale = 0;
      nlohmann::json meta = train_meta;
      meta["epoch"] = epoch;
      meta["val_median_ligand_rmsd"] = score;
      model.save(result.best_checkpoint, meta);
    } else {
      ++stale;
    }
    val_csv += std::to_string(epoch) + "," + fmt_num(score) + ","
               + (accepted ? "1" : "0") + "\n";
    write_file_atomic(out_dir / "losses.csv", losses_csv);
    write_file_atomic(out_dir / "val.csv", val_csv);
    spdlog::info("epoch {}: val median ligand RMSD {:.4f} A{}", epoch, score,
                 accepted ? " (best)" : "");
    if (stale >= cfg.patience) {
      spdlog::info("early stop after {} epochs without improvement", stale);
      break;
    }
  }
  result.best_score = best;
  nlohmann::json meta = train_meta;
  meta["epoch"] = result.epochs;
  model.save(out_dir / "final.ckpt", meta);
  return result;
}

// ---- evaluation ------------------------------------------------------------

std::string EvalReport::to_csv() const {
  std::string out = "pair_id,crmsd,irmsd,status\n";
  for (const auto &p: pairs) {
    std::string status = p.status;
    for (char &c: status)
      if (c == ',' || c == '\n')
        c = ';';
    out += p.id + "," + fmt_num(p.crmsd) + "," + fmt_num(p.irmsd) + ","
           + status + "\n";
  }
  return out;
}

nlohmann::json EvalReport::summary() const {
  return { { "pairs", pairs.size() },
           { "failures", failures },
           { "crmsd", { { "median", crmsd_median },
                        { "mean", crmsd_mean },
                        { "std", crmsd_std } } },
           { "irmsd", { { "median", irmsd_median },
                        { "mean", irmsd_mean },
                        { "std", irmsd_std } } } };
}

Predictor model_predictor(const Model &model) {
  return [&model](const ProteinGraph &ligand, const ProteinGraph &receptor,
                  std::size_t) { return predict_dock(model, ligand, receptor); };
}

Predictor oracle_predictor(std::uint64_t seed, double t_max) {
  return [seed, t_max](const ProteinGraph &, const ProteinGraph &,
                       std::size_t index) {
    return evaluation_perturbation(seed, index, t_max).inverse();
  };
}

EvalReport evaluate(const Predictor &predict,
                    const std::vector<PreparedPair> &pairs, std::uint64_t seed,
                    int jobs, bool swap_roles, double t_max) {
  EvalReport report;
  report.pairs.resize(pairs.size());
  parallel_for(pairs.size(), jobs, [&](std::size_t i) {
    const PreparedPair &pair = pairs[i];
    const ProteinGraph &moving = swap_roles ? pair.receptor : pair.ligand;
    const ProteinGraph &fixed = swap_roles ? pair.ligand : pair.receptor;
    const ProteinGraph input
        = moved(moving, evaluation_perturbation(seed, i, t_max));
    PairReport &r = report.pairs[i];
    r.id = pair.id;
    Eigen::Matrix3Xd pred = input.x;
    r.status = "ok";
    try {
      pred = apply_transform(predict(input, fixed, i), input.x);
      if (!pred.allFinite())
        throw NumericalError("non-finite prediction");
    } catch (const std::exception &e) {
      pred = input.x;
      r.status = std::string("failed: ") + e.what();
    }
    r.crmsd = crmsd(concat_complex(pred, fixed.x),
                    concat_complex(moving.x, fixed.x));
    try {
      r.irmsd = irmsd(pred, fixed.x, moving.x, fixed.x);
    } catch (const std::invalid_argument &e) {
      r.irmsd = std::numeric_limits<double>::quiet_NaN();
      r.status = std::string("failed: ") + e.what();
    }
  });

  std::vector<double> c, ir;
  for (const auto &r: report.pairs) {
    if (r.status != "ok")
      ++report.failures;
    c.push_back(r.crmsd);
    if (std::isfinite(r.irmsd))
      ir.push_back(r.irmsd);
  }
  if (!c.empty()) {
    report.crmsd_median = median(c);
    report.crmsd_mean = safe_mean(c);
    report.crmsd_std = safe_std(c);
  }
  if (!ir.empty()) {
    report.irmsd_median = median(ir);
    report.irmsd_mean = safe_mean(ir);
    report.irmsd_std = safe_std(ir);
  }
  return report;
}

}  // namespace rigidock
