// SPDX-License-Identifier: Apache-2.0
//
// Training loop, evaluation and the shared per-pair preparation.

#ifndef RIGIDOCK_TRAINER_HPP_
#define RIGIDOCK_TRAINER_HPP_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "rigidock/dataset.hpp"
#include "rigidock/docking.hpp"
#include "rigidock/losses.hpp"

namespace rigidock {

struct TrainConfig {
  ModelConfig model;
  LossWeights loss;
  double learning_rate = 2e-4;
  int patience = 30;                  // epochs without accepted improvement
  double improvement_factor = 0.98;   // accept when score < factor * best
  int max_epochs = 1000;
  std::uint64_t seed = 0;             // init, shuffling, roles, augmentation
  std::uint64_t val_seed = 1;         // fixed validation perturbations
  double max_translation = kDefaultMaxTranslation;
  bool random_roles = true;
  bool augment = true;

  /// "default" (lr 2e-4, patience 30) or "db5" (lr 1e-4, patience 150).
  static TrainConfig preset(std::string_view name);
  /// Throws std::invalid_argument on out-of-range values.
  void validate() const;
};

void to_json(nlohmann::json &j, const TrainConfig &c);
/// Missing keys keep the values already in `c`, so a preset can be
/// overlaid with a partial file.
void from_json(const nlohmann::json &j, TrainConfig &c);

/// Both graphs in the complex frame plus the bound pocket points.
struct PreparedPair {
  std::string id;
  ProteinGraph ligand, receptor;
  std::optional<PocketPoints> pockets;  // empty when there is no contact
};

PreparedPair prepare_pair(const DockingPair &pair, int num_neighbors);
std::vector<PreparedPair> prepare_pairs(const std::vector<DockingPair> &pairs,
                                        int num_neighbors);

/// Same graph with coordinates moved; all features are invariant.
ProteinGraph moved(const ProteinGraph &g, const RigidTransformd &tr);

struct PairLoss {
  double mse = 0, ot = 0, intersection = 0, total = 0;
  std::map<std::string, MatrixXd> grads;
};

/// Loss and parameter gradients for one pair. With `swap_roles` the
/// receptor is the moving protein. `augmentation` is applied to the moving
/// protein's bound coordinates to produce the input.
PairLoss pair_loss(const Model &model, const PreparedPair &pair,
                   bool swap_roles, const RigidTransformd &augmentation,
                   const LossWeights &w);

class Adam {
public:
  explicit Adam(double lr, double beta1 = 0.9, double beta2 = 0.999,
                double eps = 1e-8)
      : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) { }

  void step(ParamStore &params, const std::map<std::string, MatrixXd> &grads);
  int steps() const { return t_; }

private:
  double lr_, beta1_, beta2_, eps_;
  int t_ = 0;
  std::map<std::string, MatrixXd> m_, v_;
};

/// Rigid motion applied to pair `index` during evaluation and validation.
RigidTransformd evaluation_perturbation(std::uint64_t seed, std::size_t index,
                                        double t_max = kDefaultMaxTranslation);

/// sqrt(mean ||x_pred - x_true||^2) on the moving protein, fixed partner, no
/// superimposition. Median over pairs.
double validation_score(const Model &model,
                        const std::vector<PreparedPair> &pairs,
                        std::uint64_t seed, double t_max);

struct TrainResult {
  std::filesystem::path best_checkpoint;
  double best_score = 0;
  int epochs = 0;
  int steps = 0;
  int skipped = 0;                   // no-contact or degenerate steps
  std::vector<double> val_scores;    // one per epoch
};

/// Writes best.ckpt, final.ckpt, losses.csv (step, mse, ot, intersection,
/// total) and val.csv into `out_dir`. Throws std::runtime_error if no
/// training pair has a contact or the validation set is empty.
TrainResult train(const TrainConfig &cfg,
                  const std::vector<DockingPair> &train_pairs,
                  const std::vector<DockingPair> &val_pairs,
                  const std::filesystem::path &out_dir);

// ---- evaluation ------------------------------------------------------------

struct PairReport {
  std::string id;
  double crmsd = 0, irmsd = 0;
  std::string status;  // "ok" or "failed: <reason>"
};

struct EvalReport {
  std::vector<PairReport> pairs;
  double crmsd_median = 0, crmsd_mean = 0, crmsd_std = 0;
  double irmsd_median = 0, irmsd_mean = 0, irmsd_std = 0;
  int failures = 0;

  /// pair_id,crmsd,irmsd,status
  std::string to_csv() const;
  nlohmann::json summary() const;
};

/// Returns (R, t) moving `ligand` onto `receptor`; `index` is the pair's
/// position in the evaluated list.
using Predictor = std::function<RigidTransformd(
    const ProteinGraph &ligand, const ProteinGraph &receptor,
    std::size_t index)>;

Predictor model_predictor(const Model &model);
/// Undoes evaluation_perturbation exactly; for validating the pipeline.
Predictor oracle_predictor(std::uint64_t seed,
                           double t_max = kDefaultMaxTranslation);

/// Per pair: perturb the moving protein, predict, compute CRMSD and IRMSD
/// against the bound complex. A failed prediction falls back to the
/// perturbed input. Pairs run on `jobs` threads; results do not depend on
/// the thread count.
EvalReport evaluate(const Predictor &predict,
                    const std::vector<PreparedPair> &pairs, std::uint64_t seed,
                    int jobs = 1, bool swap_roles = false,
                    double t_max = kDefaultMaxTranslation);

}  // namespace rigidock

#endif  // RIGIDOCK_TRAINER_HPP_
