#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "mtlsa/confweight.hpp"
#include "mtlsa/dataio.hpp"
#include "mtlsa/distweight.hpp"
#include "mtlsa/labelops.hpp"
#include "mtlsa/nncore.hpp"
#include "mtlsa/weighting.hpp"

namespace mtlsa {

enum class Strategy { Stl, Joint, MtlWf, MtlSa };
std::string_view strategy_name(Strategy s) noexcept;
/// "stl", "joint", "mtl-wf", "mtl-sa"; anything else throws ConfigError.
Strategy parse_strategy(std::string_view name);

/// Cluster-to-domain distance used for w_g.
enum class DistanceKind { Emd, Mmd };

struct TrainConfig {
  Strategy strategy = Strategy::MtlSa;
  WeightMode weight_mode = WeightMode::full();
  DistanceKind distance = DistanceKind::Emd;
  std::size_t epochs = 10;  // alternating epochs, t_max
  std::size_t init_epochs = 5;
  std::size_t batch_size = 32;
  double learning_rate = 1e-4;
  double temperature = kDefaultTemperature;
  double kappa = kDefaultKappa;
  double lambda = kDefaultLambda;
  std::size_t clusters_a = kDefaultClusters;
  std::size_t clusters_b = kDefaultClusters;
  std::uint64_t seed = 0;
  std::vector<std::size_t> hidden = {16};  // trunk widths after the input
  std::vector<std::size_t> head_hidden;
  Activation activation = Activation::Tanh;

  /// Throws ConfigError on a nonpositive batch size, rate, temperature,
  /// lambda, cluster count, or kappa outside (0,1).
  void validate() const;
};

/// Subsystem seeds derived from TrainConfig::seed.
struct SeedPlan {
  static std::uint64_t net_init(std::uint64_t seed) { return seed + 1; }
  static std::uint64_t shuffle(std::uint64_t seed) { return seed + 2; }
  static std::uint64_t stl_b_init(std::uint64_t seed) { return seed + 3; }
  static std::uint64_t stl_b_shuffle(std::uint64_t seed) { return seed + 4; }
  /// GMM seed for the active (`second == false`) or labeled domain in epoch t.
  static std::uint64_t gmm(std::uint64_t seed, std::size_t epoch, bool second) {
    return seed + 1000 + 2 * epoch + (second ? 1 : 0);
  }
};

/// One alternating epoch: 1-based index, active dataset and the frozen
/// predictor from the end of the previous epoch.
struct EpochPhase {
  std::size_t epoch = 1;
  Task active = Task::A;
  MultiTaskNet frozen;
};

/// Even epochs train on dataset B, odd epochs on dataset A.
inline Task active_dataset(std::size_t epoch) noexcept {
  return epoch % 2 == 0 ? Task::B : Task::A;
}

/// Net, optimizer and shuffle stream owned by one training run.
struct TrainState {
  MultiTaskNet net;
  AdamState adam;
  std::mt19937_64 shuffle_rng;
};

TrainState make_state(const TrainConfig& config, std::size_t input_dim, std::size_t classes_a,
                      std::size_t classes_b);

/// One row of the history file.
struct HistoryRecord {
  std::size_t epoch = 0;
  std::string phase;  // "stl", "joint", "A" or "B"
  double loss_own_task = 0.0;
  double loss_aux_task = 0.0;
  double train_acc_a = 0.0;
  double train_acc_b = 0.0;
  double test_acc_a = 0.0;  // NaN without a test set
  double test_acc_b = 0.0;
  double mean_w = 0.0;
  double fraction_w_above_half = 0.0;
};
bool same_record(const HistoryRecord& x, const HistoryRecord& y);  // NaN == NaN

inline constexpr std::string_view kHistoryHeader =
    "epoch,phase,loss_own_task,loss_aux_task,train_acc_a,train_acc_b,test_acc_a,test_acc_b,"
    "mean_w,fraction_w_above_0.5";
std::string write_history(std::span<const HistoryRecord> history);
std::vector<HistoryRecord> read_history(std::string_view text,
                                        const std::string& source = "history");

/// Soft, pseudo and sharpened labels for the task lacking ground truth.
struct AugmentTargets {
  std::vector<LabelVector> soft;
  std::vector<LabelVector> pseudo;
  std::vector<LabelVector> sharpened;
};

AugmentTargets make_targets(const MultiTaskNet& frozen, Task augment_task, const Matrix& inputs,
                            double temperature);

/// Weights for training `augment_task` with `active` (unlabeled for that task),
/// using `labeled` (the dataset that carries `augment_task` labels) as the
/// reference domain. Features come from the frozen extractor of `augment_task`.
struct WeightReport {
  std::vector<SampleWeightRecord> records;
  std::vector<double> w;  // combined, aligned with `active`
};

WeightReport compute_weights(const MultiTaskNet& frozen, Task augment_task,
                             const DisjointDataset& active, const DisjointDataset& labeled,
                             const AugmentTargets& targets, const TrainConfig& config,
                             std::uint64_t gmm_seed_active, std::uint64_t gmm_seed_labeled);

/// Evaluation sets; any may be absent.
struct EvalSets {
  const DisjointDataset* test_a = nullptr;
  const DisjointDataset* test_b = nullptr;
};

double accuracy(const MultiTaskNet& net, Task task, const DisjointDataset& data);

/// Mixed-batch epochs where every sample supervises only its own head.
/// Throws std::invalid_argument when either dataset is empty.
std::vector<HistoryRecord> joint_init(TrainState& state, const DisjointDataset& a,
                                      const DisjointDataset& b, std::size_t init_epochs,
                                      std::size_t batch_size, EvalSets eval = {});

struct EpochResult {
  HistoryRecord record;
  std::vector<SampleWeightRecord> weights;  // empty for mtl-wf
  std::vector<LabelVector> aux_targets;     // interpolated targets actually used
  double max_w = 0.0;
};

/// Targets and weights from the frozen snapshot over the whole active dataset,
/// then shuffled mini-batch Adam steps on both heads.
EpochResult run_epoch(TrainState& state, const EpochPhase& phase, const DisjointDataset& a,
                      const DisjointDataset& b, const TrainConfig& config, EvalSets eval = {});

struct TrainResult {
  MultiTaskNet net;
  std::optional<MultiTaskNet> task_b_net;  // separate task-B network under STL
  std::vector<HistoryRecord> history;
  std::vector<SampleWeightRecord> final_weights;  // last alternating epoch
  std::optional<Task> final_weights_task;         // task those weights augmented

  const MultiTaskNet& net_for(Task t) const {
    return t == Task::B && task_b_net ? *task_b_net : net;
  }
};

/// STL and joint run init_epochs + ceil(epochs / 2) mixed epochs so every
/// strategy sees each dataset equally often; mtl-wf and mtl-sa run joint_init
/// followed by `epochs` alternating epochs.
TrainResult train(const TrainConfig& config, const DisjointDataset& a, const DisjointDataset& b,
                  EvalSets eval = {});

}  // namespace mtlsa
