#pragma once

#include "inornet/config.hpp"
#include "inornet/dataset.hpp"
#include "inornet/exemplars.hpp"
#include "inornet/fairness.hpp"
#include "inornet/metrics.hpp"
#include "inornet/model.hpp"
#include "inornet/optimizer.hpp"

#include <functional>
#include <set>
#include <span>
#include <string>
#include <vector>

namespace inornet {

/// A loaded sample with its classifier-column label.
struct LabeledCloud {
  std::string id;
  PointCloud cloud;
  int label = 0;
};

/// Manifest samples relabelled to classifier columns (schedule order).
struct IncrementalData {
  std::vector<std::string> class_names;   // by column
  std::vector<int> class_order;           // column -> manifest class index
  std::vector<std::vector<int>> states;   // columns introduced per state
  std::vector<LabeledCloud> train, test;

  const LabeledCloud& train_by_id(const std::string& id) const;
  static IncrementalData load(const DatasetManifest& manifest, const IncrementalSchedule& schedule,
                              std::size_t points);

 private:
  std::map<std::string, std::size_t> train_index_;
  void index();
};

/// Mean cross-entropy of softmax(logits) against `labels`.
/// Throws std::out_of_range on a bad label.
double classification_loss(std::span<const RowVec> logits, std::span<const int> labels);

/// L_clc + L_reg + λ1 L_cri + λ2 L_cst.
double total_objective(double clc, double reg, double cri, double cst, const TrainConfig& cfg);

struct LossRecord {
  double clc = 0.0;
  double cst = 0.0;
  double cri = 0.0;
  double reg = 0.0;
  std::size_t samples = 0;
};

struct EpochRecord {
  int state = 0;
  int epoch = 0;
  LossRecord losses;
  double objective = 0.0;
  double wfc_factor = 1.0;
};

struct Prediction {
  RowVec probs;
  RowVec rectified;  // equals probs when SFC is off or not applicable
  RowVec global_feature;
  int label = 0;
};

/// Visiting order of a pool of `n` samples for one epoch.
std::vector<std::size_t> epoch_permutation(std::uint64_t seed, int state, int epoch, std::size_t n);
/// Augmentation seed of the sample at `position` of that order.
std::uint64_t augment_seed(std::uint64_t seed, int state, int epoch, std::size_t position);

/// Runs `fn(i)` for i in [0, n) on up to `threads` workers.
void parallel_for(std::size_t n, std::size_t threads, const std::function<void(std::size_t)>& fn);

class IncrementalTrainer {
 public:
  IncrementalTrainer(TrainConfig cfg, std::vector<std::vector<int>> states);

  const TrainConfig& config() const { return cfg_; }
  TrainConfig& config() { return cfg_; }
  InorNet& model() { return model_; }
  const InorNet& model() const { return model_; }
  PrototypeBank& bank() { return bank_; }
  const PrototypeBank& bank() const { return bank_; }
  ScoreStats& stats() { return stats_; }
  const ScoreStats& stats() const { return stats_; }
  ExemplarStore& exemplars() { return store_; }
  const ExemplarStore& exemplars() const { return store_; }
  const std::vector<std::vector<int>>& states() const { return states_; }

  /// Number of completed states (0 before training).
  int completed_states() const { return completed_; }
  void set_completed_states(int s) { completed_ = s; }

  /// Classes introduced in 1-based state `s`, and those seen before it.
  std::set<int> new_classes(int s) const;
  std::set<int> past_classes(int s) const;

  ForwardOptions forward_options() const;

  /// Grows the classifier for state `s` and resets all optimizers.
  void begin_state(int s);
  /// One Alg. 1 iteration: a shared forward pass, prototype update, then the
  /// encoder/classifier, attention and critic steps in that order.
  LossRecord train_batch(std::span<const LabeledCloud* const> batch, int s);
  EpochRecord train_epoch(std::span<const LabeledCloud* const> pool, int s, int epoch);
  /// Records score statistics and rebalances/extends the exemplar store.
  void finish_state(int s, std::span<const LabeledCloud* const> new_data,
                    std::span<const LabeledCloud* const> replay);

  Prediction predict(const PointCloud& pc, bool sfc) const;
  std::vector<Prediction> predict_all(std::span<const LabeledCloud* const> samples, bool sfc) const;

  /// Exemplar clouds currently held, in (column, rank) order.
  std::vector<const LabeledCloud*> exemplar_pool(const IncrementalData& data) const;

  std::vector<std::string> warnings;

 private:
  TrainConfig cfg_;
  std::vector<std::vector<int>> states_;
  InorNet model_;
  PrototypeBank bank_;
  ScoreStats stats_;
  ExemplarStore store_;
  Adam opt_ec_, opt_att_, opt_crit_;
  int completed_ = 0;
};

struct RunResult {
  RunMetrics metrics;         // evaluated with the configured SFC flag
  RunMetrics metrics_no_sfc;  // same checkpoints, SFC disabled
  std::vector<EpochRecord> trace;
  std::vector<std::string> warnings;
};

using StateCallback = std::function<void(const IncrementalTrainer&, const IncrementalData&, int state)>;

/// Evaluates the trainer on `samples` (classes seen so far) for state `s`.
StateMetrics evaluate_state(const IncrementalTrainer& trainer, const IncrementalData& data,
                            std::span<const LabeledCloud* const> samples, int s, bool sfc);

/// Test samples whose class was introduced at or before state `s`.
std::vector<const LabeledCloud*> seen_samples(const std::vector<LabeledCloud>& samples,
                                              const IncrementalData& data, int s);

RunResult run_incremental(const TrainConfig& cfg, const IncrementalData& data, const std::string& run_id,
                          const StateCallback& on_state = {});
/// Loads the manifest and schedule named in `cfg`.
IncrementalData load_incremental_data(const TrainConfig& cfg);

}  // namespace inornet
