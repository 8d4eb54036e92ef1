#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "scotti/dataset.hpp"
#include "scotti/losses.hpp"
#include "scotti/model.hpp"

namespace scotti {

struct TaskMask {
  bool pose = true;
  bool action = true;
  bool progress = true;

  bool any() const { return pose || action || progress; }
};

struct TrainConfig {
  double lr = 1e-4;
  double weight_decay = 1e-4;  // decoupled: applied to the parameter, not the gradient
  int epochs = 25;
  int batch_size = 32;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  int lr_step_epochs = 10;   // halve the rate every this many epochs
  double lr_decay = 0.5;
  uint64_t seed = 0;
  LossWeights weights;
  TaskMask tasks;
  bool augment = true;
  int max_shift = 2;

  double lr_at(int epoch) const;
  void validate() const;
  std::string to_json_string() const;
  static TrainConfig from_json_string(const std::string& text);
};

// first/second moment buffers per parameter, in declaration order
struct AdamState {
  std::vector<std::vector<float>> m;
  std::vector<std::vector<float>> v;
  int64_t step = 0;

  static AdamState init(ScottiModel& model);
};

// one decoupled-weight-decay Adam step over every parameter that received a
// gradient this step; untouched parameters (e.g. masked-off heads) are left
// exactly as they are
void adam_step(ScottiModel& model, AdamState& state, const TrainConfig& config, double lr_now);

struct EpochStats {
  int epoch = 0;
  double total = 0.0;
  double pose = 0.0;      // mpjpe + mpjae(rad), unweighted
  double action = 0.0;    // cross-entropy
  double progress = 0.0;  // mse
  double lr = 0.0;
};

struct EvalMetrics {
  double mpjpe_mm = 0.0;
  double accuracy_pct = 0.0;
  double progress_mse = 0.0;
  double app = 0.0;
  int64_t n_samples = 0;
  std::vector<std::vector<int64_t>> confusion;
  PMCurve pm_curve;
};

struct LabelReads {
  int64_t pose = 0;
  int64_t action = 0;
  int64_t progress = 0;
};

struct RunReport {
  uint64_t seed = 0;
  int split_id = 0;
  std::string config_hash;
  std::vector<EpochStats> epochs;
  EvalMetrics final;
  LabelReads label_reads;

  std::string to_json_string() const;
  std::string loss_csv() const;  // "epoch,total,pose,action,progress,lr"
};

// windows for every record in the set (labels must be populated)
std::vector<Sample> build_samples(const SequenceSet& set, int window);

std::vector<Sample> filter_by_subjects(const SequenceSet& set, const std::vector<Sample>& samples,
                                       const std::vector<std::string>& subjects);

// shuffled mini-batch training with train-time augmentation; deterministic
// for a fixed (seed, config, data)
RunReport train(ScottiModel& model, const SequenceSet& set, const std::vector<Sample>& samples,
                const TrainConfig& config);

EvalMetrics evaluate(const ScottiModel& model, const SequenceSet& set,
                     const std::vector<Sample>& samples, int batch_size = 32);

struct ProtocolReport {
  std::vector<SubjectSplit> splits;
  std::vector<RunReport> runs;
  EvalMetrics average;  // arithmetic mean of the four headline metrics

  std::string to_json_string() const;
};

// fresh model per split, train on the train subjects, evaluate on the held
// out ones, average across partitions. on_split fires as each partition
// finishes so partial results survive an aborted protocol.
ProtocolReport run_protocol(const SequenceSet& set, int n_partitions, const ScottiConfig& mcfg,
                            const TrainConfig& tcfg,
                            const std::function<void(const RunReport&)>& on_split = {});

struct AblationRow {
  std::string name;
  TaskMask mask;
  EvalMetrics metrics;
};

struct AblationTable {
  std::vector<AblationRow> rows;  // pose-only, action-only, progress-only, all-tasks
  std::vector<std::string> notes;

  std::string to_csv() const;  // blanks for metrics a row's tasks do not produce
  std::string to_json_string() const;
};

AblationTable task_ablation(const SequenceSet& set, int n_partitions, const ScottiConfig& mcfg,
                            const TrainConfig& tcfg);

struct RegionImportance {
  int foot = 0;  // 0 left, 1 right
  int row_band = 0;
  int col_band = 0;
  int64_t r0 = 0, r1 = 0, c0 = 0, c1 = 0;  // cols within the foot half
  double masked_loss = 0.0;
  double importance = 0.0;  // masked loss - baseline loss
};

// mean of the weighted total loss over samples, no augmentation
double eval_total_loss(const ScottiModel& model, const SequenceSet& set,
                       const std::vector<Sample>& samples, const LossWeights& weights,
                       int batch_size = 32);

struct RegionReport {
  double baseline_loss = 0.0;
  std::vector<RegionImportance> regions;

  std::string to_csv() const;
};

// zero one region of every input frame and measure the loss increase
RegionReport region_importance(const ScottiModel& model, const SequenceSet& set,
                               const std::vector<Sample>& samples, int grid_rows, int grid_cols,
                               const LossWeights& weights, int batch_size = 32);

std::string config_hash(const ScottiConfig& mcfg, const TrainConfig& tcfg);

}  // namespace scotti
