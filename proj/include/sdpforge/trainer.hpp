#pragma once

// Training loop, the two-phase protocol and the data-quantity sweep.
//
// Protocol per seed: initialize, train on the silver instances, replace the
// head, then for every train domain fine-tune a copy of that model and
// evaluate it on the test split of every domain. Without silver instances
// the first phase is skipped (baseline mode); the initialization path is the
// same in both modes, so an empty silver set reproduces the baseline.

#include <array>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "sdpforge/instance_io.hpp"
#include "sdpforge/metrics.hpp"
#include "sdpforge/model.hpp"

namespace sdpforge {

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct TrainConfig {
  ModelDims dims;
  double lr_pretrain = 1e-5;
  double lr_finetune = 2e-5;
  std::size_t batch_pretrain = 12;
  std::size_t batch_finetune = 12;
  std::size_t epochs_pretrain = 20;
  std::size_t epochs_finetune = 20;
  // Epochs without a dev improvement before stopping; 0 disables.
  std::size_t patience = 5;
  std::vector<std::uint64_t> seeds = {4012, 5096, 8878, 8857, 9908};
  AdamConfig adam;
  // Cap on silver instances (a prefix of the input); 0 means no cap.
  std::size_t max_instances = 0;
  MacroAverage averaging = MacroAverage::kExcludeNoRelation;
  // Worker threads for independent seeds; 0 reads SDPFORGE_THREADS, else
  // hardware concurrency.
  std::size_t threads = 0;

  // Throws kInvalidConfig.
  void validate() const;
  nlohmann::ordered_json to_json() const;
  // Keys absent from `j` keep their current value. Throws kInvalidConfig.
  void update_from_json(const nlohmann::json& j);
};

// Label names to class indices; throws kLabelOutOfRange on unknown labels.
std::vector<EncodedInstance> encode_instances(const Vocab& vocab,
                                              std::span<const InstanceRecord> records,
                                              std::span<const std::string> labels);

struct PhaseOptions {
  double lr = 1e-3;
  std::size_t batch_size = 12;
  std::size_t epochs = 20;
  std::size_t patience = 5;
  AdamConfig adam;
  std::uint64_t seed = 0;
  MacroAverage averaging = MacroAverage::kExcludeNoRelation;
};

struct PhaseResult {
  ModelParams params;
  std::vector<double> epoch_loss;  // mean training loss per epoch
  std::vector<double> dev_macro_f1;  // empty without a dev set
  std::size_t best_epoch = 0;  // 1-based; last epoch without a dev set
  double final_loss = 0.0;
};

// Mini-batch Adam on mean cross-entropy with a seeded shuffle per epoch.
// With a non-empty dev set the parameters of the best dev Macro-F1 epoch
// (earliest on ties) are returned. Throws kLabelOutOfRange and
// kNonFiniteLoss.
PhaseResult train_phase(ModelParams params, std::span<const EncodedInstance> train,
                        std::span<const std::string> labels, const PhaseOptions& options,
                        std::span<const EncodedInstance> dev = {});

EvalReport evaluate(const ModelParams& params, std::span<const EncodedInstance> instances,
                    std::span<const std::string> labels,
                    MacroAverage averaging = MacroAverage::kExcludeNoRelation);

struct DomainSplits {
  std::vector<InstanceRecord> train;
  std::vector<InstanceRecord> dev;
  std::vector<InstanceRecord> test;
};

using FinetuneData = std::map<std::string, DomainSplits>;

struct PhaseCurve {
  std::vector<double> epoch_loss;
  std::vector<double> dev_macro_f1;
  std::size_t best_epoch = 0;
};

struct SeedRun {
  std::uint64_t seed = 0;
  std::optional<PhaseCurve> pretrain;
  std::map<std::string, PhaseCurve> finetune;  // by train domain
  // (train domain, test domain) -> Macro-F1
  std::map<std::pair<std::string, std::string>, double> macro_f1;
};

struct ReportCell {
  std::string train_domain;
  std::string test_domain;
  std::vector<double> per_seed;  // in config seed order
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation, 0 for one seed
};

struct TrainReport {
  std::string mode;  // "baseline" or "pretrained"
  TrainConfig config;
  std::size_t pretrain_instances = 0;
  std::map<std::string, std::array<std::size_t, 3>> finetune_instances;
  std::vector<std::string> pretrain_labels;
  std::vector<std::string> finetune_labels;
  std::vector<ReportCell> cells;  // train domain major, test domain minor
  std::vector<SeedRun> runs;

  const ReportCell* cell(std::string_view train_domain, std::string_view test_domain) const;
  nlohmann::ordered_json to_json() const;
  // train_domain, test_domain, seed, macro_f1
  std::string to_tsv() const;
};

// Labels of the fine-tuning phase: every label in the data plus
// "no-relation", sorted.
std::vector<std::string> finetune_label_set(const FinetuneData& data);
// Labels of the silver phase, sorted.
std::vector<std::string> pretrain_label_set(std::span<const InstanceRecord> instances);

TrainReport run_protocol(std::span<const InstanceRecord> pretrain,
                         const FinetuneData& finetune, const TrainConfig& config);

struct SweepPoint {
  std::size_t instances = 0;
  TrainReport report;
  // In-domain dev Macro-F1 per train domain, mean and std over seeds.
  std::map<std::string, std::pair<double, double>> by_domain;
  double average = 0.0;
};

struct SweepResult {
  std::vector<SweepPoint> points;
  // instances, train_domain, mean, std; one "average" row per point
  std::string to_tsv() const;
  nlohmann::ordered_json to_json() const;
};

// One run_protocol per pre-training list, scored on the dev splits. An
// empty list is the baseline point.
SweepResult sweep(std::span<const std::vector<InstanceRecord>> pretrain_lists,
                  const FinetuneData& finetune, const TrainConfig& config);

double mean_of(std::span<const double> values);
double sample_std(std::span<const double> values);

}  // namespace sdpforge
