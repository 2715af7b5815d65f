#pragma once

#include "rispls/dataset.hpp"
#include "rispls/model.hpp"

namespace rispls {

struct TrainConfig {
  std::size_t batch_size = 64;
  std::size_t epochs = 30;
  double lr = 1e-4;
  double gamma = 0.1;
  HeadKind head = HeadKind::model_based;
  bool residual_on = true;
  bool two_stage_on = true;
  std::string dataset;
  std::string checkpoint;
  std::string log_csv;           // per-epoch rows, empty to skip
  std::size_t val_samples = 512;
  std::uint64_t seed = 1;

  void validate() const {
    if (batch_size < 1) throw config_error("train: batch_size must be >= 1");
    if (gamma < 0) throw config_error("train: gamma must be >= 0");
  }
};

struct EpochRow {
  std::size_t epoch = 0;
  double mean_loss = 0;
  double val_see = 0;
  double wall_seconds = 0;
};

struct TrainReport {
  std::vector<EpochRow> epochs;
  std::size_t best_epoch = 0;
  double best_val_see = 0;
  double total_seconds = 0;
};

// Unsupervised end-to-end training; selects the checkpoint by best
// validation mean hard SEE (the loss uses the soft secrecy form).
TrainReport train(const TrainConfig& cfg);

struct EvalRow {
  std::size_t sample = 0;
  double see = 0;
  double oracle_see = 0;
  double ratio = 0;
  bool feasible = true;
};

struct EvalReport {
  std::vector<EvalRow> rows;
  double mean_see = 0;
  double mean_ratio = 0;
  double median_ratio = 0;
  std::size_t violations = 0;
  double mean_inference_ms = 0;
};

// Evaluates a model on labeled samples. p_max_override (if > 0) replaces
// the dataset's power budget — used by the power sweep.
EvalReport evaluate(const TwoStageModel& model, const Dataset& ds, HeadKind head,
                    ModelFlags flags, std::size_t batch_size = 64,
                    double p_max_override = 0, std::size_t limit = 0);

// Evaluation without labels (mean hard SEE only).
double mean_hard_see(const TwoStageModel& model,
                     std::span<const ChannelRealization> samples, HeadKind head,
                     ModelFlags flags, double p_max, double p_c,
                     std::size_t batch_size = 64);

}  // namespace rispls
