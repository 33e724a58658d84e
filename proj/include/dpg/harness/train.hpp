#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "dpg/drdlf/model.hpp"
#include "dpg/harness/dataset.hpp"
#include "dpg/harness/metrics.hpp"

namespace dpg {

struct TrainConfig {
  int epochs = 100;
  std::size_t batch_size = 16;
  double lr = 1e-4;
  std::uint64_t seed = 0;

  // Throws ConfigError. lr may be 0 (a frozen run); everything else positive.
  void validate() const;
};

struct StepRecord {
  std::uint64_t step = 0;  // optimizer step, starting at 1
  int epoch = 0;           // starting at 1
  double loss = 0;
};

struct EpochRecord {
  int epoch = 0;
  double mean_loss = 0;       // sample-weighted over the epoch
  double train_accuracy = 0;  // of the training-mode predictions seen during the epoch
};

struct TrainLog {
  std::vector<StepRecord> steps;
  std::vector<EpochRecord> epochs;

  // One {"step","epoch","loss"} line per step, then one
  // {"epoch","mean_loss","train_accuracy"} line after each epoch's steps.
  std::string to_jsonl() const;
};

/// Adam on mean cross-entropy over seeded per-epoch permutations; the last
/// partial batch is kept. BN runs in training mode.
/// Throws ConfigError if the dataset is empty, smaller than a batch, or its
/// class count differs from the model's.
template <typename T>
TrainLog train(DpigNet<T>& net, const Dataset& data, const TrainConfig& config,
               const std::function<void(const StepRecord&)>& on_step = {});

struct EvalResult {
  ConfusionMatrix matrix;
  double accuracy = 0;
  std::uint64_t streaming_correct = 0;  // counted independently of the matrix
  std::vector<int> predictions;
};

/// BN in eval mode. Throws ConfigError on an empty dataset.
template <typename T>
EvalResult evaluate(DpigNet<T>& net, const Dataset& data, std::size_t batch_size = 16);

/// Same bookkeeping for externally supplied predictions.
EvalResult evaluate_predictions(const std::vector<std::string>& class_names,
                                const std::vector<int>& labels, const std::vector<int>& predictions);

}  // namespace dpg
