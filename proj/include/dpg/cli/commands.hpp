#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include "dpg/cli/run_config.hpp"
#include "dpg/harness/ablation.hpp"

namespace dpg::cli {

enum class Precision { kF32, kF64 };
Precision parse_precision(const std::string& name);

struct SynthSummary {
  std::size_t chips = 0;
  std::size_t train = 0;
  std::size_t test = 0;
};

/// Writes <out>/chips/*.sarc, train.jsonl, test.jsonl and classes.json.
/// Per class, the first ceil(per_class/2) chips go to train.
SynthSummary cmd_synth(int classes, std::size_t per_class, const RunConfig& config,
                       const std::filesystem::path& out);

struct TrainSummary {
  TrainLog log;
  double train_accuracy = 0;  // eval-mode pass over the training set after training
};

/// Writes <out>/weights.dpgw, <out>/train_log.jsonl and <out>/config.json.
TrainSummary cmd_train(const std::filesystem::path& manifest, const RunConfig& config,
                       const std::filesystem::path& out, Precision precision,
                       std::size_t workers);

struct EvalSource {
  std::optional<std::filesystem::path> weights;      // trained model
  std::optional<std::filesystem::path> predictions;  // JSONL {"label","prediction"}
  std::optional<std::filesystem::path> classes;      // class table for `predictions`
  bool stub_perfect = false;                         // predictions := manifest labels
};

/// Writes <out>/confusion.csv. A manifest is required unless predictions are given.
EvalResult cmd_eval(const std::optional<std::filesystem::path>& manifest, const EvalSource& source,
                    const RunConfig& config, const std::filesystem::path& out, Precision precision,
                    std::size_t workers);

struct AblateInputs {
  std::optional<std::filesystem::path> train_manifest;  // both set: train each row
  std::optional<std::filesystem::path> test_manifest;
};

/// Writes <out>/ablation_<axis>.csv and returns its text.
std::string cmd_ablate(const std::string& axis, const RunConfig& config, const AblateInputs& inputs,
                       const std::filesystem::path& out, std::size_t workers);

std::size_t cmd_params(const RunConfig& config);

}  // namespace dpg::cli
