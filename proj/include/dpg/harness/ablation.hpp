#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "dpg/harness/train.hpp"

namespace dpg {

enum class AblationAxis { kInputs, kMainBranch, kFusion, kSaModule, kDrdlf, kNDrdb };

const std::vector<std::string>& ablation_axis_names();
// Throws ConfigError listing the valid axes.
AblationAxis parse_ablation_axis(const std::string& name);
std::string ablation_axis_name(AblationAxis axis);

struct AblationRow {
  std::string label;
  ModelConfig config;
};

/// The configurations of one axis in table order, derived from `base`.
std::vector<AblationRow> ablation_rows(const ModelConfig& base, AblationAxis axis);

/// Structure measured on a built model, not read back from the config.
struct StructuralProbe {
  std::size_t params = 0;        // trainable entries in the built store
  std::size_t z_s_channels = 0;  // from a traced forward pass
  std::size_t drdb_blocks = 0;   // traced drdb{k} stages
  std::vector<int> gated;        // branches with a cross-attention trace
  bool sa_params = false;        // SA parameters present
  int main_branch = -1;          // branch whose encoder output equals Z_main
  bool vh_free = false;          // forward stays finite with a NaN-filled S_VH plane
};

// Builds the model at `config` and runs one forward pass on a synthetic chip.
StructuralProbe probe_structure(const ModelConfig& config);

struct AblationResult {
  AblationRow row;
  StructuralProbe probe;
  std::optional<double> train_accuracy;
  std::optional<double> test_accuracy;
};

struct AblationOptions {
  bool structural_only = true;
  TrainConfig train;
  // Called per row so each configuration preprocesses only the channels it uses.
  std::function<Dataset(const ModelConfig&)> train_data;
  std::function<Dataset(const ModelConfig&)> test_data;
};

std::vector<AblationResult> ablation_suite(const ModelConfig& base, AblationAxis axis,
                                           const AblationOptions& options);

std::string ablation_csv(AblationAxis axis, const std::vector<AblationResult>& results);

}  // namespace dpg
