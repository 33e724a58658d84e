#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "dpg/harness/train.hpp"

namespace dpg::cli {

/// Every tunable of a run. One seed root feeds model init, shuffling and
/// synthetic data through name-keyed derivation.
struct RunConfig {
  ModelConfig model;
  TrainConfig train;
  std::uint64_t seed = 0;
  std::size_t chip_size = 64;  // synthetic chip extent

  void set_seed(std::uint64_t s) {
    seed = s;
    model.seed = s;
    train.seed = s;
  }
};

/// Flat JSON object; keys not listed in `config_keys()` are rejected, as are
/// values of the wrong type. Missing keys keep their defaults.
RunConfig parse_run_config(const std::string& json_text);
RunConfig load_run_config(const std::filesystem::path& path);
std::string dump_run_config(const RunConfig& config);
const std::vector<std::string>& config_keys();

}  // namespace dpg::cli
