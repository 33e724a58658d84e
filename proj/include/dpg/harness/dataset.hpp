#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "dpg/pccaf/pccaf.hpp"
#include "dpg/sardata/chip.hpp"
#include "dpg/sardata/manifest.hpp"

namespace dpg {

/// Preprocessed samples in manifest order.
struct Dataset {
  std::vector<sar::GuidedTriple> samples;
  std::vector<int> labels;
  std::vector<std::string> class_names;

  std::size_t size() const noexcept { return samples.size(); }
  std::size_t class_count() const noexcept { return class_names.size(); }
  std::vector<std::size_t> class_histogram() const;
};

/// Reads every chip of `manifest` and derives the channels `config` enables,
/// resized to config.input_size. `workers` chips are processed concurrently;
/// the result does not depend on it.
Dataset load_dataset(const sar::DatasetManifest& manifest, const ModelConfig& config,
                     std::size_t workers = 1);

/// In-memory synthetic dataset: `per_class` chips of each class, seeds
/// first_seed, first_seed+1, ... per class.
Dataset synth_dataset(int classes, std::size_t per_class, std::uint64_t first_seed,
                      std::size_t chip_size, const ModelConfig& config);

/// Stacks the selected samples into per-branch [N,1,S,S] tensors.
template <typename T>
BranchInputs<T> make_batch(const Dataset& data, std::span<const std::size_t> indices,
                           const ModelConfig& config);

}  // namespace dpg
