#include "dpg/harness/dataset.hpp"

#include "dpg/sardata/chip_io.hpp"
#include "dpg/sardata/synth.hpp"
#include "dpg/tensor/errors.hpp"
#include "dpg/tensor/parallel.hpp"

namespace dpg {

std::vector<std::size_t> Dataset::class_histogram() const {
  std::vector<std::size_t> h(class_count(), 0);
  for (int l : labels) ++h.at(static_cast<std::size_t>(l));
  return h;
}

Dataset load_dataset(const sar::DatasetManifest& manifest, const ModelConfig& config,
                     std::size_t workers) {
  config.validate();
  Dataset d;
  d.class_names = manifest.class_names;
  d.samples.resize(manifest.records.size());
  d.labels.resize(manifest.records.size());
  const auto saved = num_threads();
  set_num_threads(static_cast<int>(workers));
  try {
    parallel_for(manifest.records.size(), [&](std::size_t i) {
      const auto& rec = manifest.records[i];
      auto chip = sar::read_chip(rec.path);
      chip.label = rec.label;
      d.samples[i] = sar::make_guided_triple(chip, config.input_size, config.channel_mask());
      d.labels[i] = rec.label;
    });
  } catch (...) {
    set_num_threads(saved);
    throw;
  }
  set_num_threads(saved);
  return d;
}

Dataset synth_dataset(int classes, std::size_t per_class, std::uint64_t first_seed,
                      std::size_t chip_size, const ModelConfig& config) {
  Dataset d;
  for (int k = 0; k < classes; ++k) d.class_names.push_back("class" + std::to_string(k));
  for (int k = 0; k < classes; ++k)
    for (std::size_t i = 0; i < per_class; ++i) {
      const auto chip = sar::synth_chip(k, first_seed + i, chip_size, classes);
      d.samples.push_back(sar::make_guided_triple(chip, config.input_size, config.channel_mask()));
      d.labels.push_back(k);
    }
  return d;
}

template <typename T>
BranchInputs<T> make_batch(const Dataset& data, std::span<const std::size_t> indices,
                           const ModelConfig& config) {
  const auto s = config.input_size, n = indices.size();
  BranchInputs<T> out;
  for (int b : config.enabled_branches()) {
    std::vector<T> buf(n * s * s);
    for (std::size_t i = 0; i < n; ++i) {
      const auto& g = data.samples.at(indices[i]);
      const auto& img = b == 0 ? g.i1 : b == 1 ? g.i2 : g.i3;
      if (img.height != s || img.width != s)
        throw ShapeError("make_batch: sample '" + g.id + "' channel " + branch_name(b) + " is " +
                         std::to_string(img.height) + "x" + std::to_string(img.width) +
                         ", model expects " + std::to_string(s));
      std::copy(img.pixels.begin(), img.pixels.end(), buf.begin() + i * s * s);
    }
    out[b] = Tensor<T>({n, 1, s, s}, std::move(buf));
  }
  return out;
}

template BranchInputs<float> make_batch(const Dataset&, std::span<const std::size_t>,
                                        const ModelConfig&);
template BranchInputs<double> make_batch(const Dataset&, std::span<const std::size_t>,
                                         const ModelConfig&);

}  // namespace dpg
