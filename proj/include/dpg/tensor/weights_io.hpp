#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "dpg/tensor/param_store.hpp"

namespace dpg {

inline constexpr std::uint32_t kWeightsVersion = 1;

// One named array as stored in a DPGW file.
struct WeightEntry {
  std::string name;
  Shape shape;
  std::vector<float> data;
};

// DPGW layout: "DPGW", u32 version, u32 entry count, then per entry:
// u32 name length, UTF-8 name, u32 rank, rank x u32 dims, f32 data.
// All integers and floats little-endian.
std::string encode_weights(const std::vector<WeightEntry>& entries);
std::vector<WeightEntry> decode_weights(std::string_view bytes);

template <typename T>
std::vector<WeightEntry> snapshot(const ParamStore<T>& store);

template <typename T>
void save_weights(const std::filesystem::path& path, const ParamStore<T>& store);

/// Copies file contents into `store`. The file must hold exactly the store's
/// entries in the same order with identical shapes; the first mismatch is
/// reported by name.
template <typename T>
void load_weights(const std::filesystem::path& path, ParamStore<T>& store);

template <typename T>
void assign_weights(const std::vector<WeightEntry>& entries, ParamStore<T>& store);

}  // namespace dpg
