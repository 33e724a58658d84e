#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "dpg/sardata/chip.hpp"

namespace dpg {

inline constexpr int kBranchCount = 3;

// Branch b (0-based) consumes derived channel I_{b+1}.
enum class Fusion { kConcat, kAdd };

struct ModelConfig {
  bool enable_i1 = true;
  bool enable_i2 = true;
  bool enable_i3 = true;
  bool enable_cross_attention = true;
  bool enable_sa_module = true;
  bool enable_drdb = true;  // false: each block is a plain conv3x3 + ReLU
  bool enable_global_residual = true;
  int n_drdb = 3;
  int main_branch = 1;  // 0-based; 1 is I_2 (VV)
  Fusion fusion = Fusion::kConcat;
  int classes = 6;
  std::size_t input_size = 256;
  std::size_t base_width = 8;    // stage-1 encoder width; stages use 1,2,4,8 multiples
  std::size_t fc1_width = 1024;
  std::uint64_t seed = 0;

  // Throws ConfigError naming the offending field.
  void validate() const;

  bool branch_enabled(int b) const;
  std::vector<int> enabled_branches() const;
  // Enabled branches other than the main one, i.e. those that get gated.
  std::vector<int> gated_branches() const;

  std::size_t feature_width() const { return 8 * base_width; }
  std::size_t terminal_size() const { return input_size / 16; }
  std::size_t fused_width() const;
  std::size_t flatten_width() const {
    return feature_width() * terminal_size() * terminal_size();
  }
  sar::ChannelMask channel_mask() const { return {enable_i1, enable_i2, enable_i3}; }
};

std::string branch_name(int b);  // "I1" | "I2" | "I3"
int parse_branch(const std::string& name);
std::string fusion_name(Fusion f);
Fusion parse_fusion(const std::string& name);

}  // namespace dpg
