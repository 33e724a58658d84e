#include "dpg/pccaf/config.hpp"

#include "dpg/tensor/errors.hpp"

namespace dpg {

namespace {
void require(bool ok, const std::string& msg) {
  if (!ok) throw ConfigError("invalid model config: " + msg);
}
}  // namespace

void ModelConfig::validate() const {
  require(enable_i1 || enable_i2 || enable_i3, "all branches disabled");
  require(n_drdb >= 1 && n_drdb <= 5, "n_drdb must be in [1,5], got " + std::to_string(n_drdb));
  require(main_branch >= 0 && main_branch < kBranchCount,
          "main_branch out of range: " + std::to_string(main_branch));
  require(branch_enabled(main_branch), "main_branch " + branch_name(main_branch) + " is disabled");
  require(classes >= 2, "classes must be at least 2");
  require(input_size >= 16 && input_size % 16 == 0,
          "input_size must be a positive multiple of 16, got " + std::to_string(input_size));
  require(base_width >= 1, "base_width must be positive");
  require(fc1_width >= 1, "fc1_width must be positive");
}

bool ModelConfig::branch_enabled(int b) const {
  switch (b) {
    case 0: return enable_i1;
    case 1: return enable_i2;
    case 2: return enable_i3;
    default: return false;
  }
}

std::vector<int> ModelConfig::enabled_branches() const {
  std::vector<int> out;
  for (int b = 0; b < kBranchCount; ++b)
    if (branch_enabled(b)) out.push_back(b);
  return out;
}

std::vector<int> ModelConfig::gated_branches() const {
  std::vector<int> out;
  if (!enable_cross_attention) return out;
  for (int b : enabled_branches())
    if (b != main_branch) out.push_back(b);
  return out;
}

std::size_t ModelConfig::fused_width() const {
  return fusion == Fusion::kConcat ? enabled_branches().size() * feature_width() : feature_width();
}

std::string branch_name(int b) { return "I" + std::to_string(b + 1); }

int parse_branch(const std::string& name) {
  for (int b = 0; b < kBranchCount; ++b)
    if (name == branch_name(b)) return b;
  throw ConfigError("unknown branch '" + name + "' (expected I1, I2 or I3)");
}

std::string fusion_name(Fusion f) { return f == Fusion::kConcat ? "concat" : "add"; }

Fusion parse_fusion(const std::string& name) {
  if (name == "concat") return Fusion::kConcat;
  if (name == "add") return Fusion::kAdd;
  throw ConfigError("unknown fusion '" + name + "' (expected concat or add)");
}

}  // namespace dpg
