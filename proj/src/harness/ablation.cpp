#include "dpg/harness/ablation.hpp"

#include <cmath>
#include <limits>

#include "dpg/sardata/synth.hpp"
#include "dpg/tensor/errors.hpp"

namespace dpg {

const std::vector<std::string>& ablation_axis_names() {
  static const std::vector<std::string> names{"inputs", "main_branch", "fusion",
                                              "sa_module", "drdlf", "n_drdb"};
  return names;
}

AblationAxis parse_ablation_axis(const std::string& name) {
  const auto& names = ablation_axis_names();
  for (std::size_t i = 0; i < names.size(); ++i)
    if (names[i] == name) return static_cast<AblationAxis>(i);
  std::string valid;
  for (const auto& n : names) valid += (valid.empty() ? "" : ", ") + n;
  throw ConfigError("unknown ablation axis '" + name + "' (valid: " + valid + ")");
}

std::string ablation_axis_name(AblationAxis axis) {
  return ablation_axis_names().at(static_cast<std::size_t>(axis));
}

std::vector<AblationRow> ablation_rows(const ModelConfig& base, AblationAxis axis) {
  std::vector<AblationRow> rows;
  auto with = [&](std::string label, auto&& mutate) {
    auto c = base;
    mutate(c);
    c.validate();
    rows.push_back({std::move(label), c});
  };
  auto inputs = [](bool i1, bool i2, bool i3, bool xattn, int main) {
    return [=](ModelConfig& c) {
      c.enable_i1 = i1;
      c.enable_i2 = i2;
      c.enable_i3 = i3;
      c.enable_cross_attention = xattn;
      c.main_branch = main;
    };
  };
  switch (axis) {
    case AblationAxis::kInputs:
      with("I2", inputs(false, true, false, false, 1));
      with("I1", inputs(true, false, false, false, 0));
      with("I3", inputs(false, false, true, false, 2));
      with("I2+I1", inputs(true, true, false, false, 1));
      with("I2+I1+I3", inputs(true, true, true, false, 1));
      with("I2+I1+I3+cross-attention", inputs(true, true, true, true, 1));
      break;
    case AblationAxis::kMainBranch:
      for (int b = 0; b < kBranchCount; ++b)
        with("main=" + branch_name(b), [b](ModelConfig& c) { c.main_branch = b; });
      break;
    case AblationAxis::kFusion:
      with("add", [](ModelConfig& c) { c.fusion = Fusion::kAdd; });
      with("concat", [](ModelConfig& c) { c.fusion = Fusion::kConcat; });
      break;
    case AblationAxis::kSaModule:
      with("SA off", [](ModelConfig& c) { c.enable_sa_module = false; });
      with("SA on", [](ModelConfig& c) { c.enable_sa_module = true; });
      break;
    case AblationAxis::kDrdlf:
      with("plain convs, no residual", [](ModelConfig& c) {
        c.enable_drdb = false;
        c.enable_global_residual = false;
      });
      with("DRDB, no residual", [](ModelConfig& c) {
        c.enable_drdb = true;
        c.enable_global_residual = false;
      });
      with("DRDB + residual", [](ModelConfig& c) {
        c.enable_drdb = true;
        c.enable_global_residual = true;
      });
      break;
    case AblationAxis::kNDrdb:
      for (int n = 1; n <= 5; ++n) with("n=" + std::to_string(n), [n](ModelConfig& c) { c.n_drdb = n; });
      break;
  }
  return rows;
}

StructuralProbe probe_structure(const ModelConfig& config) {
  StructuralProbe p;
  DpigNet<float> net(config);
  p.params = net.params().trainable_count();
  for (const auto& e : net.params().entries())
    if (e.name.find(".sa.") != std::string::npos) p.sa_params = true;

  // S_VH is NaN everywhere, so any channel derived from it is non-finite.
  Dataset d;
  d.class_names.assign(static_cast<std::size_t>(config.classes), "c");
  bool finite = true;
  for (std::uint64_t s = 0; s < 2; ++s) {
    auto chip = sar::synth_chip(0, s, config.input_size, 1);
    for (auto& z : chip.svh) z = {std::numeric_limits<float>::quiet_NaN(), 0.0f};
    d.samples.push_back(sar::make_guided_triple(chip, config.input_size, config.channel_mask()));
    d.labels.push_back(0);
    for (const auto* img : {&d.samples.back().i1, &d.samples.back().i2, &d.samples.back().i3})
      for (float v : img->pixels) finite = finite && std::isfinite(v);
  }
  const std::vector<std::size_t> idx{0, 1};
  ForwardTrace trace;
  PccafOutput<float> out;
  auto logits = net.forward(nullptr, make_batch<float>(d, idx, config), false, &trace, &out);

  p.z_s_channels = trace.at("z_s")[1];
  for (const auto& [name, shape] : trace.stages)
    if (name.rfind("drdb", 0) == 0) ++p.drdb_blocks;
  for (int b = 0; b < kBranchCount; ++b) {
    try {
      trace.at("xattn" + std::to_string(b + 1) + ".c0");
      p.gated.push_back(b);
    } catch (const std::out_of_range&) {
    }
    if (out.z[b].defined() && out.z[b].id() == out.z_main.id()) p.main_branch = b;
  }
  for (float v : logits.data()) finite = finite && std::isfinite(v);
  p.vh_free = finite;
  return p;
}

std::vector<AblationResult> ablation_suite(const ModelConfig& base, AblationAxis axis,
                                           const AblationOptions& options) {
  std::vector<AblationResult> out;
  for (auto& row : ablation_rows(base, axis)) {
    AblationResult r{row, probe_structure(row.config), std::nullopt, std::nullopt};
    if (!options.structural_only) {
      if (!options.train_data || !options.test_data)
        throw ConfigError("ablation: training requested without data sources");
      const auto train_set = options.train_data(row.config);
      const auto test_set = options.test_data(row.config);
      DpigNet<float> net(row.config);
      train(net, train_set, options.train);
      r.train_accuracy = evaluate(net, train_set).accuracy;
      r.test_accuracy = evaluate(net, test_set).accuracy;
    }
    out.push_back(std::move(r));
  }
  return out;
}

std::string ablation_csv(AblationAxis axis, const std::vector<AblationResult>& results) {
  std::string csv =
      "axis,row,label,I1,I2,I3,main_branch,cross_attention,sa_module,fusion,drdb,"
      "global_residual,n_drdb,params,z_s_channels,reads_vh,train_accuracy,test_accuracy\n";
  auto flag = [](bool b) { return std::string(b ? "1" : "0"); };
  auto pct = [](const std::optional<double>& a) { return a ? format_percent(*a) : std::string(); };
  int i = 0;
  for (const auto& r : results) {
    const auto& c = r.row.config;
    csv += ablation_axis_name(axis) + "," + std::to_string(++i) + "," + r.row.label + "," +
           flag(c.enable_i1) + "," + flag(c.enable_i2) + "," + flag(c.enable_i3) + "," +
           branch_name(c.main_branch) + "," + flag(c.enable_cross_attention) + "," +
           flag(c.enable_sa_module) + "," + fusion_name(c.fusion) + "," + flag(c.enable_drdb) +
           "," + flag(c.enable_global_residual) + "," + std::to_string(c.n_drdb) + "," +
           std::to_string(r.probe.params) + "," + std::to_string(r.probe.z_s_channels) + "," +
           flag(!r.probe.vh_free) + "," + pct(r.train_accuracy) + "," + pct(r.test_accuracy) +
           "\n";
  }
  return csv;
}

}  // namespace dpg
