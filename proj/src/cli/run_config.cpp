#include "dpg/cli/run_config.hpp"

#include <json.hpp>

#include "dpg/tensor/binary_io.hpp"
#include "dpg/tensor/errors.hpp"

namespace dpg::cli {

using nlohmann::json;

namespace {

nlohmann::ordered_json to_json(const RunConfig& c) {
  const auto& m = c.model;
  const auto& t = c.train;
  return {{"enable_i1", m.enable_i1},
          {"enable_i2", m.enable_i2},
          {"enable_i3", m.enable_i3},
          {"enable_cross_attention", m.enable_cross_attention},
          {"enable_sa_module", m.enable_sa_module},
          {"enable_drdb", m.enable_drdb},
          {"enable_global_residual", m.enable_global_residual},
          {"n_drdb", m.n_drdb},
          {"main_branch", branch_name(m.main_branch)},
          {"fusion", fusion_name(m.fusion)},
          {"classes", m.classes},
          {"input_size", m.input_size},
          {"base_width", m.base_width},
          {"fc1_width", m.fc1_width},
          {"epochs", t.epochs},
          {"batch_size", t.batch_size},
          {"lr", t.lr},
          {"seed", c.seed},
          {"chip_size", c.chip_size}};
}

template <typename V>
V typed(const json& j, const std::string& key) {
  try {
    return j.get<V>();
  } catch (const json::exception&) {
    throw ConfigError("config key '" + key + "' has the wrong type: " + j.dump());
  }
}

bool get_bool(const json& j, const std::string& key) {
  if (!j.is_boolean()) throw ConfigError("config key '" + key + "' must be a boolean");
  return j.get<bool>();
}

template <typename V>
V get_unsigned(const json& j, const std::string& key) {
  if (!j.is_number_unsigned())
    throw ConfigError("config key '" + key + "' must be a non-negative integer");
  return static_cast<V>(j.get<std::uint64_t>());
}

int get_int(const json& j, const std::string& key) {
  if (!j.is_number_integer()) throw ConfigError("config key '" + key + "' must be an integer");
  return typed<int>(j, key);
}

}  // namespace

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> k;
    const json doc = to_json(RunConfig{});
    for (const auto& [key, _] : doc.items()) k.push_back(key);
    return k;
  }();
  return keys;
}

RunConfig parse_run_config(const std::string& json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::exception& e) {
    throw FormatError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ConfigError("config must be a flat JSON object");
  RunConfig c;
  for (const auto& [key, v] : doc.items()) {
    auto& m = c.model;
    auto& t = c.train;
    if (key == "enable_i1") m.enable_i1 = get_bool(v, key);
    else if (key == "enable_i2") m.enable_i2 = get_bool(v, key);
    else if (key == "enable_i3") m.enable_i3 = get_bool(v, key);
    else if (key == "enable_cross_attention") m.enable_cross_attention = get_bool(v, key);
    else if (key == "enable_sa_module") m.enable_sa_module = get_bool(v, key);
    else if (key == "enable_drdb") m.enable_drdb = get_bool(v, key);
    else if (key == "enable_global_residual") m.enable_global_residual = get_bool(v, key);
    else if (key == "n_drdb") m.n_drdb = get_int(v, key);
    else if (key == "main_branch") m.main_branch = parse_branch(typed<std::string>(v, key));
    else if (key == "fusion") m.fusion = parse_fusion(typed<std::string>(v, key));
    else if (key == "classes") m.classes = get_int(v, key);
    else if (key == "input_size") m.input_size = get_unsigned<std::size_t>(v, key);
    else if (key == "base_width") m.base_width = get_unsigned<std::size_t>(v, key);
    else if (key == "fc1_width") m.fc1_width = get_unsigned<std::size_t>(v, key);
    else if (key == "epochs") t.epochs = get_int(v, key);
    else if (key == "batch_size") t.batch_size = get_unsigned<std::size_t>(v, key);
    else if (key == "lr") {
      if (!v.is_number()) throw ConfigError("config key 'lr' must be a number");
      t.lr = v.get<double>();
    } else if (key == "seed") c.seed = get_unsigned<std::uint64_t>(v, key);
    else if (key == "chip_size") c.chip_size = get_unsigned<std::size_t>(v, key);
    else throw ConfigError("unknown config key '" + key + "'");
  }
  c.set_seed(c.seed);
  c.model.validate();
  c.train.validate();
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  return parse_run_config(io::read_file(path));
}

std::string dump_run_config(const RunConfig& config) { return to_json(config).dump(2) + "\n"; }

}  // namespace dpg::cli
