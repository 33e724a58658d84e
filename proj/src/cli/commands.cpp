#include "dpg/cli/commands.hpp"

#include <sstream>

#include <json.hpp>

#include "dpg/sardata/chip_io.hpp"
#include "dpg/sardata/synth.hpp"
#include "dpg/tensor/binary_io.hpp"
#include "dpg/tensor/errors.hpp"
#include "dpg/tensor/weights_io.hpp"

namespace dpg::cli {

namespace fs = std::filesystem;

Precision parse_precision(const std::string& name) {
  if (name == "f32") return Precision::kF32;
  if (name == "f64") return Precision::kF64;
  throw ConfigError("unknown precision '" + name + "' (expected f32 or f64)");
}

namespace {

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir))
    throw std::runtime_error("cannot create output directory " + dir.string() + ": " +
                             (ec ? ec.message() : "not a directory"));
}

template <typename T>
TrainSummary train_impl(const Dataset& data, const RunConfig& config, const fs::path& out) {
  DpigNet<T> net(config.model);
  TrainSummary s;
  s.log = train(net, data, config.train);
  s.train_accuracy = evaluate(net, data, config.train.batch_size).accuracy;
  save_weights(out / "weights.dpgw", net.params());
  return s;
}

template <typename T>
EvalResult eval_impl(const Dataset& data, const RunConfig& config, const fs::path& weights) {
  DpigNet<T> net(config.model);
  load_weights(weights, net.params());
  return evaluate(net, data, config.train.batch_size);
}

std::vector<std::string> default_class_names(int k) {
  std::vector<std::string> names;
  for (int i = 0; i < k; ++i) names.push_back("class" + std::to_string(i));
  return names;
}

}  // namespace

SynthSummary cmd_synth(int classes, std::size_t per_class, const RunConfig& config,
                       const fs::path& out) {
  if (per_class < 1) throw ConfigError("synth: per_class must be at least 1");
  if (classes < 1 || classes > sar::kMaxSynthClasses)
    throw ConfigError("synth: classes must be in [1, " + std::to_string(sar::kMaxSynthClasses) + "]");
  ensure_dir(out / "chips");
  std::vector<sar::ManifestRecord> train, test;
  const auto n_train = (per_class + 1) / 2;
  for (int k = 0; k < classes; ++k)
    for (std::size_t i = 0; i < per_class; ++i) {
      const auto name = "c" + std::to_string(k) + "_" + std::to_string(i);
      const auto seed = derive_seed(config.seed, "synth.chip." + name);
      const auto path = out / "chips" / (name + ".sarc");
      sar::write_chip(path, sar::synth_chip(k, seed, config.chip_size, classes));
      (i < n_train ? train : test).push_back({path, k});
    }
  sar::write_class_table(out / "classes.json", default_class_names(classes));
  sar::write_manifest(out / "train.jsonl", train);
  sar::write_manifest(out / "test.jsonl", test);
  return {train.size() + test.size(), train.size(), test.size()};
}

TrainSummary cmd_train(const fs::path& manifest, const RunConfig& config, const fs::path& out,
                       Precision precision, std::size_t workers) {
  const auto m = sar::load_manifest(manifest);
  if (m.class_count() != static_cast<std::size_t>(config.model.classes))
    throw ConfigError("manifest has " + std::to_string(m.class_count()) +
                      " classes, config expects " + std::to_string(config.model.classes));
  const auto data = load_dataset(m, config.model, workers);
  ensure_dir(out);
  auto s = precision == Precision::kF64 ? train_impl<double>(data, config, out)
                                        : train_impl<float>(data, config, out);
  io::write_file_atomic(out / "train_log.jsonl", s.log.to_jsonl());
  io::write_file_atomic(out / "config.json", dump_run_config(config));
  return s;
}

EvalResult cmd_eval(const std::optional<fs::path>& manifest, const EvalSource& source,
                    const RunConfig& config, const fs::path& out, Precision precision,
                    std::size_t workers) {
  EvalResult r{ConfusionMatrix({"unused"}), 0, 0, {}};
  if (source.predictions) {
    std::vector<int> labels, preds;
    std::istringstream in(io::read_file(*source.predictions));
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      try {
        const auto j = nlohmann::json::parse(line);
        labels.push_back(j.at("label").get<int>());
        preds.push_back(j.at("prediction").get<int>());
      } catch (const nlohmann::json::exception& e) {
        throw FormatError(source.predictions->string() + ":" + std::to_string(lineno) + ": " +
                          e.what());
      }
    }
    const auto names = source.classes ? sar::read_class_table(*source.classes)
                                      : default_class_names(config.model.classes);
    r = evaluate_predictions(names, labels, preds);
  } else {
    if (!manifest) throw ConfigError("eval: a manifest is required without --predictions");
    const auto m = sar::load_manifest(*manifest);
    if (source.stub_perfect) {
      std::vector<int> labels;
      for (const auto& rec : m.records) labels.push_back(rec.label);
      r = evaluate_predictions(m.class_names, labels, labels);
    } else {
      if (!source.weights) throw ConfigError("eval: --weights is required");
      const auto data = load_dataset(m, config.model, workers);
      r = precision == Precision::kF64 ? eval_impl<double>(data, config, *source.weights)
                                       : eval_impl<float>(data, config, *source.weights);
    }
  }
  ensure_dir(out);
  io::write_file_atomic(out / "confusion.csv", r.matrix.to_csv());
  return r;
}

std::string cmd_ablate(const std::string& axis_name, const RunConfig& config,
                       const AblateInputs& inputs, const fs::path& out, std::size_t workers) {
  const auto axis = parse_ablation_axis(axis_name);
  AblationOptions opt;
  opt.train = config.train;
  if (inputs.train_manifest || inputs.test_manifest) {
    if (!inputs.train_manifest || !inputs.test_manifest)
      throw ConfigError("ablate: give both --train-manifest and --test-manifest, or neither");
    opt.structural_only = false;
    const auto train_m = sar::load_manifest(*inputs.train_manifest);
    const auto test_m = sar::load_manifest(*inputs.test_manifest);
    opt.train_data = [=](const ModelConfig& c) { return load_dataset(train_m, c, workers); };
    opt.test_data = [=](const ModelConfig& c) { return load_dataset(test_m, c, workers); };
  }
  const auto csv = ablation_csv(axis, ablation_suite(config.model, axis, opt));
  ensure_dir(out);
  io::write_file_atomic(out / ("ablation_" + axis_name + ".csv"), csv);
  return csv;
}

std::size_t cmd_params(const RunConfig& config) { return count_params(config.model); }

}  // namespace dpg::cli
