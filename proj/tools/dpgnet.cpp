#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "dpg/cli/commands.hpp"
#include "dpg/tensor/errors.hpp"
#include "dpg/tensor/parallel.hpp"

namespace fs = std::filesystem;
using namespace dpg;

namespace {

// Exit codes: 1 runtime/IO, 2 usage/config, 3 malformed file.
int fail(const std::string& kind, const std::string& message, int code) {
  std::string flat = message;
  for (auto& ch : flat)
    if (ch == '\n' || ch == '\r') ch = ' ';
  std::cerr << "error: " << kind << ": " << flat << "\n";
  return code;
}

std::optional<fs::path> opt_path(const std::string& s) {
  if (s.empty()) return std::nullopt;
  return fs::path(s);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Dual-polarization SAR ship classifier"};
  app.require_subcommand(0, 1);
  app.fallthrough();

  std::string config_path, out = "out", precision = "f32";
  std::optional<std::uint64_t> seed;
  std::size_t workers = 1;
  bool print_config = false;
  app.add_option("--config", config_path, "Flat JSON config file or inline object; unknown keys are rejected");
  app.add_option("--seed", seed, "Root seed for every random draw");
  app.add_option("--out", out, "Output directory")->capture_default_str();
  app.add_option("--workers", workers, "Worker threads (1 is bitwise deterministic)")
      ->check(CLI::PositiveNumber);
  app.add_option("--precision", precision, "f32 or f64")->check(CLI::IsMember({"f32", "f64"}));
  app.add_flag("--print-config", print_config, "Print the effective config and exit");

  auto* synth = app.add_subcommand("synth", "Generate synthetic SARC chips and manifests");
  int classes = 3;
  std::size_t per_class = 64;
  synth->add_option("--classes", classes, "Class count")->capture_default_str();
  synth->add_option("--per-class", per_class, "Chips per class")->capture_default_str();

  auto* train = app.add_subcommand("train", "Train on a manifest");
  std::string manifest;
  train->add_option("--manifest", manifest, "JSON-lines manifest")->required();

  auto* eval = app.add_subcommand("eval", "Evaluate and write a confusion matrix");
  std::string weights, predictions, class_table;
  bool stub_perfect = false;
  eval->add_option("--manifest", manifest, "JSON-lines manifest");
  eval->add_option("--weights", weights, "DPGW weight file");
  eval->add_option("--predictions", predictions, "JSON-lines {\"label\",\"prediction\"}");
  eval->add_option("--classes", class_table, "Class table for --predictions");
  eval->add_flag("--stub-perfect", stub_perfect, "Predict every manifest label exactly");

  auto* ablate = app.add_subcommand("ablate", "Run one ablation axis");
  std::string axis, train_manifest, test_manifest;
  ablate->add_option("--axis", axis, "inputs|main_branch|fusion|sa_module|drdlf|n_drdb")->required();
  ablate->add_option("--train-manifest", train_manifest, "Train each row on this manifest");
  ablate->add_option("--test-manifest", test_manifest, "Score each row on this manifest");

  auto* params = app.add_subcommand("params", "Print the trainable parameter count");
  bool budget = false;
  params->add_flag("--budget", budget, "Also print the per-component budget");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail("usage", e.what(), 2);
  }

  try {
    auto config = config_path.empty()           ? cli::RunConfig{}
                  : config_path.front() == '{' ? cli::parse_run_config(config_path)
                                               : cli::load_run_config(config_path);
    if (seed) config.set_seed(*seed);
    if (print_config) {
      std::cout << cli::dump_run_config(config);
      return 0;
    }
    if (app.get_subcommands().empty())
      return fail("usage", "a subcommand is required (synth, train, eval, ablate, params)", 2);
    set_num_threads(static_cast<int>(workers));
    const auto prec = cli::parse_precision(precision);

    if (*synth) {
      const auto s = cli::cmd_synth(classes, per_class, config, out);
      std::cout << s.chips << " chips: " << s.train << " train, " << s.test << " test\n";
    } else if (*train) {
      const auto s = cli::cmd_train(manifest, config, out, prec, workers);
      std::cerr << "steps " << s.log.steps.size() << ", final loss "
                << (s.log.steps.empty() ? 0.0 : s.log.steps.back().loss) << "\n";
      std::cout << format_percent(s.train_accuracy) << "\n";
    } else if (*eval) {
      cli::EvalSource src{opt_path(weights), opt_path(predictions), opt_path(class_table),
                          stub_perfect};
      const auto r = cli::cmd_eval(opt_path(manifest), src, config, out, prec, workers);
      std::cout << format_percent(r.accuracy) << "\n";
    } else if (*ablate) {
      std::cout << cli::cmd_ablate(axis, config, {opt_path(train_manifest), opt_path(test_manifest)},
                                   out, workers);
    } else if (*params) {
      if (budget)
        for (const auto& line : parameter_budget(config.model))
          std::cout << line.name << " " << line.count << "\n";
      std::cout << cli::cmd_params(config) << "\n";
    }
  } catch (const ConfigError& e) {
    return fail("config", e.what(), 2);
  } catch (const FormatError& e) {
    return fail("format", e.what(), 3);
  } catch (const std::exception& e) {
    return fail("runtime", e.what(), 1);
  }
  return 0;
}
