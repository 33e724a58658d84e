#include <gtest/gtest.h>
#include <map>
#include <numeric>

#include <cmath>
#include <cstdlib>
#include <fstream>

#include <json.hpp>

#include "dpg/harness/ablation.hpp"
#include "dpg/harness/train.hpp"
#include "dpg/tensor/errors.hpp"

using namespace dpg;

namespace {

std::string fixture(const std::string& name) {
  const char* dir = std::getenv("DPG_FIXTURES");
  return std::string(dir ? dir : "tests/fixtures") + "/" + name;
}

ConfusionMatrix load_confusion(const std::string& name) {
  std::ifstream in(fixture(name));
  auto j = nlohmann::json::parse(in);
  return ConfusionMatrix(j["classes"].get<std::vector<std::string>>(),
                         j["counts"].get<std::vector<std::vector<std::uint64_t>>>());
}

ModelConfig tiny_config() {
  ModelConfig c;
  c.input_size = 16;
  c.base_width = 2;
  c.fc1_width = 16;
  c.classes = 3;
  c.n_drdb = 1;
  c.seed = 5;
  return c;
}

}  // namespace

TEST(ConfusionMatrix, SixCategoryTable) {
  auto m = load_confusion("six_category_confusion.json");
  EXPECT_EQ(m.trace(), 872u);
  EXPECT_EQ(m.total(), 1486u);
  EXPECT_EQ(format_percent(m.accuracy()), "58.68");
}

TEST(ConfusionMatrix, ThreeCategoryTable) {
  auto m = load_confusion("three_category_confusion.json");
  EXPECT_EQ(m.trace(), 521u);
  EXPECT_EQ(m.total(), 631u);
  EXPECT_EQ(format_percent(m.accuracy()), "82.57");
  EXPECT_EQ(m.row_sums()[0], 154u);
}

TEST(ConfusionMatrix, StreamingAgreesWithTrace) {
  std::ifstream in(fixture("six_category_predictions.jsonl"));
  std::vector<int> labels, preds;
  std::string line;
  while (std::getline(in, line)) {
    auto j = nlohmann::json::parse(line);
    labels.push_back(j["label"]);
    preds.push_back(j["prediction"]);
  }
  auto ref = load_confusion("six_category_confusion.json");
  auto r = evaluate_predictions(ref.class_names(), labels, preds);
  EXPECT_EQ(r.streaming_correct, r.matrix.trace());
  EXPECT_EQ(r.matrix.to_csv(), ref.to_csv());
  EXPECT_EQ(format_percent(r.accuracy), "58.68");
}

TEST(ConfusionMatrix, PerfectPredictionsAreDiagonal) {
  std::vector<int> labels{0, 1, 2, 2, 1};
  auto r = evaluate_predictions({"a", "b", "c"}, labels, labels);
  EXPECT_EQ(r.accuracy, 1.0);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j)
      if (i != j) EXPECT_EQ(r.matrix.at(i, j), 0u);
  EXPECT_EQ(r.matrix.row_sums(), (std::vector<std::uint64_t>{1, 2, 2}));
}

TEST(ConfusionMatrix, CsvLayoutAndErrors) {
  ConfusionMatrix m({"x", "y"});
  m.add(0, 1);
  m.add(1, 1);
  EXPECT_EQ(m.to_csv(), "true\\pred,x,y\nx,0,1\ny,0,1\n");
  EXPECT_THROW(m.add(2, 0), std::out_of_range);
  EXPECT_THROW(ConfusionMatrix({"x"}).accuracy(), std::domain_error);
  EXPECT_THROW(evaluate_predictions({"x"}, {}, {}), ConfigError);
}

TEST(TopK, MeanAndSampleDeviation) {
  auto s = aggregate_top_k({0.5, 0.9, 0.7, 0.8, 0.6}, 3);
  EXPECT_EQ(s.selected, (std::vector<double>{0.9, 0.8, 0.7}));
  EXPECT_NEAR(s.mean, 0.8, 1e-12);
  EXPECT_NEAR(s.stddev, 0.1, 1e-12);  // sqrt((0.01 + 0 + 0.01) / 2)
  EXPECT_THROW(aggregate_top_k({0.1}, 2), std::invalid_argument);
}

TEST(Train, ZeroLearningRateFreezesParameters) {
  auto c = tiny_config();
  auto data = synth_dataset(3, 4, 0, 32, c);
  DpigNet<float> net(c);
  std::vector<std::vector<float>> before;
  for (const auto& e : net.params().entries())
    if (e.kind == EntryKind::kParameter) before.emplace_back(e.value.data().begin(), e.value.data().end());
  train(net, data, {.epochs = 2, .batch_size = 4, .lr = 0.0, .seed = 1});
  std::size_t i = 0;
  for (const auto& e : net.params().entries())
    if (e.kind == EntryKind::kParameter) {
      EXPECT_TRUE(std::equal(before[i].begin(), before[i].end(), e.value.data().begin())) << e.name;
      ++i;
    }
}

TEST(Train, RejectsOversizedBatchAndClassMismatch) {
  auto c = tiny_config();
  auto data = synth_dataset(3, 2, 0, 32, c);
  DpigNet<float> net(c);
  EXPECT_THROW(train(net, data, {.epochs = 1, .batch_size = 7}), ConfigError);
  auto four = c;
  four.classes = 4;
  DpigNet<float> net4(four);
  EXPECT_THROW(train(net4, data, {.epochs = 1, .batch_size = 2}), ConfigError);
  EXPECT_THROW(evaluate(net, Dataset{}), ConfigError);
}

TEST(Train, KeepsLastPartialBatchAndCountsSteps) {
  auto c = tiny_config();
  auto data = synth_dataset(3, 3, 0, 32, c);  // 9 samples, batch 4 -> 3 steps
  DpigNet<float> net(c);
  auto log = train(net, data, {.epochs = 2, .batch_size = 4, .lr = 1e-3});
  ASSERT_EQ(log.steps.size(), 6u);
  for (std::size_t i = 0; i < 6; ++i) EXPECT_EQ(log.steps[i].step, i + 1);
  EXPECT_EQ(log.epochs.size(), 2u);
  EXPECT_EQ(net.params().step(), 6u);
  const auto jsonl = log.to_jsonl();
  EXPECT_EQ(std::count(jsonl.begin(), jsonl.end(), '\n'), 8);
}

TEST(Train, DeterministicLogsAndWeights) {
  auto c = tiny_config();
  auto data = synth_dataset(3, 4, 0, 32, c);
  auto run = [&] {
    DpigNet<float> net(c);
    auto log = train(net, data, {.epochs = 2, .batch_size = 4, .lr = 1e-3, .seed = 9});
    std::vector<float> flat;
    for (const auto& e : net.params().entries()) flat.insert(flat.end(), e.value.data().begin(), e.value.data().end());
    return std::make_pair(log.to_jsonl(), flat);
  };
  auto a = run(), b = run();
  EXPECT_EQ(a.first, b.first);
  EXPECT_EQ(a.second, b.second);
}

TEST(Train, InitialLossNearLogK) {
  auto c = tiny_config();
  auto data = synth_dataset(3, 16, 100, 32, c);
  double total = 0;
  for (std::uint64_t seed = 0; seed < 4; ++seed) {
    c.seed = seed;
    DpigNet<float> net(c);
    std::vector<std::size_t> idx(data.size());
    std::iota(idx.begin(), idx.end(), 0);
    auto logits = net.forward(nullptr, make_batch<float>(data, idx, c), false);
    total += ops::cross_entropy<float>(nullptr, logits, data.labels).item();
  }
  EXPECT_NEAR(total / 4, std::log(3.0), 0.2 * std::log(3.0));
}

TEST(Train, LossDropsBelowLogKOnSyntheticChips) {
  auto c = tiny_config();
  c.input_size = 32;
  auto data = synth_dataset(3, 11, 0, 64, c);  // 33 chips
  DpigNet<float> net(c);
  auto log = train(net, data, {.epochs = 13, .batch_size = 8, .lr = 1e-3, .seed = 2});
  ASSERT_GE(log.steps.size(), 50u);
  double tail = 0;
  for (std::size_t i = log.steps.size() - 5; i < log.steps.size(); ++i) tail += log.steps[i].loss;
  EXPECT_LT(tail / 5, std::log(3.0));
}

TEST(Evaluate, RowSumsMatchClassCounts) {
  auto c = tiny_config();
  auto data = synth_dataset(3, 5, 0, 32, c);
  DpigNet<float> net(c);
  auto r = evaluate(net, data, 4);
  const auto h = data.class_histogram();
  const auto rows = r.matrix.row_sums();
  for (std::size_t k = 0; k < 3; ++k) EXPECT_EQ(rows[k], h[k]);
  EXPECT_EQ(r.streaming_correct, r.matrix.trace());
}

TEST(Ablation, RowCountsPerAxis) {
  const std::map<std::string, std::size_t> expected{{"inputs", 6}, {"main_branch", 3}, {"fusion", 2},
                                                    {"sa_module", 2}, {"drdlf", 3}, {"n_drdb", 5}};
  for (const auto& name : ablation_axis_names())
    EXPECT_EQ(ablation_rows(tiny_config(), parse_ablation_axis(name)).size(), expected.at(name));
  try {
    parse_ablation_axis("depth");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("n_drdb"), std::string::npos);
  }
}

TEST(Ablation, StructuralChanges) {
  auto base = tiny_config();
  auto n = ablation_suite(base, AblationAxis::kNDrdb, {});
  for (std::size_t i = 0; i < n.size(); ++i) {
    EXPECT_EQ(n[i].probe.drdb_blocks, i + 1);
    if (i) EXPECT_GT(n[i].probe.params, n[i - 1].probe.params);
  }
  auto f = ablation_suite(base, AblationAxis::kFusion, {});
  EXPECT_EQ(f[0].probe.z_s_channels, base.feature_width());
  EXPECT_EQ(f[1].probe.z_s_channels, 3 * base.feature_width());
  auto sa = ablation_suite(base, AblationAxis::kSaModule, {});
  EXPECT_FALSE(sa[0].probe.sa_params);
  EXPECT_TRUE(sa[1].probe.sa_params);
  auto main = ablation_suite(base, AblationAxis::kMainBranch, {});
  for (int b = 0; b < 3; ++b) {
    EXPECT_EQ(main[b].probe.main_branch, b);
    EXPECT_EQ(main[b].probe.gated.size(), 2u);
    EXPECT_EQ(std::count(main[b].probe.gated.begin(), main[b].probe.gated.end(), b), 0);
  }
  auto in = ablation_suite(base, AblationAxis::kInputs, {});
  EXPECT_TRUE(in[0].probe.vh_free);  // I_2 only
  for (std::size_t i = 1; i < in.size(); ++i) EXPECT_FALSE(in[i].probe.vh_free) << in[i].row.label;
  EXPECT_EQ(in[0].probe.z_s_channels, base.feature_width());
  EXPECT_TRUE(in[4].probe.gated.empty());
  EXPECT_EQ(in[5].probe.gated, (std::vector<int>{0, 2}));
  const auto csv = ablation_csv(AblationAxis::kInputs, in);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 7);
}

TEST(Ablation, TrainedRowsReportAccuracy) {
  auto base = tiny_config();
  AblationOptions opt;
  opt.structural_only = false;
  opt.train = {.epochs = 1, .batch_size = 3, .lr = 1e-3};
  opt.train_data = [](const ModelConfig& c) { return synth_dataset(3, 2, 0, 32, c); };
  opt.test_data = [](const ModelConfig& c) { return synth_dataset(3, 2, 50, 32, c); };
  auto r = ablation_suite(base, AblationAxis::kFusion, opt);
  ASSERT_TRUE(r[0].test_accuracy.has_value());
  EXPECT_GE(*r[0].test_accuracy, 0.0);
}
