#include "dpg/harness/train.hpp"

#include <algorithm>
#include <numeric>
#include <random>

#include <json.hpp>

#include "dpg/tensor/errors.hpp"

namespace dpg {

void TrainConfig::validate() const {
  if (epochs < 1) throw ConfigError("invalid train config: epochs must be positive");
  if (batch_size < 1) throw ConfigError("invalid train config: batch_size must be positive");
  if (!(lr >= 0)) throw ConfigError("invalid train config: lr must be non-negative");
}

std::string TrainLog::to_jsonl() const {
  std::string out;
  std::size_t s = 0;
  for (const auto& e : epochs) {
    for (; s < steps.size() && steps[s].epoch == e.epoch; ++s)
      out += nlohmann::json{{"step", steps[s].step}, {"epoch", steps[s].epoch},
                            {"loss", steps[s].loss}}.dump() + "\n";
    out += nlohmann::json{{"epoch", e.epoch}, {"mean_loss", e.mean_loss},
                          {"train_accuracy", e.train_accuracy}}.dump() + "\n";
  }
  return out;
}

template <typename T>
TrainLog train(DpigNet<T>& net, const Dataset& data, const TrainConfig& config,
               const std::function<void(const StepRecord&)>& on_step) {
  config.validate();
  const auto& mc = net.config();
  if (data.size() == 0) throw ConfigError("train: empty dataset");
  if (data.class_count() != static_cast<std::size_t>(mc.classes))
    throw ConfigError("train: dataset has " + std::to_string(data.class_count()) +
                      " classes, model expects " + std::to_string(mc.classes));
  if (config.batch_size > data.size())
    throw ConfigError("train: batch_size " + std::to_string(config.batch_size) +
                      " exceeds dataset size " + std::to_string(data.size()));

  TrainLog log;
  std::vector<std::size_t> order(data.size());
  const AdamOptions adam{.lr = config.lr};
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::mt19937_64 rng(derive_seed(config.seed, "train.epoch." + std::to_string(epoch)));
    std::shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0;
    std::size_t correct = 0;
    for (std::size_t begin = 0; begin < order.size(); begin += config.batch_size) {
      const auto end = std::min(order.size(), begin + config.batch_size);
      const std::span<const std::size_t> idx(order.data() + begin, end - begin);
      std::vector<int> labels;
      for (auto i : idx) labels.push_back(data.labels[i]);
      auto inputs = make_batch<T>(data, idx, mc);

      net.params().zero_grad();
      Tape<T> tape;
      auto logits = net.forward(&tape, inputs, true);
      auto loss = ops::cross_entropy<T>(&tape, logits, labels);
      tape.backward(loss);
      adam_step(net.params(), adam);

      const auto preds = predict(logits);
      for (std::size_t i = 0; i < idx.size(); ++i) correct += preds[i].label == labels[i];
      StepRecord rec{net.params().step(), epoch, static_cast<double>(loss.item())};
      loss_sum += rec.loss * static_cast<double>(idx.size());
      log.steps.push_back(rec);
      if (on_step) on_step(rec);
    }
    log.epochs.push_back({epoch, loss_sum / static_cast<double>(data.size()),
                          static_cast<double>(correct) / static_cast<double>(data.size())});
  }
  return log;
}

template <typename T>
EvalResult evaluate(DpigNet<T>& net, const Dataset& data, std::size_t batch_size) {
  if (data.size() == 0) throw ConfigError("evaluate: empty dataset");
  if (batch_size < 1) throw ConfigError("evaluate: batch_size must be positive");
  std::vector<int> preds;
  std::vector<std::size_t> idx;
  for (std::size_t begin = 0; begin < data.size(); begin += batch_size) {
    idx.clear();
    for (std::size_t i = begin; i < std::min(data.size(), begin + batch_size); ++i)
      idx.push_back(i);
    auto logits = net.forward(nullptr, make_batch<T>(data, idx, net.config()), false);
    for (const auto& p : predict(logits)) preds.push_back(p.label);
  }
  return evaluate_predictions(data.class_names, data.labels, preds);
}

EvalResult evaluate_predictions(const std::vector<std::string>& class_names,
                                const std::vector<int>& labels,
                                const std::vector<int>& predictions) {
  if (labels.empty()) throw ConfigError("evaluate: no samples");
  if (labels.size() != predictions.size())
    throw ConfigError("evaluate: " + std::to_string(predictions.size()) + " predictions for " +
                      std::to_string(labels.size()) + " labels");
  EvalResult r{ConfusionMatrix(class_names), 0, 0, predictions};
  for (std::size_t i = 0; i < labels.size(); ++i) {
    r.matrix.add(labels[i], predictions[i]);
    r.streaming_correct += labels[i] == predictions[i];
  }
  r.accuracy = r.matrix.accuracy();
  return r;
}

template TrainLog train(DpigNet<float>&, const Dataset&, const TrainConfig&,
                        const std::function<void(const StepRecord&)>&);
template TrainLog train(DpigNet<double>&, const Dataset&, const TrainConfig&,
                        const std::function<void(const StepRecord&)>&);
template EvalResult evaluate(DpigNet<float>&, const Dataset&, std::size_t);
template EvalResult evaluate(DpigNet<double>&, const Dataset&, std::size_t);

}  // namespace dpg
