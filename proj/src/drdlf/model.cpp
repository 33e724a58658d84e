#include "dpg/drdlf/model.hpp"

namespace dpg {

template <typename T>
DpigNet<T>::DpigNet(const ModelConfig& config)
    : config_(config), pccaf_(store_, config), drdlf_(store_, config) {}

template <typename T>
Tensor<T> DpigNet<T>::forward(Tape<T>* tape, const BranchInputs<T>& inputs, bool training,
                              ForwardTrace* trace) {
  return forward(tape, inputs, training, trace, nullptr);
}

template <typename T>
Tensor<T> DpigNet<T>::forward(Tape<T>* tape, const BranchInputs<T>& inputs, bool training,
                              ForwardTrace* trace, PccafOutput<T>* pccaf_out) {
  auto p = pccaf_.forward(tape, inputs, training, trace);
  auto logits = drdlf_.forward(tape, p.z_s, p.z_main, trace);
  if (pccaf_out) *pccaf_out = std::move(p);
  return logits;
}

template class DpigNet<float>;
template class DpigNet<double>;

std::vector<BudgetLine> parameter_budget(const ModelConfig& config) {
  config.validate();
  using C = nn::Conv<float>;
  using L = nn::Linear<float>;
  const auto w = config.feature_width();
  std::vector<BudgetLine> out;
  for (int b : config.enabled_branches())
    out.push_back({"pccaf.enc" + std::to_string(b + 1), Encoder<float>::count(config.base_width)});
  for (int b : config.gated_branches())
    out.push_back({"pccaf.xattn" + std::to_string(b + 1),
                   CrossAttention<float>::count(w, config.enable_sa_module)});
  out.push_back({"drdlf.f0", C::count(config.fused_width(), w, 3)});
  for (int k = 0; k < config.n_drdb; ++k)
    out.push_back({"drdlf.drdb" + std::to_string(k + 1), Drdb<float>::count(w, config.enable_drdb)});
  out.push_back({"drdlf.q0", C::count(config.n_drdb * w, w, 1)});
  out.push_back({"drdlf.q2", 2 * C::count(w, w, 3)});
  out.push_back({"head.fc1", L::count(config.flatten_width(), config.fc1_width)});
  out.push_back({"head.fc2", L::count(config.fc1_width, static_cast<std::size_t>(config.classes))});
  return out;
}

std::size_t count_params(const ModelConfig& config) {
  std::size_t total = 0;
  for (const auto& line : parameter_budget(config)) total += line.count;
  return total;
}

template <typename T>
std::vector<Prediction> predict(const Tensor<T>& logits) {
  const auto probs = ops::softmax<T>(nullptr, logits, 1);
  const auto n = logits.dim(0), k = logits.dim(1);
  std::vector<Prediction> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto& p = out[i];
    p.probs.resize(k);
    for (std::size_t j = 0; j < k; ++j) {
      p.probs[j] = static_cast<double>(probs.data()[i * k + j]);
      if (logits.data()[i * k + j] > logits.data()[i * k + p.label]) p.label = static_cast<int>(j);
    }
  }
  return out;
}

template std::vector<Prediction> predict(const Tensor<float>&);
template std::vector<Prediction> predict(const Tensor<double>&);

}  // namespace dpg
