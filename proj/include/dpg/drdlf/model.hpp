#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dpg/drdlf/drdlf.hpp"
#include "dpg/pccaf/pccaf.hpp"

namespace dpg {

/// Full classifier. Owns its ParamStore; layer handles alias store entries,
/// so the model is move-only.
template <typename T>
class DpigNet {
 public:
  explicit DpigNet(const ModelConfig& config);
  DpigNet(DpigNet&&) noexcept = default;
  DpigNet& operator=(DpigNet&&) noexcept = default;
  DpigNet(const DpigNet&) = delete;
  DpigNet& operator=(const DpigNet&) = delete;

  /// Returns logits [N, classes]. training selects batch statistics in BN.
  Tensor<T> forward(Tape<T>* tape, const BranchInputs<T>& inputs, bool training,
                    ForwardTrace* trace = nullptr);

  /// Forward pass exposing PCCAF intermediates.
  Tensor<T> forward(Tape<T>* tape, const BranchInputs<T>& inputs, bool training,
                    ForwardTrace* trace, PccafOutput<T>* pccaf_out);

  const ModelConfig& config() const noexcept { return config_; }
  ParamStore<T>& params() noexcept { return store_; }
  const ParamStore<T>& params() const noexcept { return store_; }
  Pccaf<T>& pccaf() noexcept { return pccaf_; }
  const Drdlf<T>& drdlf() const noexcept { return drdlf_; }

 private:
  ModelConfig config_;
  ParamStore<T> store_;
  Pccaf<T> pccaf_;
  Drdlf<T> drdlf_;
};

extern template class DpigNet<float>;
extern template class DpigNet<double>;

struct BudgetLine {
  std::string name;  // parameter-name prefix, e.g. "pccaf.enc2"
  std::size_t count = 0;
};

/// Trainable parameters per component, in registration order, from closed
/// forms only (no model is built).
std::vector<BudgetLine> parameter_budget(const ModelConfig& config);
std::size_t count_params(const ModelConfig& config);

struct Prediction {
  std::vector<double> probs;
  int label = 0;  // argmax; ties go to the lowest index
};

template <typename T>
std::vector<Prediction> predict(const Tensor<T>& logits);

}  // namespace dpg
