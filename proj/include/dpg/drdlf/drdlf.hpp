#pragma once

#include <array>
#include <string>
#include <vector>

#include "dpg/pccaf/config.hpp"
#include "dpg/pccaf/trace.hpp"
#include "dpg/tensor/layers.hpp"

namespace dpg {

/// Dense dilated block: D_k = relu(dconv(concat(F, D_1..D_{k-1}))), k = 1..3,
/// out = F + conv1x1(concat(D_1, D_2, D_3)). Dilation 2, padding 2.
/// The plain variant is relu(conv3x3(F)) with no skip.
template <typename T>
class Drdb {
 public:
  static constexpr int kLayers = 3;

  Drdb() = default;
  Drdb(ParamStore<T>& store, const std::string& prefix, std::size_t width, bool dense,
       std::uint64_t seed);

  Tensor<T> forward(Tape<T>* tape, const Tensor<T>& f) const;

  static std::size_t count(std::size_t width, bool dense);

 private:
  bool dense_ = true;
  std::size_t width_ = 0;
  std::array<nn::Conv<T>, kLayers> dconv_;
  nn::Conv<T> fuse_;
  nn::Conv<T> plain_;
};

/// F_0 = relu(conv3x3(Z_S)); F_k = DRDB_k(F_{k-1}); Q_0 = conv1x1(concat F_1..F_n);
/// Q_1 = Q_0 + Z_main; Q_2 = relu(conv(relu(conv(Q_1)))); logits = fc2(relu(fc1(flat))).
/// Registers drdlf.f0, drdlf.drdb{k}, drdlf.q0, drdlf.q2.{a,b}, head.fc{1,2}.
template <typename T>
class Drdlf {
 public:
  Drdlf() = default;
  Drdlf(ParamStore<T>& store, const ModelConfig& config);

  Tensor<T> forward(Tape<T>* tape, const Tensor<T>& z_s, const Tensor<T>& z_main,
                    ForwardTrace* trace = nullptr) const;

  // forward == classify(fuse(...)); fuse returns Q_1.
  Tensor<T> fuse(Tape<T>* tape, const Tensor<T>& z_s, const Tensor<T>& z_main,
                 ForwardTrace* trace = nullptr) const;
  Tensor<T> classify(Tape<T>* tape, const Tensor<T>& q1, ForwardTrace* trace = nullptr) const;

  const Drdb<T>& block(std::size_t k) const { return blocks_.at(k); }

 private:
  ModelConfig config_;
  nn::Conv<T> f0_, q0_, q2a_, q2b_;
  std::vector<Drdb<T>> blocks_;
  nn::Linear<T> fc1_, fc2_;
};

extern template class Drdb<float>;
extern template class Drdb<double>;
extern template class Drdlf<float>;
extern template class Drdlf<double>;

}  // namespace dpg
