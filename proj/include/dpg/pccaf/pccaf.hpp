#pragma once

#include <array>
#include <string>
#include <vector>

#include "dpg/pccaf/config.hpp"
#include "dpg/pccaf/trace.hpp"
#include "dpg/tensor/layers.hpp"

namespace dpg {

/// One tensor per branch, [N,1,S,S]; entries for disabled branches are
/// ignored and may be undefined.
template <typename T>
using BranchInputs = std::array<Tensor<T>, kBranchCount>;

/// Four stages of conv3x3 -> BN -> ReLU -> maxpool/2, widths w, 2w, 4w, 8w.
template <typename T>
class Encoder {
 public:
  Encoder() = default;
  Encoder(ParamStore<T>& store, const std::string& prefix, std::size_t base_width,
          std::uint64_t seed);

  Tensor<T> forward(Tape<T>* tape, const Tensor<T>& x, bool training,
                    ForwardTrace* trace = nullptr, const std::string& tag = "enc");

  static std::size_t count(std::size_t base_width);

 private:
  std::array<nn::Conv<T>, 4> conv_;
  std::array<nn::BatchNorm<T>, 4> bn_;
};

/// Embedded-Gaussian non-local map with a C/2 bottleneck and a linear 1x1
/// output conv back to C. No internal residual.
template <typename T>
class SAModule {
 public:
  SAModule() = default;
  SAModule(ParamStore<T>& store, const std::string& prefix, std::size_t channels,
           std::uint64_t seed);

  // f[n,0,i,j] = softmax_j(phi(x)_i . theta(x)_j); rows sum to 1.
  Tensor<T> attention(Tape<T>* tape, const Tensor<T>& x) const;
  Tensor<T> forward(Tape<T>* tape, const Tensor<T>& x) const;

  static std::size_t count(std::size_t channels);

 private:
  nn::Conv<T> phi_, theta_, g_, out_;
};

/// A = sigmoid(C_3) with C_1 = relu(conv(concat(z_i, z_r))) and
/// C_{k+1} = C_k * SA(C_k) + conv(C_k). Without SA the product term is C_k.
template <typename T>
class CrossAttention {
 public:
  static constexpr int kBlocks = 2;

  CrossAttention() = default;
  CrossAttention(ParamStore<T>& store, const std::string& prefix, std::size_t width,
                 bool with_sa, std::uint64_t seed);

  Tensor<T> forward(Tape<T>* tape, const Tensor<T>& zi, const Tensor<T>& zr,
                    ForwardTrace* trace = nullptr, const std::string& tag = "xattn") const;

  static std::size_t count(std::size_t width, bool with_sa);

 private:
  bool with_sa_ = true;
  nn::Conv<T> reduce_;
  std::array<nn::Conv<T>, kBlocks> conv_;
  std::array<SAModule<T>, kBlocks> sa_;
};

template <typename T>
struct PccafOutput {
  Tensor<T> z_s;     // fused features
  Tensor<T> z_main;  // main-branch encoder output, kept for the global residual
  std::array<Tensor<T>, kBranchCount> z;      // encoder outputs (undefined if disabled)
  std::array<Tensor<T>, kBranchCount> gate;   // A_i for gated branches
  std::array<Tensor<T>, kBranchCount> gated;  // Z_i' (Z_i itself when ungated)
};

/// Parameters are registered as pccaf.enc{b}.* and pccaf.xattn{b}.* with
/// 1-based branch numbers.
template <typename T>
class Pccaf {
 public:
  Pccaf() = default;
  Pccaf(ParamStore<T>& store, const ModelConfig& config);

  PccafOutput<T> forward(Tape<T>* tape, const BranchInputs<T>& inputs, bool training,
                         ForwardTrace* trace = nullptr);

 private:
  ModelConfig config_;
  std::array<Encoder<T>, kBranchCount> enc_;
  std::array<CrossAttention<T>, kBranchCount> xattn_;
};

extern template class Encoder<float>;
extern template class Encoder<double>;
extern template class SAModule<float>;
extern template class SAModule<double>;
extern template class CrossAttention<float>;
extern template class CrossAttention<double>;
extern template class Pccaf<float>;
extern template class Pccaf<double>;

}  // namespace dpg
