#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "dpg/tensor/tensor.hpp"

// Differentiable primitives. Every op takes an optional tape as its first
// argument; the op is recorded (and its output tracks gradients) only when a
// tape is given and at least one input requires a gradient.
namespace dpg::ops {

struct Conv2dOptions {
  std::size_t stride = 1;
  std::size_t padding = 0;
  std::size_t dilation = 1;
};

/// Zero-padded cross-correlation. x: [N,Cin,H,W], w: [Cout,Cin,kh,kw],
/// b: [Cout]. Output extent per axis is
/// (H + 2*padding - dilation*(kh-1) - 1) / stride + 1.
template <typename T>
Tensor<T> conv2d(Tape<T>* tape, const Tensor<T>& x, const Tensor<T>& w,
                 const Tensor<T>& b, Conv2dOptions opt = {});

/// k x k windows at the given stride. H and W must be divisible by stride.
/// Backward routes to the first maximum in row-major window order.
template <typename T>
Tensor<T> maxpool2d(Tape<T>* tape, const Tensor<T>& x, std::size_t k = 2,
                    std::size_t stride = 2);

template <typename T>
struct BatchNormState {
  Tensor<T> running_mean;  // [C], starts at 0
  Tensor<T> running_var;   // [C], starts at 1
};

struct BatchNormOptions {
  bool training = true;
  double eps = 1e-5;
  double momentum = 0.1;
};

/// Per-channel normalisation over (N,H,W). Training mode uses biased batch
/// statistics and folds them into `state`; eval mode reads `state`.
template <typename T>
Tensor<T> batchnorm2d(Tape<T>* tape, const Tensor<T>& x, const Tensor<T>& gamma,
                      const Tensor<T>& beta, BatchNormState<T>& state,
                      BatchNormOptions opt = {});

template <typename T>
Tensor<T> relu(Tape<T>* tape, const Tensor<T>& x);

template <typename T>
Tensor<T> sigmoid(Tape<T>* tape, const Tensor<T>& x);

template <typename T>
Tensor<T> softmax(Tape<T>* tape, const Tensor<T>& x, std::size_t axis);

/// x: [N,D], w: [D,M], b: [M] -> x*w + b.
template <typename T>
Tensor<T> linear(Tape<T>* tape, const Tensor<T>& x, const Tensor<T>& w,
                 const Tensor<T>& b);

template <typename T>
Tensor<T> concat_channels(Tape<T>* tape, std::span<const Tensor<T>> xs);

template <typename T>
Tensor<T> concat_channels(Tape<T>* tape, std::initializer_list<Tensor<T>> xs) {
  std::vector<Tensor<T>> v(xs);
  return concat_channels<T>(tape, std::span<const Tensor<T>>(v));
}

template <typename T>
Tensor<T> slice_channels(Tape<T>* tape, const Tensor<T>& x, std::size_t begin,
                         std::size_t count);

template <typename T>
Tensor<T> add(Tape<T>* tape, const Tensor<T>& a, const Tensor<T>& b);

/// Elementwise (Hadamard) product of equal-shape tensors.
template <typename T>
Tensor<T> mul(Tape<T>* tape, const Tensor<T>& a, const Tensor<T>& b);

template <typename T>
Tensor<T> scale(Tape<T>* tape, const Tensor<T>& x, T factor);

/// Sum of all elements as a shape-[1] tensor.
template <typename T>
Tensor<T> sum(Tape<T>* tape, const Tensor<T>& x);

/// [N,C,H,W] -> [N, C*H*W].
template <typename T>
Tensor<T> flatten(Tape<T>* tape, const Tensor<T>& x);

/// Affinity between every pair of spatial positions:
/// out[n,0,i,j] = sum_c a[n,c,i] * b[n,c,j], with i, j flattened over (H,W).
template <typename T>
Tensor<T> pairwise_dot(Tape<T>* tape, const Tensor<T>& a, const Tensor<T>& b);

/// Attention-weighted aggregation: out[n,c,i] = sum_j f[n,0,i,j] * g[n,c,j].
template <typename T>
Tensor<T> attend(Tape<T>* tape, const Tensor<T>& f, const Tensor<T>& g);

/// Mean negative log-likelihood of softmax(logits) at the given labels.
template <typename T>
Tensor<T> cross_entropy(Tape<T>* tape, const Tensor<T>& logits,
                        std::span<const int> labels);

/// Half-pixel-centre bilinear resampling of img: [C,H,W]. Not differentiable.
template <typename T>
Tensor<T> bilinear_resize(const Tensor<T>& img, std::size_t out_h,
                          std::size_t out_w);

}  // namespace dpg::ops
