#pragma once

#include <string>

#include "dpg/tensor/ops.hpp"
#include "dpg/tensor/param_store.hpp"

namespace dpg::nn {

// Layers hold handles that share storage with entries in a ParamStore.

template <typename T>
struct Conv {
  Tensor<T> weight;  // [Cout, Cin, k, k]
  Tensor<T> bias;    // [Cout]
  ops::Conv2dOptions options;

  // He-initialised weight, zero bias; registers `<prefix>.weight` and `<prefix>.bias`.
  static Conv make(ParamStore<T>& store, const std::string& prefix, std::size_t cin,
                   std::size_t cout, std::size_t k, ops::Conv2dOptions options,
                   std::uint64_t seed) {
    Conv c;
    c.weight = store.add_parameter(
        prefix + ".weight", he_init<T>({cout, cin, k, k}, cin * k * k, seed, prefix + ".weight"));
    c.bias = store.add_parameter(prefix + ".bias", Tensor<T>({cout}));
    c.options = options;
    return c;
  }

  Tensor<T> operator()(Tape<T>* tape, const Tensor<T>& x) const {
    return ops::conv2d(tape, x, weight, bias, options);
  }

  static std::size_t count(std::size_t cin, std::size_t cout, std::size_t k) {
    return k * k * cin * cout + cout;
  }
};

template <typename T>
struct BatchNorm {
  Tensor<T> gamma;
  Tensor<T> beta;
  ops::BatchNormState<T> state;

  // gamma = 1, beta = 0 as parameters; running statistics as buffers.
  static BatchNorm make(ParamStore<T>& store, const std::string& prefix, std::size_t channels) {
    BatchNorm b;
    b.gamma = store.add_parameter(prefix + ".gamma", Tensor<T>({channels}, T(1)));
    b.beta = store.add_parameter(prefix + ".beta", Tensor<T>({channels}));
    b.state.running_mean = store.add_buffer(prefix + ".running_mean", Tensor<T>({channels}));
    b.state.running_var = store.add_buffer(prefix + ".running_var", Tensor<T>({channels}, T(1)));
    return b;
  }

  Tensor<T> operator()(Tape<T>* tape, const Tensor<T>& x, bool training) {
    return ops::batchnorm2d(tape, x, gamma, beta, state, ops::BatchNormOptions{.training = training});
  }

  static std::size_t count(std::size_t channels) { return 2 * channels; }
};

template <typename T>
struct Linear {
  Tensor<T> weight;  // [in, out]
  Tensor<T> bias;    // [out]

  static Linear make(ParamStore<T>& store, const std::string& prefix, std::size_t in,
                     std::size_t out, std::uint64_t seed) {
    Linear l;
    l.weight = store.add_parameter(prefix + ".weight",
                                   he_init<T>({in, out}, in, seed, prefix + ".weight"));
    l.bias = store.add_parameter(prefix + ".bias", Tensor<T>({out}));
    return l;
  }

  Tensor<T> operator()(Tape<T>* tape, const Tensor<T>& x) const {
    return ops::linear(tape, x, weight, bias);
  }

  static std::size_t count(std::size_t in, std::size_t out) { return in * out + out; }
};

}  // namespace dpg::nn
