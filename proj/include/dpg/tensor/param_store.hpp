#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "dpg/tensor/tensor.hpp"

namespace dpg {

/// 64-bit seed for the stream keyed by `name` under `root`. Used for every
/// name-derived random stream (weights, shuffles, synthetic chips).
std::uint64_t derive_seed(std::uint64_t root, std::string_view name);

enum class EntryKind { kParameter, kBuffer };

/// Ordered, uniquely-named collection of trainable parameters and
/// non-trainable buffers (BN running statistics), plus Adam state.
template <typename T>
class ParamStore {
 public:
  struct Entry {
    std::string name;
    Tensor<T> value;
    EntryKind kind;
    std::vector<T> m;  // first moment, parameters only
    std::vector<T> v;  // second moment, parameters only
  };

  // Registers a trainable tensor and enables its gradient.
  Tensor<T>& add_parameter(std::string name, Tensor<T> value);
  Tensor<T>& add_buffer(std::string name, Tensor<T> value);

  bool contains(std::string_view name) const;
  Tensor<T>& get(std::string_view name);
  const Tensor<T>& get(std::string_view name) const;

  const std::vector<Entry>& entries() const noexcept { return entries_; }
  std::vector<Entry>& entries() noexcept { return entries_; }

  std::size_t trainable_count() const;
  // Sum of trainable element counts over names starting with `prefix`.
  std::size_t trainable_count(std::string_view prefix) const;

  void zero_grad();

  std::uint64_t step() const noexcept { return step_; }
  void advance_step() noexcept { ++step_; }

 private:
  Tensor<T>& insert(std::string name, Tensor<T> value, EntryKind kind);

  std::vector<Entry> entries_;
  std::unordered_map<std::string, std::size_t> index_;
  std::uint64_t step_ = 0;
};

struct AdamOptions {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// One bias-corrected Adam update over every parameter in the store.
/// Gradients are left in place; call zero_grad() explicitly.
template <typename T>
void adam_step(ParamStore<T>& store, const AdamOptions& opt);

/// N(0, 2/fan_in) samples, reproducible per (seed, name).
template <typename T>
Tensor<T> he_init(Shape shape, std::size_t fan_in, std::uint64_t seed,
                  std::string_view name);

extern template class ParamStore<float>;
extern template class ParamStore<double>;

}  // namespace dpg
