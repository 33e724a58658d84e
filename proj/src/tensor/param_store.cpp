#include "dpg/tensor/param_store.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

namespace dpg {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t root, std::string_view name) {
  std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
  for (unsigned char c : name) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return splitmix64(splitmix64(root) ^ h);
}

template <typename T>
Tensor<T>& ParamStore<T>::insert(std::string name, Tensor<T> value,
                                 EntryKind kind) {
  if (index_.count(name))
    throw std::invalid_argument("duplicate parameter name '" + name + "'");
  index_.emplace(name, entries_.size());
  Entry e{std::move(name), std::move(value), kind, {}, {}};
  if (kind == EntryKind::kParameter) {
    e.value.set_requires_grad(true);
    e.m.assign(e.value.numel(), T(0));
    e.v.assign(e.value.numel(), T(0));
  }
  entries_.push_back(std::move(e));
  return entries_.back().value;
}

template <typename T>
Tensor<T>& ParamStore<T>::add_parameter(std::string name, Tensor<T> value) {
  return insert(std::move(name), std::move(value), EntryKind::kParameter);
}

template <typename T>
Tensor<T>& ParamStore<T>::add_buffer(std::string name, Tensor<T> value) {
  return insert(std::move(name), std::move(value), EntryKind::kBuffer);
}

template <typename T>
bool ParamStore<T>::contains(std::string_view name) const {
  return index_.count(std::string(name)) != 0;
}

template <typename T>
Tensor<T>& ParamStore<T>::get(std::string_view name) {
  auto it = index_.find(std::string(name));
  if (it == index_.end())
    throw std::out_of_range("no parameter named '" + std::string(name) + "'");
  return entries_[it->second].value;
}

template <typename T>
const Tensor<T>& ParamStore<T>::get(std::string_view name) const {
  return const_cast<ParamStore*>(this)->get(name);
}

template <typename T>
std::size_t ParamStore<T>::trainable_count() const {
  return trainable_count("");
}

template <typename T>
std::size_t ParamStore<T>::trainable_count(std::string_view prefix) const {
  std::size_t n = 0;
  for (const auto& e : entries_)
    if (e.kind == EntryKind::kParameter && e.name.starts_with(prefix))
      n += e.value.numel();
  return n;
}

template <typename T>
void ParamStore<T>::zero_grad() {
  for (auto& e : entries_)
    if (e.kind == EntryKind::kParameter) e.value.zero_grad();
}

template <typename T>
void adam_step(ParamStore<T>& store, const AdamOptions& opt) {
  for (const auto& e : store.entries())
    if (e.kind == EntryKind::kParameter && !e.value.has_grad())
      throw std::logic_error("adam_step: missing gradient for parameter '" +
                             e.name + "'");
  store.advance_step();
  const auto t = static_cast<double>(store.step());
  const double c1 = 1.0 - std::pow(opt.beta1, t);
  const double c2 = 1.0 - std::pow(opt.beta2, t);
  const T b1 = static_cast<T>(opt.beta1), b2 = static_cast<T>(opt.beta2);
  const T lr = static_cast<T>(opt.lr), eps = static_cast<T>(opt.eps);
  const T ic1 = static_cast<T>(1.0 / c1), ic2 = static_cast<T>(1.0 / c2);
  for (auto& e : store.entries()) {
    if (e.kind != EntryKind::kParameter) continue;
    auto p = e.value.mutable_data();
    auto g = e.value.grad();
    for (std::size_t i = 0; i < p.size(); ++i) {
      e.m[i] = b1 * e.m[i] + (T(1) - b1) * g[i];
      e.v[i] = b2 * e.v[i] + (T(1) - b2) * g[i] * g[i];
      const T mhat = e.m[i] * ic1;
      const T vhat = e.v[i] * ic2;
      p[i] -= lr * mhat / (std::sqrt(vhat) + eps);
    }
  }
}

template <typename T>
Tensor<T> he_init(Shape shape, std::size_t fan_in, std::uint64_t seed,
                  std::string_view name) {
  if (fan_in < 1) throw std::invalid_argument("he_init: fan_in must be >= 1");
  std::mt19937_64 rng(derive_seed(seed, name));
  std::normal_distribution<double> dist(0.0, std::sqrt(2.0 / static_cast<double>(fan_in)));
  Tensor<T> t(std::move(shape));
  for (auto& v : t.mutable_data()) v = static_cast<T>(dist(rng));
  return t;
}

template class ParamStore<float>;
template class ParamStore<double>;
template void adam_step(ParamStore<float>&, const AdamOptions&);
template void adam_step(ParamStore<double>&, const AdamOptions&);
template Tensor<float> he_init(Shape, std::size_t, std::uint64_t, std::string_view);
template Tensor<double> he_init(Shape, std::size_t, std::uint64_t, std::string_view);

}  // namespace dpg
