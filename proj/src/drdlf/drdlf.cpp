#include "dpg/drdlf/drdlf.hpp"

#include "dpg/tensor/errors.hpp"

namespace dpg {

namespace {
constexpr ops::Conv2dOptions kSame3x3{.stride = 1, .padding = 1, .dilation = 1};
constexpr ops::Conv2dOptions kDilated{.stride = 1, .padding = 2, .dilation = 2};
constexpr ops::Conv2dOptions kPointwise{};

void note(ForwardTrace* trace, const std::string& name, const Shape& s) {
  if (trace) trace->record(name, s);
}
}  // namespace

template <typename T>
Drdb<T>::Drdb(ParamStore<T>& store, const std::string& prefix, std::size_t width, bool dense,
              std::uint64_t seed)
    : dense_(dense), width_(width) {
  if (!dense) {
    plain_ = nn::Conv<T>::make(store, prefix + ".conv", width, width, 3, kSame3x3, seed);
    return;
  }
  for (int k = 0; k < kLayers; ++k)
    dconv_[k] = nn::Conv<T>::make(store, prefix + ".d" + std::to_string(k + 1),
                                  (k + 1) * width, width, 3, kDilated, seed);
  fuse_ = nn::Conv<T>::make(store, prefix + ".fuse", kLayers * width, width, 1, kPointwise, seed);
}

template <typename T>
Tensor<T> Drdb<T>::forward(Tape<T>* tape, const Tensor<T>& f) const {
  if (f.rank() != 4 || f.dim(1) != width_)
    throw ShapeError("drdb: input " + shape_to_string(f.shape()) + " is not " +
                     std::to_string(width_) + " channels wide at dim 1");
  if (!dense_) return ops::relu(tape, plain_(tape, f));
  std::vector<Tensor<T>> seen{f};
  std::vector<Tensor<T>> d;
  for (int k = 0; k < kLayers; ++k) {
    const auto in = seen.size() == 1 ? f : ops::concat_channels<T>(tape, seen);
    d.push_back(ops::relu(tape, dconv_[k](tape, in)));
    seen.push_back(d.back());
  }
  return ops::add(tape, f, fuse_(tape, ops::concat_channels<T>(tape, d)));
}

template <typename T>
std::size_t Drdb<T>::count(std::size_t width, bool dense) {
  if (!dense) return nn::Conv<T>::count(width, width, 3);
  std::size_t total = nn::Conv<T>::count(kLayers * width, width, 1);
  for (int k = 0; k < kLayers; ++k) total += nn::Conv<T>::count((k + 1) * width, width, 3);
  return total;
}

template <typename T>
Drdlf<T>::Drdlf(ParamStore<T>& store, const ModelConfig& config) : config_(config) {
  config_.validate();
  const auto w = config_.feature_width();
  const auto seed = config_.seed;
  f0_ = nn::Conv<T>::make(store, "drdlf.f0", config_.fused_width(), w, 3, kSame3x3, seed);
  for (int k = 0; k < config_.n_drdb; ++k)
    blocks_.emplace_back(store, "drdlf.drdb" + std::to_string(k + 1), w, config_.enable_drdb, seed);
  q0_ = nn::Conv<T>::make(store, "drdlf.q0", config_.n_drdb * w, w, 1, kPointwise, seed);
  q2a_ = nn::Conv<T>::make(store, "drdlf.q2.a", w, w, 3, kSame3x3, seed);
  q2b_ = nn::Conv<T>::make(store, "drdlf.q2.b", w, w, 3, kSame3x3, seed);
  fc1_ = nn::Linear<T>::make(store, "head.fc1", config_.flatten_width(), config_.fc1_width, seed);
  fc2_ = nn::Linear<T>::make(store, "head.fc2", config_.fc1_width,
                             static_cast<std::size_t>(config_.classes), seed);
}

template <typename T>
Tensor<T> Drdlf<T>::forward(Tape<T>* tape, const Tensor<T>& z_s, const Tensor<T>& z_main,
                            ForwardTrace* trace) const {
  return classify(tape, fuse(tape, z_s, z_main, trace), trace);
}

template <typename T>
Tensor<T> Drdlf<T>::fuse(Tape<T>* tape, const Tensor<T>& z_s, const Tensor<T>& z_main,
                         ForwardTrace* trace) const {
  auto f = ops::relu(tape, f0_(tape, z_s));
  note(trace, "f0", f.shape());
  std::vector<Tensor<T>> fs;
  for (std::size_t k = 0; k < blocks_.size(); ++k) {
    f = blocks_[k].forward(tape, f);
    note(trace, "drdb" + std::to_string(k + 1), f.shape());
    fs.push_back(f);
  }
  const auto dense = fs.size() == 1 ? fs[0] : ops::concat_channels<T>(tape, fs);
  note(trace, "q0.in", dense.shape());
  auto q = q0_(tape, dense);
  note(trace, "q0", q.shape());
  if (config_.enable_global_residual) {
    if (z_main.shape() != q.shape())
      throw ShapeError("global residual: Q_0 " + shape_to_string(q.shape()) + " vs Z_main " +
                       shape_to_string(z_main.shape()));
    q = ops::add(tape, q, z_main);
  }
  note(trace, "q1", q.shape());
  return q;
}

template <typename T>
Tensor<T> Drdlf<T>::classify(Tape<T>* tape, const Tensor<T>& q1, ForwardTrace* trace) const {
  auto q = ops::relu(tape, q2b_(tape, ops::relu(tape, q2a_(tape, q1))));
  note(trace, "q2", q.shape());
  auto flat = ops::flatten(tape, q);
  note(trace, "flatten", flat.shape());
  auto logits = fc2_(tape, ops::relu(tape, fc1_(tape, flat)));
  note(trace, "logits", logits.shape());
  return logits;
}

template class Drdb<float>;
template class Drdb<double>;
template class Drdlf<float>;
template class Drdlf<double>;

}  // namespace dpg
