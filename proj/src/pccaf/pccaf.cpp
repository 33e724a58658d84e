#include "dpg/pccaf/pccaf.hpp"

#include "dpg/tensor/errors.hpp"

namespace dpg {

namespace {
constexpr ops::Conv2dOptions kSame3x3{.stride = 1, .padding = 1, .dilation = 1};
constexpr ops::Conv2dOptions kPointwise{};

void note(ForwardTrace* trace, const std::string& name, const Shape& s) {
  if (trace) trace->record(name, s);
}
}  // namespace

template <typename T>
Encoder<T>::Encoder(ParamStore<T>& store, const std::string& prefix, std::size_t base_width,
                    std::uint64_t seed) {
  std::size_t cin = 1, cout = base_width;
  for (int s = 0; s < 4; ++s, cin = cout, cout *= 2) {
    const auto p = prefix + ".s" + std::to_string(s + 1);
    conv_[s] = nn::Conv<T>::make(store, p + ".conv", cin, cout, 3, kSame3x3, seed);
    bn_[s] = nn::BatchNorm<T>::make(store, p + ".bn", cout);
  }
}

template <typename T>
Tensor<T> Encoder<T>::forward(Tape<T>* tape, const Tensor<T>& x, bool training,
                              ForwardTrace* trace, const std::string& tag) {
  auto h = x;
  for (int s = 0; s < 4; ++s) {
    h = ops::relu(tape, bn_[s](tape, conv_[s](tape, h), training));
    h = ops::maxpool2d(tape, h);
    note(trace, tag + ".s" + std::to_string(s + 1), h.shape());
  }
  return h;
}

template <typename T>
std::size_t Encoder<T>::count(std::size_t base_width) {
  std::size_t total = 0, cin = 1, cout = base_width;
  for (int s = 0; s < 4; ++s, cin = cout, cout *= 2)
    total += nn::Conv<T>::count(cin, cout, 3) + nn::BatchNorm<T>::count(cout);
  return total;
}

template <typename T>
SAModule<T>::SAModule(ParamStore<T>& store, const std::string& prefix, std::size_t channels,
                      std::uint64_t seed) {
  if (channels % 2 != 0)
    throw ShapeError("SA module needs an even channel count, got " + std::to_string(channels));
  const auto half = channels / 2;
  phi_ = nn::Conv<T>::make(store, prefix + ".phi", channels, half, 1, kPointwise, seed);
  theta_ = nn::Conv<T>::make(store, prefix + ".theta", channels, half, 1, kPointwise, seed);
  g_ = nn::Conv<T>::make(store, prefix + ".g", channels, half, 1, kPointwise, seed);
  out_ = nn::Conv<T>::make(store, prefix + ".out", half, channels, 1, kPointwise, seed);
}

template <typename T>
Tensor<T> SAModule<T>::attention(Tape<T>* tape, const Tensor<T>& x) const {
  return ops::softmax(tape, ops::pairwise_dot(tape, phi_(tape, x), theta_(tape, x)), 3);
}

template <typename T>
Tensor<T> SAModule<T>::forward(Tape<T>* tape, const Tensor<T>& x) const {
  return out_(tape, ops::attend(tape, attention(tape, x), g_(tape, x)));
}

template <typename T>
std::size_t SAModule<T>::count(std::size_t channels) {
  const auto half = channels / 2;
  return 3 * nn::Conv<T>::count(channels, half, 1) + nn::Conv<T>::count(half, channels, 1);
}

template <typename T>
CrossAttention<T>::CrossAttention(ParamStore<T>& store, const std::string& prefix,
                                  std::size_t width, bool with_sa, std::uint64_t seed)
    : with_sa_(with_sa) {
  reduce_ = nn::Conv<T>::make(store, prefix + ".reduce", 2 * width, width, 3, kSame3x3, seed);
  for (int k = 0; k < kBlocks; ++k) {
    const auto p = prefix + ".block" + std::to_string(k + 1);
    conv_[k] = nn::Conv<T>::make(store, p + ".conv", width, width, 3, kSame3x3, seed);
    if (with_sa) sa_[k] = SAModule<T>(store, p + ".sa", width, seed);
  }
}

template <typename T>
Tensor<T> CrossAttention<T>::forward(Tape<T>* tape, const Tensor<T>& zi, const Tensor<T>& zr,
                                     ForwardTrace* trace, const std::string& tag) const {
  if (zi.shape() != zr.shape())
    throw ShapeError("cross_attention: Z_i " + shape_to_string(zi.shape()) + " vs Z_r " +
                     shape_to_string(zr.shape()));
  auto c = ops::concat_channels<T>(tape, {zi, zr});
  note(trace, tag + ".c0", c.shape());
  c = ops::relu(tape, reduce_(tape, c));
  note(trace, tag + ".c1", c.shape());
  for (int k = 0; k < kBlocks; ++k) {
    auto product = with_sa_ ? ops::mul(tape, c, sa_[k].forward(tape, c)) : c;
    c = ops::add(tape, product, conv_[k](tape, c));
    note(trace, tag + ".c" + std::to_string(k + 2), c.shape());
  }
  return ops::sigmoid(tape, c);
}

template <typename T>
std::size_t CrossAttention<T>::count(std::size_t width, bool with_sa) {
  std::size_t total = nn::Conv<T>::count(2 * width, width, 3);
  total += kBlocks * nn::Conv<T>::count(width, width, 3);
  if (with_sa) total += kBlocks * SAModule<T>::count(width);
  return total;
}

template <typename T>
Pccaf<T>::Pccaf(ParamStore<T>& store, const ModelConfig& config) : config_(config) {
  config_.validate();
  for (int b : config_.enabled_branches())
    enc_[b] = Encoder<T>(store, "pccaf.enc" + std::to_string(b + 1), config_.base_width,
                         config_.seed);
  for (int b : config_.gated_branches())
    xattn_[b] = CrossAttention<T>(store, "pccaf.xattn" + std::to_string(b + 1),
                                  config_.feature_width(), config_.enable_sa_module, config_.seed);
}

template <typename T>
PccafOutput<T> Pccaf<T>::forward(Tape<T>* tape, const BranchInputs<T>& inputs, bool training,
                                 ForwardTrace* trace) {
  const auto enabled = config_.enabled_branches();
  const auto s = config_.input_size;
  const Tensor<T>& first = inputs[enabled.front()];
  for (int b : enabled) {
    const auto& x = inputs[b];
    if (!x.defined())
      throw ShapeError("pccaf: no input for enabled branch " + branch_name(b));
    if (x.rank() != 4 || x.dim(1) != 1 || x.dim(2) != s || x.dim(3) != s ||
        (first.defined() && x.dim(0) != first.dim(0)))
      throw ShapeError("pccaf: branch " + branch_name(b) + " input " +
                       shape_to_string(x.shape()) + ", expected [N,1," + std::to_string(s) +
                       "," + std::to_string(s) + "]");
  }

  PccafOutput<T> out;
  for (int b : enabled) {
    note(trace, "input." + branch_name(b), inputs[b].shape());
    out.z[b] = enc_[b].forward(tape, inputs[b], training, trace, "enc" + std::to_string(b + 1));
    out.gated[b] = out.z[b];
  }
  out.z_main = out.z[config_.main_branch];
  for (int b : config_.gated_branches()) {
    const auto tag = "xattn" + std::to_string(b + 1);
    out.gate[b] = xattn_[b].forward(tape, out.z[b], out.z_main, trace, tag);
    out.gated[b] = ops::mul(tape, out.z[b], out.gate[b]);
  }

  std::vector<Tensor<T>> parts;
  for (int b : enabled) parts.push_back(out.gated[b]);
  if (config_.fusion == Fusion::kConcat) {
    out.z_s = parts.size() == 1 ? parts[0] : ops::concat_channels<T>(tape, parts);
  } else {
    out.z_s = parts[0];
    for (std::size_t i = 1; i < parts.size(); ++i) out.z_s = ops::add(tape, out.z_s, parts[i]);
  }
  note(trace, "z_s", out.z_s.shape());
  return out;
}

template class Encoder<float>;
template class Encoder<double>;
template class SAModule<float>;
template class SAModule<double>;
template class CrossAttention<float>;
template class CrossAttention<double>;
template class Pccaf<float>;
template class Pccaf<double>;

}  // namespace dpg
