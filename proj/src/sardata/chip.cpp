#include "dpg/sardata/chip.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "dpg/tensor/ops.hpp"

namespace dpg::sar {

void ComplexChipPair::validate() const {
  const auto n = height * width;
  if (height == 0 || width == 0)
    throw std::invalid_argument("chip '" + id + "' has an empty extent");
  if (svh.size() != n || svv.size() != n)
    throw std::invalid_argument("chip '" + id + "': S_VH/S_VV planes are not " +
                                std::to_string(height) + "x" + std::to_string(width));
  for (const auto* plane : {&svh, &svv})
    for (const auto& z : *plane)
      if (!std::isfinite(z.real()) || !std::isfinite(z.imag()))
        throw std::invalid_argument("chip '" + id + "' holds a non-finite sample");
}

RawChannels derive_channels(const ComplexChipPair& pair) {
  return derive_channels(pair, ChannelMask{});
}

RawChannels derive_channels(const ComplexChipPair& pair, ChannelMask mask) {
  const auto n = pair.height * pair.width;
  if (pair.svv.size() != n || (mask.needs_vh() && pair.svh.size() != n))
    throw std::invalid_argument("derive_channels: S_VH and S_VV are not co-registered " +
                                std::to_string(pair.height) + "x" + std::to_string(pair.width) +
                                " planes");
  RawChannels out;
  if (mask.i1) out.i1 = RealImage(pair.height, pair.width);
  if (mask.i2) out.i2 = RealImage(pair.height, pair.width);
  if (mask.i3) out.i3 = RealImage(pair.height, pair.width);
  for (std::size_t k = 0; k < n; ++k) {
    const Complex vv = pair.svv[k];
    if (mask.i2) out.i2.pixels[k] = std::abs(vv);
    if (!mask.needs_vh()) continue;
    const Complex vh = pair.svh[k];
    if (mask.i1) out.i1.pixels[k] = std::abs(vh);
    if (mask.i3) out.i3.pixels[k] = std::abs(vv * std::conj(vh));
  }
  return out;
}

RealImage normalize_by_max(const RealImage& img) {
  RealImage out = img;
  float mx = 0.0f;
  for (float v : img.pixels) mx = std::max(mx, v);
  if (mx > 0.0f)
    for (float& v : out.pixels) v /= mx;
  return out;
}

RealImage resize_bilinear(const RealImage& img, std::size_t out_h, std::size_t out_w) {
  Tensor<float> t({1, img.height, img.width}, img.pixels);
  auto r = ops::bilinear_resize(t, out_h, out_w);
  RealImage out(out_h, out_w);
  std::copy(r.data().begin(), r.data().end(), out.pixels.begin());
  return out;
}

namespace {

RealImage prepare(const RealImage& raw, std::size_t target) {
  if (raw.empty()) return {};
  return resize_bilinear(normalize_by_max(raw), target, target);
}

}  // namespace

GuidedTriple normalize_and_resize(const RawChannels& raw, std::size_t target) {
  if (target == 0) throw std::invalid_argument("normalize_and_resize: target must be positive");
  GuidedTriple g;
  g.i1 = prepare(raw.i1, target);
  g.i2 = prepare(raw.i2, target);
  g.i3 = prepare(raw.i3, target);
  return g;
}

GuidedTriple make_guided_triple(const ComplexChipPair& pair, std::size_t target,
                                ChannelMask mask) {
  auto g = normalize_and_resize(derive_channels(pair, mask), target);
  g.label = pair.label;
  g.id = pair.id;
  return g;
}

}  // namespace dpg::sar
