#pragma once

#include <complex>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

namespace dpg::sar {

using Complex = std::complex<float>;

struct RealImage {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<float> pixels;  // row-major

  RealImage() = default;
  RealImage(std::size_t h, std::size_t w, float fill = 0.0f)
      : height(h), width(w), pixels(h * w, fill) {}

  bool empty() const noexcept { return pixels.empty(); }
  float at(std::size_t y, std::size_t x) const { return pixels[y * width + x]; }
  float& at(std::size_t y, std::size_t x) { return pixels[y * width + x]; }
};

/// Co-registered single-look complex chips of one target.
struct ComplexChipPair {
  std::string id;
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<Complex> svh;  // S_VH, row-major
  std::vector<Complex> svv;  // S_VV, row-major
  std::optional<int> label;

  // Throws std::invalid_argument if the planes are not height*width or hold
  // non-finite samples.
  void validate() const;
};

/// Raw magnitudes before normalisation.
struct RawChannels {
  RealImage i1;  // |S_VH|
  RealImage i2;  // |S_VV|
  RealImage i3;  // |S_VV * conj(S_VH)|
};

/// Which derived channels a consumer needs. I_1 and I_3 both read S_VH.
struct ChannelMask {
  bool i1 = true;
  bool i2 = true;
  bool i3 = true;

  bool needs_vh() const noexcept { return i1 || i3; }
  bool any() const noexcept { return i1 || i2 || i3; }
};

/// Network input: the three channels scaled to [0,1] and resized to a square
/// target. Channels excluded by the mask are left empty.
struct GuidedTriple {
  RealImage i1, i2, i3;
  std::optional<int> label;
  std::string id;
};

RawChannels derive_channels(const ComplexChipPair& pair);

/// Like derive_channels but only computes (and only reads) what `mask`
/// selects; S_VH is never touched when neither I_1 nor I_3 is selected.
RawChannels derive_channels(const ComplexChipPair& pair, ChannelMask mask);

/// Divides by the image maximum; an all-zero image stays zero.
RealImage normalize_by_max(const RealImage& img);

RealImage resize_bilinear(const RealImage& img, std::size_t out_h, std::size_t out_w);

/// Per-channel max normalisation then bilinear resize to target x target.
GuidedTriple normalize_and_resize(const RawChannels& raw, std::size_t target);

GuidedTriple make_guided_triple(const ComplexChipPair& pair, std::size_t target,
                                ChannelMask mask = {});

}  // namespace dpg::sar
