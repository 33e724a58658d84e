#include "dpg/sardata/chip_io.hpp"

#include "dpg/tensor/binary_io.hpp"
#include "dpg/tensor/errors.hpp"

namespace dpg::sar {

namespace {
constexpr std::string_view kMagic = "SARC";
}

std::string encode_chip(const ComplexChipPair& pair) {
  pair.validate();
  if (pair.height > kMaxChipExtent || pair.width > kMaxChipExtent)
    throw std::invalid_argument("write_chip: extent exceeds " + std::to_string(kMaxChipExtent));
  io::ByteWriter w;
  w.bytes(kMagic);
  w.u32(kChipVersion);
  w.u32(static_cast<std::uint32_t>(pair.height));
  w.u32(static_cast<std::uint32_t>(pair.width));
  for (const auto* plane : {&pair.svh, &pair.svv})
    for (const auto& z : *plane) {
      w.f32(z.real());
      w.f32(z.imag());
    }
  return w.take();
}

ComplexChipPair decode_chip(std::string_view bytes, std::string id) {
  io::ByteReader r(bytes, "SARC chip");
  if (r.remaining() < 4 || r.bytes(4) != kMagic)
    throw FormatError("bad magic: not a SARC chip");
  const auto version = r.u32();
  if (version != kChipVersion)
    throw FormatError("unsupported SARC version " + std::to_string(version));
  const auto h = r.u32();
  const auto w = r.u32();
  if (h == 0 || w == 0 || h > kMaxChipExtent || w > kMaxChipExtent)
    throw FormatError("dimension overflow: SARC header declares " + std::to_string(h) + "x" +
                      std::to_string(w));
  const std::size_t n = static_cast<std::size_t>(h) * w;
  r.require(2 * n * 8);
  ComplexChipPair p;
  p.id = std::move(id);
  p.height = h;
  p.width = w;
  for (auto* plane : {&p.svh, &p.svv}) {
    plane->resize(n);
    for (auto& z : *plane) {
      const float re = r.f32();
      z = Complex(re, r.f32());
    }
  }
  if (r.remaining() != 0)
    throw FormatError("trailing bytes after SARC planes");
  return p;
}

void write_chip(const std::filesystem::path& path, const ComplexChipPair& pair) {
  io::write_file_atomic(path, encode_chip(pair));
}

ComplexChipPair read_chip(const std::filesystem::path& path) {
  return decode_chip(io::read_file(path), path.stem().string());
}

}  // namespace dpg::sar
