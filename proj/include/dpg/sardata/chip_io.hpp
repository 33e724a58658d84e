#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include "dpg/sardata/chip.hpp"

namespace dpg::sar {

inline constexpr std::uint32_t kChipVersion = 1;
inline constexpr std::uint32_t kMaxChipExtent = 1u << 15;

// Layout: "SARC", u32 version, u32 H, u32 W, VH plane, VV plane; each plane is
// H*W (f32 re, f32 im) pairs, row-major, little-endian. Labels are not stored.
std::string encode_chip(const ComplexChipPair& pair);

// Throws FormatError: "bad magic", "unsupported SARC version", "dimension
// overflow" (zero or > kMaxChipExtent), "truncated", "trailing bytes".
ComplexChipPair decode_chip(std::string_view bytes, std::string id = {});

void write_chip(const std::filesystem::path& path, const ComplexChipPair& pair);

// The chip id is the file stem.
ComplexChipPair read_chip(const std::filesystem::path& path);

}  // namespace dpg::sar
