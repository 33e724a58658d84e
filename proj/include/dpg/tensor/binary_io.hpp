#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

namespace dpg::io {

// Little-endian byte encoder.
class ByteWriter {
 public:
  void u32(std::uint32_t v);
  void f32(float v);
  void bytes(std::string_view s) { buf_.append(s); }
  const std::string& str() const noexcept { return buf_; }
  std::string take() noexcept { return std::move(buf_); }

 private:
  std::string buf_;
};

// Little-endian byte decoder. Every read past the end throws a FormatError
// whose message starts with "truncated".
class ByteReader {
 public:
  ByteReader(std::string_view data, std::string what)
      : data_(data), what_(std::move(what)) {}

  std::uint32_t u32();
  float f32();
  std::string_view bytes(std::size_t n);
  std::size_t remaining() const noexcept { return data_.size() - pos_; }
  void require(std::size_t n) const;

 private:
  std::string_view data_;
  std::size_t pos_ = 0;
  std::string what_;
};

std::string read_file(const std::filesystem::path& path);

// Writes to a sibling temporary file and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view bytes);

}  // namespace dpg::io
