#include "dpg/tensor/binary_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>
#include <system_error>

#include "dpg/tensor/errors.hpp"

namespace dpg::io {

void ByteWriter::u32(std::uint32_t v) {
  char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xffu);
  buf_.append(b, 4);
}

void ByteWriter::f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }

void ByteReader::require(std::size_t n) const {
  if (remaining() < n)
    throw FormatError("truncated " + what_ + ": need " + std::to_string(n) +
                      " more bytes at offset " + std::to_string(pos_) +
                      ", have " + std::to_string(remaining()));
}

std::uint32_t ByteReader::u32() {
  require(4);
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i)
    v |= static_cast<std::uint32_t>(static_cast<unsigned char>(data_[pos_ + i])) << (8 * i);
  pos_ += 4;
  return v;
}

float ByteReader::f32() { return std::bit_cast<float>(u32()); }

std::string_view ByteReader::bytes(std::size_t n) {
  require(n);
  auto s = data_.substr(pos_, n);
  pos_ += n;
  return s;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path.string() + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file_atomic(const std::filesystem::path& path, std::string_view bytes) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open '" + tmp.string() + "' for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw std::runtime_error("write failed for '" + tmp.string() + "'");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    throw std::runtime_error("cannot rename into '" + path.string() + "': " + ec.message());
  }
}

}  // namespace dpg::io
