#include "dpg/tensor/weights_io.hpp"

#include "dpg/tensor/binary_io.hpp"
#include "dpg/tensor/errors.hpp"

namespace dpg {

namespace {
constexpr std::string_view kMagic = "DPGW";
}

std::string encode_weights(const std::vector<WeightEntry>& entries) {
  io::ByteWriter w;
  w.bytes(kMagic);
  w.u32(kWeightsVersion);
  w.u32(static_cast<std::uint32_t>(entries.size()));
  for (const auto& e : entries) {
    w.u32(static_cast<std::uint32_t>(e.name.size()));
    w.bytes(e.name);
    w.u32(static_cast<std::uint32_t>(e.shape.size()));
    for (auto d : e.shape) w.u32(static_cast<std::uint32_t>(d));
    for (float v : e.data) w.f32(v);
  }
  return w.take();
}

std::vector<WeightEntry> decode_weights(std::string_view bytes) {
  io::ByteReader r(bytes, "weight file");
  if (r.remaining() < 4 || r.bytes(4) != kMagic)
    throw FormatError("bad magic: not a DPGW weight file");
  const auto version = r.u32();
  if (version != kWeightsVersion)
    throw FormatError("unsupported DPGW version " + std::to_string(version));
  const auto count = r.u32();
  std::vector<WeightEntry> out;
  for (std::uint32_t i = 0; i < count; ++i) {
    WeightEntry e;
    const auto len = r.u32();
    e.name = std::string(r.bytes(len));
    const auto rank = r.u32();
    if (rank < 1 || rank > 4)
      throw FormatError("entry '" + e.name + "' has invalid rank " + std::to_string(rank));
    std::uint64_t n = 1;
    for (std::uint32_t k = 0; k < rank; ++k) {
      const auto d = r.u32();
      if (d == 0) throw FormatError("entry '" + e.name + "' has a zero extent");
      n *= d;
      if (n > r.remaining() / 4 + 1)
        throw FormatError("truncated weight file: entry '" + e.name +
                          "' declares more data than present");
      e.shape.push_back(d);
    }
    r.require(n * 4);
    e.data.resize(n);
    for (auto& v : e.data) v = r.f32();
    out.push_back(std::move(e));
  }
  if (r.remaining() != 0)
    throw FormatError("trailing bytes after " + std::to_string(count) + " entries");
  return out;
}

template <typename T>
std::vector<WeightEntry> snapshot(const ParamStore<T>& store) {
  std::vector<WeightEntry> out;
  for (const auto& e : store.entries()) {
    WeightEntry w{e.name, e.value.shape(), {}};
    w.data.reserve(e.value.numel());
    for (auto v : e.value.data()) w.data.push_back(static_cast<float>(v));
    out.push_back(std::move(w));
  }
  return out;
}

template <typename T>
void save_weights(const std::filesystem::path& path, const ParamStore<T>& store) {
  io::write_file_atomic(path, encode_weights(snapshot(store)));
}

template <typename T>
void assign_weights(const std::vector<WeightEntry>& entries, ParamStore<T>& store) {
  auto& mine = store.entries();
  const auto n = std::min(entries.size(), mine.size());
  for (std::size_t i = 0; i < n; ++i) {
    if (entries[i].name != mine[i].name)
      throw ConfigError("architecture mismatch at entry " + std::to_string(i) +
                        ": file has '" + entries[i].name + "', model expects '" +
                        mine[i].name + "'");
    if (entries[i].shape != mine[i].value.shape())
      throw ConfigError("architecture mismatch for '" + mine[i].name + "': file shape " +
                        shape_to_string(entries[i].shape) + ", model shape " +
                        shape_to_string(mine[i].value.shape()));
  }
  if (entries.size() != mine.size()) {
    const auto& name = entries.size() > mine.size() ? entries[n].name : mine[n].name;
    throw ConfigError("architecture mismatch: entry count " +
                      std::to_string(entries.size()) + " vs model " +
                      std::to_string(mine.size()) + ", first unmatched '" + name + "'");
  }
  for (std::size_t i = 0; i < n; ++i) {
    auto dst = mine[i].value.mutable_data();
    for (std::size_t k = 0; k < dst.size(); ++k) dst[k] = static_cast<T>(entries[i].data[k]);
  }
}

template <typename T>
void load_weights(const std::filesystem::path& path, ParamStore<T>& store) {
  assign_weights(decode_weights(io::read_file(path)), store);
}

template std::vector<WeightEntry> snapshot(const ParamStore<float>&);
template std::vector<WeightEntry> snapshot(const ParamStore<double>&);
template void save_weights(const std::filesystem::path&, const ParamStore<float>&);
template void save_weights(const std::filesystem::path&, const ParamStore<double>&);
template void load_weights(const std::filesystem::path&, ParamStore<float>&);
template void load_weights(const std::filesystem::path&, ParamStore<double>&);
template void assign_weights(const std::vector<WeightEntry>&, ParamStore<float>&);
template void assign_weights(const std::vector<WeightEntry>&, ParamStore<double>&);

}  // namespace dpg
