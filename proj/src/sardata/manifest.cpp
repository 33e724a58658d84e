#include "dpg/sardata/manifest.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "dpg/tensor/binary_io.hpp"
#include "dpg/tensor/errors.hpp"

namespace dpg::sar {

namespace fs = std::filesystem;
using nlohmann::json;

std::vector<std::size_t> DatasetManifest::class_histogram() const {
  std::vector<std::size_t> h(class_names.size(), 0);
  for (const auto& r : records) ++h[static_cast<std::size_t>(r.label)];
  return h;
}

std::vector<std::string> read_class_table(const fs::path& path) {
  json doc;
  try {
    doc = json::parse(io::read_file(path));
  } catch (const json::exception& e) {
    throw FormatError("class table " + path.string() + ": " + e.what());
  }
  if (!doc.is_object() || !doc.contains("classes") || !doc["classes"].is_array())
    throw FormatError("class table " + path.string() + ": expected {\"classes\": [...]}");
  std::vector<std::string> names;
  for (const auto& n : doc["classes"]) {
    if (!n.is_string()) throw FormatError("class table " + path.string() + ": non-string name");
    names.push_back(n.get<std::string>());
  }
  if (names.empty()) throw FormatError("class table " + path.string() + " is empty");
  return names;
}

void write_class_table(const fs::path& path, const std::vector<std::string>& names) {
  io::write_file_atomic(path, json{{"classes", names}}.dump(2) + "\n");
}

DatasetManifest load_manifest(const fs::path& manifest, fs::path classes) {
  const auto dir = manifest.parent_path();
  if (classes.empty()) classes = dir / "classes.json";
  DatasetManifest out;
  out.class_names = read_class_table(classes);
  const auto stem = manifest.stem().string();
  if (stem.find("train") != std::string::npos) out.split = "train";
  else if (stem.find("test") != std::string::npos) out.split = "test";

  std::istringstream in(io::read_file(manifest));
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto where = manifest.string() + ":" + std::to_string(lineno);
    json rec;
    try {
      rec = json::parse(line);
    } catch (const json::exception& e) {
      throw FormatError(where + ": " + e.what());
    }
    if (!rec.is_object() || !rec.contains("path") || !rec["path"].is_string() ||
        !rec.contains("label") || !rec["label"].is_number_integer())
      throw FormatError(where + ": expected {\"path\": string, \"label\": int}");
    ManifestRecord r;
    r.path = rec["path"].get<std::string>();
    if (r.path.is_relative()) r.path = dir / r.path;
    const auto label = rec["label"].get<long long>();
    if (label < 0 || label >= static_cast<long long>(out.class_names.size()))
      throw ConfigError(where + ": label " + std::to_string(label) + " outside class table of " +
                        std::to_string(out.class_names.size()));
    r.label = static_cast<int>(label);
    if (!fs::is_regular_file(r.path))
      throw ConfigError(where + ": chip file " + r.path.string() + " is not readable");
    out.records.push_back(std::move(r));
  }
  return out;
}

void write_manifest(const fs::path& manifest, const std::vector<ManifestRecord>& records) {
  const auto dir = fs::absolute(manifest).parent_path().lexically_normal();
  std::string body;
  for (const auto& r : records) {
    auto p = fs::absolute(r.path).lexically_normal().lexically_relative(dir);
    if (p.empty()) p = fs::absolute(r.path);
    body += json{{"path", p.generic_string()}, {"label", r.label}}.dump() + "\n";
  }
  io::write_file_atomic(manifest, body);
}

}  // namespace dpg::sar
