#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

namespace dpg::sar {

struct ManifestRecord {
  std::filesystem::path path;  // absolute after loading
  int label = 0;
};

struct DatasetManifest {
  std::vector<ManifestRecord> records;  // file order
  std::vector<std::string> class_names;
  std::string split;  // "train", "test" or "" when the file name says neither

  std::size_t class_count() const noexcept { return class_names.size(); }
  std::vector<std::size_t> class_histogram() const;
};

// Reads a JSON-lines manifest of {"path": str, "label": int}; relative paths
// resolve against the manifest's directory. `classes` defaults to the
// classes.json sidecar next to the manifest ({"classes": [names...]}).
// Throws FormatError on malformed lines, ConfigError on labels outside the
// class table or unreadable chip files.
DatasetManifest load_manifest(const std::filesystem::path& manifest,
                              std::filesystem::path classes = {});

// Paths are written relative to the manifest's directory where possible.
void write_manifest(const std::filesystem::path& manifest,
                    const std::vector<ManifestRecord>& records);

void write_class_table(const std::filesystem::path& path, const std::vector<std::string>& names);
std::vector<std::string> read_class_table(const std::filesystem::path& path);

}  // namespace dpg::sar
