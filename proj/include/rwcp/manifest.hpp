#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace rwcp {

struct ManifestEntry {
  std::string id;
  std::filesystem::path prob_path;
  std::filesystem::path feature_path;
  std::optional<std::filesystem::path> mask_path;
};

// Ordered list of per-sample tensor files. Paths are stored resolved
// against the manifest's directory.
struct DatasetManifest {
  std::vector<ManifestEntry> entries;

  bool all_have_masks() const noexcept;
};

// Parses {"entries":[{"id","prob","features","mask"?}]}. Rejects duplicate
// ids (MalformedFile) and missing files (IoFailure).
DatasetManifest load_manifest(const std::filesystem::path& path);

// Writes paths relative to the manifest's directory when possible.
void save_manifest(const DatasetManifest& manifest, const std::filesystem::path& path);

}  // namespace rwcp
