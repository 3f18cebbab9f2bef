#include "rwcp/manifest.hpp"

#include <fstream>
#include <unordered_set>

#include <json.hpp>

#include "rwcp/error.hpp"
#include "rwcp/tensor_io.hpp"

namespace rwcp {

namespace fs = std::filesystem;

bool DatasetManifest::all_have_masks() const noexcept {
  for (const auto& e : entries) {
    if (!e.mask_path) return false;
  }
  return true;
}

namespace {

fs::path resolve(const fs::path& base, const std::string& rel, const std::string& id) {
  fs::path p = fs::path(rel).is_absolute() ? fs::path(rel) : base / rel;
  if (!fs::exists(p)) {
    throw Error(ErrorKind::IoFailure, "entry '" + id + "' references missing file " + p.string());
  }
  return p;
}

std::string relative_to(const fs::path& p, const fs::path& base) {
  std::error_code ec;
  auto rel = fs::relative(p, base, ec);
  if (ec || rel.empty()) return p.string();
  return rel.generic_string();
}

}  // namespace

DatasetManifest load_manifest(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::IoFailure, "cannot open manifest " + path.string());
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::MalformedFile, path.string() + ": " + e.what());
  }
  if (!doc.is_object() || !doc.contains("entries") || !doc["entries"].is_array()) {
    throw Error(ErrorKind::MalformedFile, path.string() + ": expected an \"entries\" array");
  }

  const fs::path base = path.parent_path().empty() ? fs::path(".") : path.parent_path();
  DatasetManifest m;
  std::unordered_set<std::string> seen;
  for (const auto& item : doc["entries"]) {
    try {
      ManifestEntry e;
      e.id = item.at("id").get<std::string>();
      if (!seen.insert(e.id).second) {
        throw Error(ErrorKind::MalformedFile, path.string() + ": duplicate id '" + e.id + "'");
      }
      e.prob_path = resolve(base, item.at("prob").get<std::string>(), e.id);
      e.feature_path = resolve(base, item.at("features").get<std::string>(), e.id);
      if (item.contains("mask") && !item["mask"].is_null()) {
        e.mask_path = resolve(base, item["mask"].get<std::string>(), e.id);
      }
      m.entries.push_back(std::move(e));
    } catch (const nlohmann::json::exception& ex) {
      throw Error(ErrorKind::MalformedFile, path.string() + ": " + ex.what());
    }
  }
  return m;
}

void save_manifest(const DatasetManifest& manifest, const fs::path& path) {
  const fs::path base = path.parent_path().empty() ? fs::path(".") : path.parent_path();
  nlohmann::json entries = nlohmann::json::array();
  for (const auto& e : manifest.entries) {
    nlohmann::json j;
    j["id"] = e.id;
    j["prob"] = relative_to(e.prob_path, base);
    j["features"] = relative_to(e.feature_path, base);
    if (e.mask_path) j["mask"] = relative_to(*e.mask_path, base);
    entries.push_back(std::move(j));
  }
  nlohmann::json doc;
  doc["entries"] = std::move(entries);
  write_file_atomic(path, doc.dump(2) + "\n");
}

}  // namespace rwcp
