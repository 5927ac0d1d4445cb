#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include <json.hpp>

#include "leukonet/errors.hpp"
#include "leukonet/image_codec.hpp"
#include "leukonet/pixel_hash.hpp"

namespace leukonet {

enum class Split { train, val, test, unassigned };

inline const char* split_name(Split s) {
  switch (s) {
    case Split::train: return "train";
    case Split::val: return "val";
    case Split::test: return "test";
    default: return "unassigned";
  }
}

inline Split split_from_name(const std::string& s) {
  if (s == "train") return Split::train;
  if (s == "val") return Split::val;
  if (s == "test") return Split::test;
  if (s == "unassigned") return Split::unassigned;
  throw ManifestCorrupt("unknown split name: " + s);
}

/// One image of the dataset. `path` is relative to the dataset root, with
/// forward slashes, and doubles as the stable sort key.
struct DatasetRecord {
  std::string path;
  int label = 0;  // 0 = normal, 1 = cancer
  Split split = Split::unassigned;
  std::string content_hash;  // hex SHA-256 of decoded pixels

  bool operator==(const DatasetRecord&) const = default;
};

inline constexpr const char* kClassDirs[2] = {"normal", "cancer"};

namespace detail {

inline bool has_image_extension(const std::filesystem::path& p) {
  const std::string ext = lower_extension(p);
  return ext == ".png" || ext == ".bmp" || ext == ".ppm";
}

}  // namespace detail

/// Enumerates `<root>/cancer` and `<root>/normal`, decoding every image to
/// hash its pixels. Output is sorted lexicographically by relative path.
/// Undecodable files are skipped with a warning on stderr.
inline std::vector<DatasetRecord> scan_dataset(const std::filesystem::path& root) {
  namespace fs = std::filesystem;
  std::vector<DatasetRecord> records;
  for (int label = 0; label < 2; ++label) {
    const fs::path class_dir = root / kClassDirs[label];
    if (!fs::is_directory(class_dir))
      throw EmptyClass("missing class directory: " + class_dir.string());

    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(class_dir))
      if (entry.is_regular_file() && detail::has_image_extension(entry.path()))
        files.push_back(entry.path());
    std::sort(files.begin(), files.end());

    std::size_t decoded = 0;
    for (const auto& file : files) {
      DatasetRecord rec;
      rec.path = std::string(kClassDirs[label]) + "/" + file.filename().string();
      rec.label = label;
      try {
        rec.content_hash = pixel_hash(load_image(file));
      } catch (const std::exception& e) {
        std::cerr << "warning: skipping " << file.string() << ": " << e.what() << "\n";
        continue;
      }
      records.push_back(std::move(rec));
      ++decoded;
    }
    if (decoded == 0)
      throw EmptyClass("class directory has no decodable images: " + class_dir.string());
  }
  std::sort(records.begin(), records.end(),
            [](const DatasetRecord& a, const DatasetRecord& b) { return a.path < b.path; });
  return records;
}

/// Exact-duplicate removal: among records sharing a content hash, the
/// lexicographically first path stays. Input order is preserved in both
/// output lists.
inline std::pair<std::vector<DatasetRecord>, std::vector<DatasetRecord>> dedup(
    const std::vector<DatasetRecord>& records) {
  std::unordered_map<std::string, std::string> first_path;  // hash -> keeper
  for (const auto& r : records) {
    auto [it, inserted] = first_path.emplace(r.content_hash, r.path);
    if (!inserted && r.path < it->second) it->second = r.path;
  }
  std::vector<DatasetRecord> kept, removed;
  for (const auto& r : records) {
    if (first_path.at(r.content_hash) == r.path)
      kept.push_back(r);
    else
      removed.push_back(r);
  }
  return {std::move(kept), std::move(removed)};
}

inline nlohmann::ordered_json manifest_json(const std::vector<DatasetRecord>& records) {
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (const auto& r : records) {
    arr.push_back({{"path", r.path},
                   {"label", r.label},
                   {"split", split_name(r.split)},
                   {"hash", r.content_hash}});
  }
  return arr;
}

inline void save_manifest(const std::vector<DatasetRecord>& records,
                          const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoFailure("cannot write manifest: " + path.string());
  out << manifest_json(records).dump(2) << "\n";
  if (!out) throw IoFailure("short write: " + path.string());
}

inline std::vector<DatasetRecord> load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoFailure("cannot read manifest: " + path.string());
  nlohmann::json arr;
  try {
    in >> arr;
  } catch (const nlohmann::json::exception& e) {
    throw ManifestCorrupt("manifest is not valid JSON: " + std::string(e.what()));
  }
  if (!arr.is_array()) throw ManifestCorrupt("manifest must be a JSON array");
  std::vector<DatasetRecord> records;
  records.reserve(arr.size());
  for (const auto& item : arr) {
    DatasetRecord r;
    try {
      r.path = item.at("path").get<std::string>();
      r.label = item.at("label").get<int>();
      r.split = split_from_name(item.at("split").get<std::string>());
      r.content_hash = item.at("hash").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
      throw ManifestCorrupt("bad manifest record: " + std::string(e.what()));
    }
    if (r.label != 0 && r.label != 1)
      throw ManifestCorrupt("label out of range in manifest: " + std::to_string(r.label));
    records.push_back(std::move(r));
  }
  return records;
}

}  // namespace leukonet
