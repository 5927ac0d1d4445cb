#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "leukonet/errors.hpp"
#include "leukonet/history.hpp"
#include "leukonet/model.hpp"

namespace leukonet {

inline constexpr int kCheckpointFormatVersion = 1;

template <typename T>
constexpr const char* precision_name() {
  return sizeof(T) == 4 ? "single" : "double";
}

namespace detail {

static_assert(std::endian::native == std::endian::little,
              "checkpoint blobs are little-endian; big-endian hosts need byte swaps");

template <typename T>
void write_blob(const Tensor<T>& t, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoFailure("cannot write blob: " + path.string());
  out.write(reinterpret_cast<const char*>(t.ptr()),
            static_cast<std::streamsize>(t.size() * sizeof(T)));
  if (!out) throw IoFailure("short write: " + path.string());
}

template <typename T>
void read_blob(Tensor<T>& t, const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoFailure("cannot read blob: " + path.string());
  const auto expected = static_cast<std::streamsize>(t.size() * sizeof(T));
  in.read(reinterpret_cast<char*>(t.ptr()), expected);
  if (in.gcount() != expected)
    throw ManifestCorrupt("blob shorter than its manifest shape: " + path.string());
  char extra;
  if (in.read(&extra, 1), in.gcount() != 0)
    throw ManifestCorrupt("blob longer than its manifest shape: " + path.string());
}

inline nlohmann::ordered_json layer_to_json(const LayerSpec& l) {
  nlohmann::ordered_json j{{"kind", layer_kind_name(l.kind)}};
  switch (l.kind) {
    case LayerKind::conv2d:
      j["out_channels"] = l.out_channels;
      j["kernel"] = l.kernel;
      j["stride"] = l.stride;
      j["padding"] = l.padding;
      break;
    case LayerKind::maxpool2d:
      j["kernel"] = l.kernel;
      j["stride"] = l.stride;
      break;
    case LayerKind::dense:
      j["out_features"] = l.out_features;
      break;
    default:
      break;
  }
  return j;
}

inline LayerSpec layer_from_json(const nlohmann::json& j) {
  LayerSpec l;
  l.kind = layer_kind_from_name(j.at("kind").get<std::string>());
  switch (l.kind) {
    case LayerKind::conv2d:
      l.out_channels = j.at("out_channels").get<std::size_t>();
      l.kernel = j.at("kernel").get<std::size_t>();
      l.stride = j.at("stride").get<std::size_t>();
      l.padding = j.at("padding").get<std::size_t>();
      break;
    case LayerKind::maxpool2d:
      l.kernel = j.at("kernel").get<std::size_t>();
      l.stride = j.at("stride").get<std::size_t>();
      break;
    case LayerKind::dense:
      l.out_features = j.at("out_features").get<std::size_t>();
      break;
    default:
      break;
  }
  return l;
}

}  // namespace detail

/// Writes `manifest.json` plus one little-endian IEEE-754 blob per
/// parameter into `dir`. Loading reproduces every parameter bitwise and
/// every epoch record exactly.
template <typename T>
void save_checkpoint(const ModelGraph<T>& model, const std::vector<EpochRecord>& records,
                     const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoFailure("cannot create checkpoint directory: " + dir.string());

  nlohmann::ordered_json manifest;
  manifest["format_version"] = kCheckpointFormatVersion;
  manifest["model"] = model.name();
  manifest["input_size"] = model.input_size();
  manifest["in_channels"] = model.in_channels();
  manifest["head"] = head_kind_name(model.head());
  manifest["precision"] = precision_name<T>();
  manifest["seed"] = model.seed();
  manifest["epoch"] = records.empty() ? 0 : records.back().epoch;

  manifest["layers"] = nlohmann::ordered_json::array();
  for (const auto& l : model.layers()) manifest["layers"].push_back(detail::layer_to_json(l));

  manifest["params"] = nlohmann::ordered_json::array();
  for (const auto& p : model.params()) {
    manifest["params"].push_back({{"name", p.name},
                                  {"shape", p.value.shape},
                                  {"file", p.name + ".bin"}});
    detail::write_blob(p.value, dir / (p.name + ".bin"));
  }

  manifest["history"] = nlohmann::ordered_json::array();
  for (const auto& r : records) {
    manifest["history"].push_back({{"epoch", r.epoch},
                                   {"train_loss", r.train_loss},
                                   {"train_acc", r.train_accuracy},
                                   {"val_loss", r.val_loss},
                                   {"val_acc", r.val_accuracy}});
  }

  std::ofstream out(dir / "manifest.json", std::ios::trunc);
  if (!out) throw IoFailure("cannot write checkpoint manifest");
  out << manifest.dump(2) << "\n";
  if (!out) throw IoFailure("short write: checkpoint manifest");
}

/// Reads just the stored precision ("single" or "double") so callers can
/// dispatch to the right load_checkpoint<T> instantiation.
inline std::string checkpoint_precision(const std::filesystem::path& dir) {
  std::ifstream in(dir / "manifest.json");
  if (!in) throw IoFailure("cannot read checkpoint manifest in " + dir.string());
  nlohmann::json manifest;
  try {
    in >> manifest;
    if (manifest.at("format_version").get<int>() != kCheckpointFormatVersion)
      throw VersionMismatch("unsupported checkpoint format version");
    return manifest.at("precision").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw ManifestCorrupt("bad checkpoint manifest: " + std::string(e.what()));
  }
}

template <typename T>
std::pair<ModelGraph<T>, std::vector<EpochRecord>> load_checkpoint(
    const std::filesystem::path& dir) {
  std::ifstream in(dir / "manifest.json");
  if (!in) throw IoFailure("cannot read checkpoint manifest in " + dir.string());
  nlohmann::json manifest;
  try {
    in >> manifest;
  } catch (const nlohmann::json::exception& e) {
    throw ManifestCorrupt("checkpoint manifest is not valid JSON: " + std::string(e.what()));
  }

  try {
    if (manifest.at("format_version").get<int>() != kCheckpointFormatVersion)
      throw VersionMismatch("checkpoint format version " +
                            manifest.at("format_version").dump() + " is not supported");
    if (manifest.at("precision").get<std::string>() != precision_name<T>())
      throw ManifestCorrupt("checkpoint precision is " +
                            manifest.at("precision").get<std::string>() +
                            ", requested " + precision_name<T>());

    std::vector<LayerSpec> layers;
    for (const auto& lj : manifest.at("layers")) layers.push_back(detail::layer_from_json(lj));

    ModelGraph<T> model(manifest.at("model").get<std::string>(),
                        manifest.at("input_size").get<std::size_t>(),
                        head_kind_from_name(manifest.at("head").get<std::string>()),
                        std::move(layers), manifest.at("seed").get<std::uint64_t>(),
                        manifest.at("in_channels").get<std::size_t>());

    const auto& params_meta = manifest.at("params");
    if (params_meta.size() != model.params().size())
      throw ManifestCorrupt("parameter count disagrees with the layer list");
    for (std::size_t i = 0; i < model.params().size(); ++i) {
      auto& p = model.params()[i];
      const auto& meta = params_meta[i];
      if (meta.at("name").get<std::string>() != p.name)
        throw ManifestCorrupt("parameter name mismatch at index " + std::to_string(i));
      if (meta.at("shape").get<std::vector<std::size_t>>() != p.value.shape)
        throw ManifestCorrupt("parameter shape mismatch for " + p.name);
      detail::read_blob(p.value, dir / meta.at("file").get<std::string>());
    }

    std::vector<EpochRecord> records;
    for (const auto& rj : manifest.at("history")) {
      records.push_back(EpochRecord{rj.at("epoch").get<int>(),
                                    rj.at("train_loss").get<double>(),
                                    rj.at("train_acc").get<double>(),
                                    rj.at("val_loss").get<double>(),
                                    rj.at("val_acc").get<double>()});
    }
    return {std::move(model), std::move(records)};
  } catch (const nlohmann::json::exception& e) {
    throw ManifestCorrupt("bad checkpoint manifest: " + std::string(e.what()));
  }
}

}  // namespace leukonet
