#pragma once

#include <cstdint>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "oss/errors.hpp"
#include "oss/features.hpp"
#include "oss/osscore.hpp"
#include "oss/select.hpp"

namespace oss {

// One labeled dataset the toolkit can ingest. `annotations` is the COCO JSON
// file or the KITTI label directory depending on `format`; `images` is the
// image root. The alias map renames this dataset's class names onto the
// reference catalog during comparisons (exact-match keys).
struct DatasetEntry {
  std::string id;
  std::string format;  // "coco" | "kitti"
  std::string annotations;
  std::string images;
  std::map<std::string, std::string> aliases;

  void validate() const {
    if (id.empty()) throw domain_error("dataset entry: id must be non-empty");
    if (format != "coco" && format != "kitti")
      throw domain_error("dataset entry '" + id + "': format must be \"coco\" or \"kitti\"");
    if (annotations.empty())
      throw domain_error("dataset entry '" + id + "': annotations path must be non-empty");
  }
};

struct RunConfig {
  std::vector<DatasetEntry> datasets;
  FeatureConfig features;
  OSSConfig oss;
  SubsetSearchConfig subset;
  std::string output_dir = "out";
  int verbosity = 1;

  void validate() const {
    for (const auto& entry : datasets) entry.validate();
    for (std::size_t a = 0; a < datasets.size(); ++a)
      for (std::size_t b = a + 1; b < datasets.size(); ++b)
        if (datasets[a].id == datasets[b].id)
          throw domain_error("run config: duplicate dataset id '" + datasets[a].id + "'");
    features.validate();
    oss.validate();
    subset.validate();
    if (output_dir.empty()) throw domain_error("run config: output_dir must be non-empty");
    if (verbosity < 0 || verbosity > 2)
      throw domain_error("run config: verbosity must be 0, 1, or 2");
  }

  const DatasetEntry& find_dataset(const std::string& id) const {
    for (const auto& entry : datasets)
      if (entry.id == id) return entry;
    throw domain_error("run config: no dataset with id '" + id + "'");
  }

  // Union of every dataset's alias map; later entries win on key collisions.
  std::map<std::string, std::string> combined_aliases() const {
    std::map<std::string, std::string> all;
    for (const auto& entry : datasets)
      for (const auto& [from, to] : entry.aliases) all[from] = to;
    return all;
  }
};

namespace detail {

template <typename T>
T json_get(const nlohmann::json& doc, const char* key, T fallback, const char* where) {
  if (!doc.contains(key)) return fallback;
  try {
    return doc.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw parse_error(std::string(where) + ": field '" + key + "' has the wrong type");
  }
}

}  // namespace detail

inline nlohmann::ordered_json feature_config_to_json(const FeatureConfig& config) {
  nlohmann::ordered_json doc;
  doc["use_ar"] = config.use_ar;
  doc["use_dct"] = config.use_dct;
  doc["use_ch"] = config.use_ch;
  doc["use_hue"] = config.use_hue;
  doc["use_sat"] = config.use_sat;
  doc["use_val"] = config.use_val;
  doc["dct_resize_px"] = config.dct_resize_px;
  doc["ch_bins_per_channel"] = config.ch_bins_per_channel;
  doc["ch_normalized"] = config.ch_normalized;
  return doc;
}

inline FeatureConfig feature_config_from_json(const nlohmann::json& doc) {
  if (!doc.is_object()) throw parse_error("feature config: expected a JSON object");
  FeatureConfig config;
  config.use_ar = detail::json_get(doc, "use_ar", config.use_ar, "feature config");
  config.use_dct = detail::json_get(doc, "use_dct", config.use_dct, "feature config");
  config.use_ch = detail::json_get(doc, "use_ch", config.use_ch, "feature config");
  config.use_hue = detail::json_get(doc, "use_hue", config.use_hue, "feature config");
  config.use_sat = detail::json_get(doc, "use_sat", config.use_sat, "feature config");
  config.use_val = detail::json_get(doc, "use_val", config.use_val, "feature config");
  config.dct_resize_px =
      detail::json_get(doc, "dct_resize_px", config.dct_resize_px, "feature config");
  config.ch_bins_per_channel =
      detail::json_get(doc, "ch_bins_per_channel", config.ch_bins_per_channel, "feature config");
  config.ch_normalized =
      detail::json_get(doc, "ch_normalized", config.ch_normalized, "feature config");
  return config;
}

inline nlohmann::ordered_json oss_config_to_json(const OSSConfig& config) {
  nlohmann::ordered_json doc;
  doc["c_w"] = config.c_w;
  doc["k_neighbors"] = config.k_neighbors;
  doc["kde_sample_size"] = config.kde_sample_size;
  doc["seed"] = config.seed;
  doc["min_class_crops"] = config.min_class_crops;
  doc["threads"] = config.threads;
  doc["disable_r"] = config.disable_r;
  doc["raw_count_r"] = config.raw_count_r;
  doc["disable_jsd"] = config.disable_jsd;
  doc["disable_t1"] = config.disable_t1;
  doc["disable_beta"] = config.disable_beta;
  doc["disable_weights"] = config.disable_weights;
  doc["global_jsd"] = config.global_jsd;
  return doc;
}

inline OSSConfig oss_config_from_json(const nlohmann::json& doc) {
  if (!doc.is_object()) throw parse_error("oss config: expected a JSON object");
  OSSConfig config;
  config.c_w = detail::json_get(doc, "c_w", config.c_w, "oss config");
  config.k_neighbors = detail::json_get(doc, "k_neighbors", config.k_neighbors, "oss config");
  config.kde_sample_size =
      detail::json_get(doc, "kde_sample_size", config.kde_sample_size, "oss config");
  config.seed = detail::json_get(doc, "seed", config.seed, "oss config");
  config.min_class_crops =
      detail::json_get(doc, "min_class_crops", config.min_class_crops, "oss config");
  config.threads = detail::json_get(doc, "threads", config.threads, "oss config");
  config.disable_r = detail::json_get(doc, "disable_r", config.disable_r, "oss config");
  config.raw_count_r = detail::json_get(doc, "raw_count_r", config.raw_count_r, "oss config");
  config.disable_jsd = detail::json_get(doc, "disable_jsd", config.disable_jsd, "oss config");
  config.disable_t1 = detail::json_get(doc, "disable_t1", config.disable_t1, "oss config");
  config.disable_beta = detail::json_get(doc, "disable_beta", config.disable_beta, "oss config");
  config.disable_weights =
      detail::json_get(doc, "disable_weights", config.disable_weights, "oss config");
  config.global_jsd = detail::json_get(doc, "global_jsd", config.global_jsd, "oss config");
  return config;
}

inline nlohmann::ordered_json subset_config_to_json(const SubsetSearchConfig& config) {
  nlohmann::ordered_json doc;
  doc["z"] = config.z;
  doc["fraction"] = config.fraction;
  doc["seed"] = config.seed;
  doc["include_full_set"] = config.include_full_set;
  return doc;
}

inline SubsetSearchConfig subset_config_from_json(const nlohmann::json& doc) {
  if (!doc.is_object()) throw parse_error("subset config: expected a JSON object");
  SubsetSearchConfig config;
  config.z = detail::json_get(doc, "z", config.z, "subset config");
  config.fraction = detail::json_get(doc, "fraction", config.fraction, "subset config");
  config.seed = detail::json_get(doc, "seed", config.seed, "subset config");
  config.include_full_set =
      detail::json_get(doc, "include_full_set", config.include_full_set, "subset config");
  return config;
}

inline nlohmann::ordered_json run_config_to_json(const RunConfig& config) {
  nlohmann::ordered_json doc;
  auto& datasets = doc["datasets"] = nlohmann::ordered_json::array();
  for (const auto& entry : config.datasets) {
    nlohmann::ordered_json item;
    item["id"] = entry.id;
    item["format"] = entry.format;
    item["annotations"] = entry.annotations;
    item["images"] = entry.images;
    item["aliases"] = entry.aliases;
    datasets.push_back(std::move(item));
  }
  doc["features"] = feature_config_to_json(config.features);
  doc["oss"] = oss_config_to_json(config.oss);
  doc["subset"] = subset_config_to_json(config.subset);
  doc["output_dir"] = config.output_dir;
  doc["verbosity"] = config.verbosity;
  return doc;
}

inline RunConfig run_config_from_json(const nlohmann::json& doc) {
  if (!doc.is_object()) throw parse_error("run config: expected a JSON object");
  RunConfig config;
  if (doc.contains("datasets")) {
    const auto& datasets = doc.at("datasets");
    if (!datasets.is_array()) throw parse_error("run config: 'datasets' must be an array");
    for (const auto& item : datasets) {
      if (!item.is_object()) throw parse_error("run config: dataset entries must be objects");
      DatasetEntry entry;
      entry.id = detail::json_get(item, "id", std::string(), "dataset entry");
      entry.format = detail::json_get(item, "format", std::string(), "dataset entry");
      entry.annotations = detail::json_get(item, "annotations", std::string(), "dataset entry");
      entry.images = detail::json_get(item, "images", std::string(), "dataset entry");
      entry.aliases = detail::json_get(item, "aliases", std::map<std::string, std::string>(),
                                       "dataset entry");
      config.datasets.push_back(std::move(entry));
    }
  }
  if (doc.contains("features")) config.features = feature_config_from_json(doc.at("features"));
  if (doc.contains("oss")) config.oss = oss_config_from_json(doc.at("oss"));
  if (doc.contains("subset")) config.subset = subset_config_from_json(doc.at("subset"));
  config.output_dir = detail::json_get(doc, "output_dir", config.output_dir, "run config");
  config.verbosity = detail::json_get(doc, "verbosity", config.verbosity, "run config");
  return config;
}

// Loads a run config, allowing // and /* */ comments in the file.
inline RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io_error("run config: cannot open '" + path + "'");
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in, nullptr, true, /*ignore_comments=*/true);
  } catch (const nlohmann::json::parse_error& e) {
    throw parse_error("run config '" + path + "': malformed JSON at byte " +
                      std::to_string(e.byte));
  }
  auto config = run_config_from_json(doc);
  config.validate();
  return config;
}

}  // namespace oss
