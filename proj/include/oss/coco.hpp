#pragma once

#include <json.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "oss/errors.hpp"
#include "oss/manifest.hpp"

namespace oss {
namespace detail {

inline std::string json_id_string(const nlohmann::json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number_integer()) return std::to_string(v.get<long long>());
  if (v.is_number_unsigned()) return std::to_string(v.get<unsigned long long>());
  throw parse_error("coco: id is neither integer nor string");
}

inline std::string join_image_path(const std::string& root, const std::string& file_name) {
  if (root.empty()) return file_name;
  std::filesystem::path p(file_name);
  if (p.is_absolute()) return file_name;
  return (std::filesystem::path(root) / p).string();
}

}  // namespace detail

// COCO-style detection annotations: images / annotations / categories, with
// bbox as [x, y, w, h]. Malformed JSON aborts with a byte offset; bad records
// are collected as issues and parsing continues.
inline DatasetManifest parse_coco(std::istream& in, const std::string& image_root) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in, nullptr, true, true);  // allow comments
  } catch (const nlohmann::json::parse_error& e) {
    throw parse_error("coco: malformed JSON at byte " + std::to_string(e.byte) + ": " + e.what());
  }
  if (!doc.is_object()) throw parse_error("coco: top level is not an object");
  for (const char* key : {"images", "annotations", "categories"})
    if (!doc.contains(key) || !doc[key].is_array())
      throw parse_error(std::string("coco: missing array '") + key + "'");

  DatasetManifest manifest;

  // Categories in ascending id order define the class catalog.
  std::map<long long, std::string> categories;
  for (const auto& cat : doc["categories"]) {
    if (!cat.is_object() || !cat.contains("id") || !cat.contains("name") ||
        !cat["id"].is_number_integer() || !cat["name"].is_string()) {
      manifest.issues.push_back({"categories", "entry missing integer id or string name"});
      continue;
    }
    const long long id = cat["id"].get<long long>();
    const std::string name = cat["name"].get<std::string>();
    if (name.empty()) {
      manifest.issues.push_back({"categories", "empty category name"});
      continue;
    }
    if (!categories.emplace(id, name).second)
      manifest.issues.push_back({"categories", "duplicate category id " + std::to_string(id)});
  }
  std::map<long long, std::uint32_t> category_index;
  for (const auto& [id, name] : categories) {
    category_index.emplace(id, static_cast<std::uint32_t>(manifest.class_catalog.size()));
    manifest.class_catalog.push_back(name);
  }

  std::set<std::string> seen_images;
  for (const auto& img : doc["images"]) {
    if (!img.is_object() || !img.contains("id") || !img.contains("file_name") ||
        !img.contains("width") || !img.contains("height")) {
      manifest.issues.push_back({"images", "entry missing id/file_name/width/height"});
      continue;
    }
    ImageInfo info;
    try {
      info.id = detail::json_id_string(img["id"]);
    } catch (const parse_error& e) {
      manifest.issues.push_back({"images", e.what()});
      continue;
    }
    if (!img["file_name"].is_string() || !img["width"].is_number() || !img["height"].is_number()) {
      manifest.issues.push_back({"images", "image " + info.id + ": bad field types"});
      continue;
    }
    info.width = img["width"].get<int>();
    info.height = img["height"].get<int>();
    if (info.width < 1 || info.height < 1) {
      manifest.issues.push_back({"images", "image " + info.id + ": non-positive dimensions"});
      continue;
    }
    info.path = detail::join_image_path(image_root, img["file_name"].get<std::string>());
    if (!seen_images.insert(info.id).second) {
      manifest.issues.push_back({"images", "duplicate image id " + info.id + " (first kept)"});
      continue;
    }
    manifest.images.push_back(std::move(info));
  }

  for (const auto& ann : doc["annotations"]) {
    if (!ann.is_object() || !ann.contains("image_id") || !ann.contains("category_id") ||
        !ann.contains("bbox")) {
      manifest.issues.push_back({"annotations", "entry missing image_id/category_id/bbox"});
      continue;
    }
    std::string image_id;
    try {
      image_id = detail::json_id_string(ann["image_id"]);
    } catch (const parse_error& e) {
      manifest.issues.push_back({"annotations", e.what()});
      continue;
    }
    if (!seen_images.count(image_id)) {
      manifest.issues.push_back({"annotations", "unknown image id " + image_id});
      continue;
    }
    if (!ann["category_id"].is_number_integer()) {
      manifest.issues.push_back({"annotations", "image " + image_id + ": bad category_id"});
      continue;
    }
    const long long cat_id = ann["category_id"].get<long long>();
    const auto cat_it = category_index.find(cat_id);
    if (cat_it == category_index.end()) {
      manifest.issues.push_back(
          {"annotations", "image " + image_id + ": unknown category id " + std::to_string(cat_id)});
      continue;
    }
    const auto& bbox = ann["bbox"];
    if (!bbox.is_array() || bbox.size() != 4 || !bbox[0].is_number() || !bbox[1].is_number() ||
        !bbox[2].is_number() || !bbox[3].is_number()) {
      manifest.issues.push_back({"annotations", "image " + image_id + ": bbox is not [x,y,w,h]"});
      continue;
    }
    // COCO sometimes carries tiny negative origins; clamp them to the frame.
    const double x = std::max(0.0, bbox[0].get<double>());
    const double y = std::max(0.0, bbox[1].get<double>());
    const double w = bbox[2].get<double>();
    const double h = bbox[3].get<double>();
    Annotation out;
    out.image_id = image_id;
    out.class_name = manifest.class_catalog[cat_it->second];
    out.bbox = BBox{x, y, x + w, y + h};
    if (!out.bbox.valid()) {
      manifest.issues.push_back({"annotations", "image " + image_id + ": degenerate bbox"});
      continue;
    }
    manifest.annotations.push_back(std::move(out));
  }

  detail::canonicalize(manifest);
  return manifest;
}

inline DatasetManifest parse_coco_file(const std::string& path, const std::string& image_root) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io_error("cannot open " + path);
  return parse_coco(in, image_root);
}

}  // namespace oss
