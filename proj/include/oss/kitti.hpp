#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "oss/errors.hpp"
#include "oss/image_codec.hpp"
#include "oss/manifest.hpp"

namespace oss {
namespace detail {

inline std::string find_kitti_image(const std::filesystem::path& image_dir,
                                    const std::string& stem) {
  for (const char* ext : {".png", ".jpg", ".jpeg", ".ppm"}) {
    const std::filesystem::path candidate = image_dir / (stem + ext);
    std::error_code ec;
    if (std::filesystem::exists(candidate, ec)) return candidate.string();
  }
  return {};
}

}  // namespace detail

// KITTI label directory: one whitespace-delimited .txt per image, columns
// type truncated occluded alpha left top right bottom [3-D fields ignored].
// "DontCare" regions carry no class information and are dropped; everything
// else is kept regardless of truncation/occlusion level.
inline DatasetManifest parse_kitti(const std::string& label_dir, const std::string& image_dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  if (!fs::is_directory(label_dir, ec)) throw io_error(label_dir + ": not a directory");

  std::vector<std::string> label_files;
  for (const auto& entry : fs::directory_iterator(label_dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".txt")
      label_files.push_back(entry.path().string());
  }
  std::sort(label_files.begin(), label_files.end());  // listing order must not matter

  DatasetManifest manifest;
  std::set<std::string> classes;
  for (const auto& label_path : label_files) {
    const std::string stem = fs::path(label_path).stem().string();
    const std::string image_path = detail::find_kitti_image(image_dir, stem);
    if (image_path.empty()) {
      manifest.issues.push_back({stem, "no image found for label file; image skipped"});
      continue;
    }
    ImageInfo info;
    info.id = stem;
    info.path = image_path;
    try {
      const auto [w, h] = probe_image_size(image_path);
      info.width = w;
      info.height = h;
    } catch (const error& e) {
      manifest.issues.push_back({stem, std::string("unreadable image header: ") + e.what()});
      continue;
    }
    if (info.width < 1 || info.height < 1) {
      manifest.issues.push_back({stem, "image header reports non-positive size; image skipped"});
      continue;
    }

    std::ifstream in(label_path);
    if (!in) throw io_error("cannot open " + label_path);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
      std::istringstream fields(line);
      std::string type;
      double truncated, occluded, alpha, left, top, right, bottom;
      if (!(fields >> type >> truncated >> occluded >> alpha >> left >> top >> right >> bottom)) {
        manifest.issues.push_back(
            {stem + ":" + std::to_string(line_no), "fewer than 8 parseable columns"});
        continue;
      }
      if (type == "DontCare") continue;
      Annotation ann;
      ann.image_id = stem;
      ann.class_name = type;
      // Truncated objects can poke past the frame; clipping happens at crop time.
      ann.bbox = BBox{std::max(0.0, left), std::max(0.0, top), right, bottom};
      if (!ann.bbox.valid()) {
        manifest.issues.push_back({stem + ":" + std::to_string(line_no), "degenerate bbox"});
        continue;
      }
      classes.insert(type);
      manifest.annotations.push_back(std::move(ann));
    }
    manifest.images.push_back(std::move(info));
  }

  manifest.class_catalog.assign(classes.begin(), classes.end());  // lexicographic
  detail::canonicalize(manifest);
  return manifest;
}

}  // namespace oss
