#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "oss/errors.hpp"

namespace oss {

// Axis-aligned box in image coordinates, origin top-left.
struct BBox {
  double left = 0.0, top = 0.0, right = 0.0, bottom = 0.0;

  bool valid() const {
    return std::isfinite(left) && std::isfinite(top) && std::isfinite(right) &&
           std::isfinite(bottom) && right > left && bottom > top && left >= 0.0 && top >= 0.0;
  }
};

struct Annotation {
  std::string image_id;
  std::string class_name;
  BBox bbox;
};

struct ImageInfo {
  std::string id;
  std::string path;
  int width = 0;
  int height = 0;
};

// A record-level problem the parser collected without aborting.
struct RecordIssue {
  std::string where;    // file / image id / line that triggered it
  std::string message;
};

struct DatasetManifest {
  std::vector<ImageInfo> images;        // sorted by id
  std::vector<Annotation> annotations;  // sorted by image_id, input order within an image
  std::vector<std::string> class_catalog;
  std::vector<RecordIssue> issues;

  const ImageInfo* find_image(const std::string& id) const {
    auto it = std::lower_bound(images.begin(), images.end(), id,
                               [](const ImageInfo& a, const std::string& b) { return a.id < b; });
    return it != images.end() && it->id == id ? &*it : nullptr;
  }
};

namespace detail {

// Canonical ordering: images by id, annotations by image id with stable
// input order inside each image. Makes parses independent of listing order.
inline void canonicalize(DatasetManifest& manifest) {
  std::sort(manifest.images.begin(), manifest.images.end(),
            [](const ImageInfo& a, const ImageInfo& b) { return a.id < b.id; });
  std::stable_sort(manifest.annotations.begin(), manifest.annotations.end(),
                   [](const Annotation& a, const Annotation& b) { return a.image_id < b.image_id; });
}

}  // namespace detail

}  // namespace oss
