#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <variant>
#include <vector>

#include "oss/errors.hpp"
#include "oss/image_codec.hpp"
#include "oss/manifest.hpp"
#include "oss/parallel.hpp"

namespace oss {

struct CropRecord {
  std::string image_id;
  std::uint32_t class_id = 0;
  int width_px = 0;
  int height_px = 0;
  std::vector<std::uint8_t> pixels;  // RGB8, row-major, width_px * height_px * 3
};

struct CropSkip {
  std::string image_id;
  std::size_t annotation_index = 0;  // index into manifest.annotations
  std::string reason;
};

struct CropSet {
  std::vector<CropRecord> crops;
  std::vector<CropSkip> skips;
};

// Extract one RGB crop per annotation whose clipped box is at least
// min_side_px on both sides. Boxes are clipped to the image, then rasterized
// as the half-open rectangle [floor(left), ceil(right)) x [floor(top),
// ceil(bottom)). Every annotation lands in either crops or skips. Output order
// is (image_id, annotation index) regardless of thread count.
inline CropSet extract_crops(const DatasetManifest& manifest, int min_side_px = 2,
                             int threads = 0) {
  if (min_side_px < 1) throw domain_error("extract_crops: min_side_px must be >= 1");

  std::map<std::string, std::uint32_t> class_index;
  for (std::size_t i = 0; i < manifest.class_catalog.size(); ++i)
    class_index.emplace(manifest.class_catalog[i], static_cast<std::uint32_t>(i));

  // Annotations are sorted by image_id; walk them into contiguous image groups.
  struct Group {
    const ImageInfo* image = nullptr;
    std::string image_id;
    std::size_t begin = 0, end = 0;  // annotation index range
  };
  std::vector<Group> groups;
  for (std::size_t i = 0; i < manifest.annotations.size();) {
    std::size_t j = i;
    while (j < manifest.annotations.size() &&
           manifest.annotations[j].image_id == manifest.annotations[i].image_id)
      ++j;
    Group g;
    g.image_id = manifest.annotations[i].image_id;
    g.image = manifest.find_image(g.image_id);
    g.begin = i;
    g.end = j;
    groups.push_back(std::move(g));
    i = j;
  }

  using Outcome = std::variant<CropRecord, CropSkip>;
  std::vector<std::vector<Outcome>> per_group(groups.size());

  parallel_for(groups.size(), threads, [&](std::size_t gi) {
    const Group& group = groups[gi];
    auto& out = per_group[gi];
    out.reserve(group.end - group.begin);

    auto skip_all = [&](const std::string& reason) {
      for (std::size_t ai = group.begin; ai < group.end; ++ai)
        out.push_back(CropSkip{group.image_id, ai, reason});
    };
    if (!group.image) {
      skip_all("image not present in manifest");
      return;
    }
    Image img;
    try {
      img = decode_image(group.image->path);
    } catch (const error& e) {
      skip_all(std::string("undecodable image: ") + e.what());
      return;
    }

    for (std::size_t ai = group.begin; ai < group.end; ++ai) {
      const Annotation& ann = manifest.annotations[ai];
      const auto cls = class_index.find(ann.class_name);
      if (cls == class_index.end()) {
        out.push_back(CropSkip{group.image_id, ai, "class not in catalog: " + ann.class_name});
        continue;
      }
      const double w = static_cast<double>(img.width);
      const double h = static_cast<double>(img.height);
      const double left = std::clamp(ann.bbox.left, 0.0, w);
      const double right = std::clamp(ann.bbox.right, 0.0, w);
      const double top = std::clamp(ann.bbox.top, 0.0, h);
      const double bottom = std::clamp(ann.bbox.bottom, 0.0, h);
      if (right <= left || bottom <= top) {
        out.push_back(CropSkip{group.image_id, ai, "box outside image"});
        continue;
      }
      const int x0 = static_cast<int>(std::floor(left));
      const int x1 = static_cast<int>(std::ceil(right));
      const int y0 = static_cast<int>(std::floor(top));
      const int y1 = static_cast<int>(std::ceil(bottom));
      const int cw = x1 - x0;
      const int ch = y1 - y0;
      if (cw < min_side_px || ch < min_side_px) {
        out.push_back(CropSkip{group.image_id, ai, "below minimum crop side"});
        continue;
      }
      CropRecord crop;
      crop.image_id = group.image_id;
      crop.class_id = cls->second;
      crop.width_px = cw;
      crop.height_px = ch;
      crop.pixels.resize(static_cast<std::size_t>(cw) * ch * 3);
      for (int y = 0; y < ch; ++y) {
        const std::uint8_t* src = img.pixel(x0, y0 + y);
        std::copy(src, src + static_cast<std::size_t>(cw) * 3,
                  crop.pixels.begin() + static_cast<std::size_t>(y) * cw * 3);
      }
      out.push_back(std::move(crop));
    }
  });

  CropSet result;
  for (auto& group : per_group) {
    for (auto& outcome : group) {
      if (std::holds_alternative<CropRecord>(outcome))
        result.crops.push_back(std::move(std::get<CropRecord>(outcome)));
      else
        result.skips.push_back(std::move(std::get<CropSkip>(outcome)));
    }
  }
  return result;
}

}  // namespace oss
