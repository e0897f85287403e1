#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "oss/coco.hpp"
#include "oss/errors.hpp"
#include "oss/image.hpp"
#include "oss/manifest.hpp"
#include "oss/parallel.hpp"
#include "oss/rng.hpp"

namespace oss {

struct SynthClassSpec {
  std::string name;
  double frequency = 0.25;
  double ar_log_mean = 0.0;   // aspect ratio is log-normal
  double ar_log_sigma = 0.2;
  std::array<double, 3> color_mean{128.0, 128.0, 128.0};
  double color_jitter = 10.0;     // per-object color sigma
  double noise_amplitude = 8.0;   // per-pixel texture noise, uniform +-amp
  double min_size_px = 16.0;      // object height range
  double max_size_px = 48.0;
};

struct SynthClassShift {
  std::array<double, 3> d_color{0.0, 0.0, 0.0};
  double d_ar_log_mean = 0.0;
  double d_noise = 0.0;
  double d_size = 0.0;
  double d_frequency = 0.0;
};

struct SynthSpec {
  std::vector<SynthClassSpec> classes;
  std::vector<SynthClassShift> shift;  // empty, or one entry per class
  std::size_t image_count = 100;
  int canvas_width = 320;
  int canvas_height = 240;
  double mean_objects = 7.0;  // Poisson mean per image
  double shift_scale = 0.0;   // 0 renders the base distribution
  std::uint64_t seed = 0;
  int threads = 0;

  void validate() const {
    if (classes.empty()) throw domain_error("synth spec: no classes");
    if (!shift.empty() && shift.size() != classes.size())
      throw domain_error("synth spec: shift list must match the class list");
    double total = 0.0;
    for (const auto& c : classes) {
      if (c.name.empty()) throw domain_error("synth spec: class without a name");
      if (c.frequency < 0.0) throw domain_error("synth spec: negative class frequency");
      total += c.frequency;
      if (c.ar_log_sigma < 0.0 || c.color_jitter < 0.0 || c.noise_amplitude < 0.0)
        throw domain_error("synth spec: sigma parameters must be non-negative");
      if (c.min_size_px < 2.0 || c.max_size_px < c.min_size_px)
        throw domain_error("synth spec: bad object size range");
      if (c.max_size_px > std::min(canvas_width, canvas_height) - 1)
        throw domain_error("synth spec: object size range exceeds the canvas");
    }
    if (std::abs(total - 1.0) > 1e-6)
      throw domain_error("synth spec: class frequencies must sum to 1");
    if (image_count < 1) throw domain_error("synth spec: image_count must be >= 1");
    if (canvas_width < 8 || canvas_height < 8) throw domain_error("synth spec: canvas too small");
    if (!(mean_objects > 0.0)) throw domain_error("synth spec: mean_objects must be positive");
  }
};

struct SynthOutput {
  std::filesystem::path manifest_path;
  DatasetManifest manifest;
  std::size_t object_count = 0;
};

namespace detail {

struct SynthBox {
  std::size_t class_index;
  int x0, y0, x1, y1;
};

struct RenderedImage {
  Image image;
  std::vector<SynthBox> boxes;
};

// One image, fully determined by (spec, image index). Object parameters and
// texture noise come from separate derived streams so a shifted variant
// re-renders the same objects with only the shifted parameters changed.
inline RenderedImage render_image(const SynthSpec& spec, const std::vector<double>& cum_freq,
                                  std::size_t im) {
  const int W = spec.canvas_width;
  const int H = spec.canvas_height;
  const double scale = spec.shift_scale;
  static const SynthClassShift kNoShift{};

  RandomStream img_rs(derive_seed(spec.seed, "image", im));
  const int n_obj = img_rs.poisson(spec.mean_objects);

  std::vector<double> canvas(static_cast<std::size_t>(W) * H * 3, 127.0);
  RenderedImage out;
  for (int ob = 0; ob < n_obj; ++ob) {
    RandomStream prs(derive_seed(spec.seed, "object", im, static_cast<std::uint64_t>(ob)));
    RandomStream nrs(derive_seed(spec.seed, "noise", im, static_cast<std::uint64_t>(ob)));

    const double u_cls = prs.uniform();
    const std::size_t j =
        static_cast<std::size_t>(std::lower_bound(cum_freq.begin(), cum_freq.end(), u_cls) -
                                 cum_freq.begin());
    const SynthClassSpec& cls = spec.classes[std::min(j, spec.classes.size() - 1)];
    const SynthClassShift& sh = spec.shift.empty() ? kNoShift : spec.shift[j];

    const double size_lo = std::max(2.0, cls.min_size_px + scale * sh.d_size);
    const double size_hi = std::max(size_lo, cls.max_size_px + scale * sh.d_size);
    double h_f = prs.uniform(size_lo, size_hi);
    const double ar = std::exp(cls.ar_log_mean + scale * sh.d_ar_log_mean +
                               cls.ar_log_sigma * prs.normal());
    const double w_f = std::clamp(h_f * ar, 2.0, static_cast<double>(W - 1));
    h_f = std::clamp(h_f, 2.0, static_cast<double>(H - 1));

    const double x0f = prs.uniform() * (W - w_f);
    const double y0f = prs.uniform() * (H - h_f);
    const int x0 = static_cast<int>(x0f);
    const int y0 = static_cast<int>(y0f);
    const int x1 = std::max(static_cast<int>(x0f + w_f), x0 + 2);
    const int y1 = std::max(static_cast<int>(y0f + h_f), y0 + 2);

    std::array<double, 3> color;
    for (int c = 0; c < 3; ++c)
      color[c] =
          std::clamp(cls.color_mean[c] + scale * sh.d_color[c] + cls.color_jitter * prs.normal(),
                     0.0, 255.0);
    const double amp = std::max(0.0, cls.noise_amplitude + scale * sh.d_noise);

    for (int y = y0; y < y1; ++y) {
      for (int x = x0; x < x1; ++x) {
        const double v = nrs.uniform(-amp, amp);  // gray texture: one draw, all channels
        double* px = &canvas[(static_cast<std::size_t>(y) * W + x) * 3];
        for (int c = 0; c < 3; ++c) px[c] = std::clamp(color[c] + v, 0.0, 255.0);
      }
    }
    out.boxes.push_back({j, x0, y0, x1, y1});
  }

  out.image.width = W;
  out.image.height = H;
  out.image.rgb.resize(canvas.size());
  for (std::size_t i = 0; i < canvas.size(); ++i)
    out.image.rgb[i] = static_cast<unsigned char>(std::llround(canvas[i]));
  return out;
}

inline std::string synth_image_name(std::size_t im) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "im_%05zu.ppm", im);
  return buf;
}

}  // namespace detail

// Renders the dataset under out_dir (images/ plus a COCO-style annotations
// file) and returns the manifest re-parsed through the regular ingest path.
inline SynthOutput generate(const SynthSpec& spec, const std::filesystem::path& out_dir) {
  spec.validate();
  std::error_code ec;
  std::filesystem::create_directories(out_dir / "images", ec);
  if (ec) throw io_error("synth: cannot create output directory " + out_dir.string());

  std::vector<double> freq(spec.classes.size());
  for (std::size_t j = 0; j < freq.size(); ++j) {
    const double delta = spec.shift.empty() ? 0.0 : spec.shift[j].d_frequency;
    freq[j] = std::max(spec.classes[j].frequency + spec.shift_scale * delta, 0.01);
  }
  const double total = std::accumulate(freq.begin(), freq.end(), 0.0);
  std::vector<double> cum(freq.size());
  double running = 0.0;
  for (std::size_t j = 0; j < freq.size(); ++j) {
    running += freq[j] / total;
    cum[j] = running;
  }
  cum.back() = 1.0;

  std::vector<std::vector<detail::SynthBox>> boxes(spec.image_count);
  parallel_for(spec.image_count, spec.threads, [&](std::size_t im) {
    auto rendered = detail::render_image(spec, cum, im);
    write_ppm(rendered.image, out_dir / "images" / detail::synth_image_name(im));
    boxes[im] = std::move(rendered.boxes);
  });

  nlohmann::ordered_json doc;
  doc["images"] = nlohmann::ordered_json::array();
  doc["annotations"] = nlohmann::ordered_json::array();
  doc["categories"] = nlohmann::ordered_json::array();
  for (std::size_t j = 0; j < spec.classes.size(); ++j)
    doc["categories"].push_back({{"id", j + 1}, {"name", spec.classes[j].name}});

  std::size_t ann_id = 1;
  for (std::size_t im = 0; im < spec.image_count; ++im) {
    doc["images"].push_back({{"id", im + 1},
                             {"file_name", "images/" + detail::synth_image_name(im)},
                             {"width", spec.canvas_width},
                             {"height", spec.canvas_height}});
    for (const auto& box : boxes[im]) {
      const int w = box.x1 - box.x0;
      const int h = box.y1 - box.y0;
      doc["annotations"].push_back({{"id", ann_id++},
                                    {"image_id", im + 1},
                                    {"category_id", box.class_index + 1},
                                    {"bbox", {box.x0, box.y0, w, h}},
                                    {"area", w * h},
                                    {"iscrowd", 0}});
    }
  }

  const auto manifest_path = out_dir / "annotations.json";
  {
    std::ofstream out(manifest_path, std::ios::binary);
    if (!out) throw io_error("synth: cannot write " + manifest_path.string());
    out << doc.dump(2) << '\n';
  }

  SynthOutput result;
  result.manifest_path = manifest_path;
  result.manifest = parse_coco_file(manifest_path, out_dir);
  result.object_count = ann_id - 1;
  return result;
}

// Renders one variant per level into out_root/level_<i>, all sharing the base
// seed so the variants differ only through the scaled shift parameters.
inline std::vector<SynthOutput> shift_ladder(const SynthSpec& base,
                                             const std::vector<double>& levels,
                                             const std::filesystem::path& out_root) {
  if (levels.empty()) throw domain_error("shift ladder: no levels");
  for (std::size_t i = 1; i < levels.size(); ++i)
    if (std::abs(levels[i]) <= std::abs(levels[i - 1]))
      throw domain_error("shift ladder: levels must strictly increase in magnitude");
  if (base.shift.empty()) throw domain_error("shift ladder: spec has no shift deltas");

  std::vector<SynthOutput> variants;
  for (std::size_t i = 0; i < levels.size(); ++i) {
    SynthSpec spec = base;
    spec.shift_scale = levels[i];
    variants.push_back(generate(spec, out_root / ("level_" + std::to_string(i))));
  }
  return variants;
}

inline SynthClassShift synth_shift_from_json(const nlohmann::json& node) {
  SynthClassShift sh;
  if (node.contains("d_color")) {
    const auto& arr = node.at("d_color");
    if (!arr.is_array() || arr.size() != 3) throw parse_error("synth spec: d_color needs 3 values");
    for (int c = 0; c < 3; ++c) sh.d_color[c] = arr[c].get<double>();
  }
  sh.d_ar_log_mean = node.value("d_ar_log_mean", 0.0);
  sh.d_noise = node.value("d_noise", 0.0);
  sh.d_size = node.value("d_size", 0.0);
  sh.d_frequency = node.value("d_frequency", 0.0);
  return sh;
}

inline SynthSpec synth_spec_from_json(const nlohmann::json& doc) {
  if (!doc.is_object() || !doc.contains("classes") || !doc.at("classes").is_array())
    throw parse_error("synth spec: missing classes array");
  SynthSpec spec;
  spec.classes.clear();
  for (const auto& node : doc.at("classes")) {
    SynthClassSpec cls;
    if (!node.contains("name")) throw parse_error("synth spec: class without a name");
    cls.name = node.at("name").get<std::string>();
    cls.frequency = node.value("frequency", 0.0);
    cls.ar_log_mean = node.value("ar_log_mean", 0.0);
    cls.ar_log_sigma = node.value("ar_log_sigma", 0.2);
    if (node.contains("color_mean")) {
      const auto& arr = node.at("color_mean");
      if (!arr.is_array() || arr.size() != 3)
        throw parse_error("synth spec: color_mean needs 3 values");
      for (int c = 0; c < 3; ++c) cls.color_mean[c] = arr[c].get<double>();
    }
    cls.color_jitter = node.value("color_jitter", 10.0);
    cls.noise_amplitude = node.value("noise_amplitude", 8.0);
    cls.min_size_px = node.value("min_size_px", 16.0);
    cls.max_size_px = node.value("max_size_px", 48.0);
    spec.classes.push_back(std::move(cls));
  }
  if (doc.contains("shift")) {
    for (const auto& node : doc.at("shift")) spec.shift.push_back(synth_shift_from_json(node));
  }
  spec.image_count = doc.value("image_count", std::size_t{100});
  spec.canvas_width = doc.value("canvas_width", 320);
  spec.canvas_height = doc.value("canvas_height", 240);
  spec.mean_objects = doc.value("mean_objects", 7.0);
  spec.shift_scale = doc.value("shift_scale", 0.0);
  spec.seed = doc.value("seed", std::uint64_t{0});
  return spec;
}

inline nlohmann::ordered_json synth_spec_to_json(const SynthSpec& spec) {
  nlohmann::ordered_json doc;
  doc["image_count"] = spec.image_count;
  doc["canvas_width"] = spec.canvas_width;
  doc["canvas_height"] = spec.canvas_height;
  doc["mean_objects"] = spec.mean_objects;
  doc["shift_scale"] = spec.shift_scale;
  doc["seed"] = spec.seed;
  doc["classes"] = nlohmann::ordered_json::array();
  for (const auto& cls : spec.classes) {
    doc["classes"].push_back({{"name", cls.name},
                              {"frequency", cls.frequency},
                              {"ar_log_mean", cls.ar_log_mean},
                              {"ar_log_sigma", cls.ar_log_sigma},
                              {"color_mean", {cls.color_mean[0], cls.color_mean[1], cls.color_mean[2]}},
                              {"color_jitter", cls.color_jitter},
                              {"noise_amplitude", cls.noise_amplitude},
                              {"min_size_px", cls.min_size_px},
                              {"max_size_px", cls.max_size_px}});
  }
  if (!spec.shift.empty()) {
    doc["shift"] = nlohmann::ordered_json::array();
    for (const auto& sh : spec.shift) {
      doc["shift"].push_back({{"d_color", {sh.d_color[0], sh.d_color[1], sh.d_color[2]}},
                              {"d_ar_log_mean", sh.d_ar_log_mean},
                              {"d_noise", sh.d_noise},
                              {"d_size", sh.d_size},
                              {"d_frequency", sh.d_frequency}});
    }
  }
  return doc;
}

inline SynthSpec load_synth_spec(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io_error("synth spec: cannot open " + path.string());
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in, nullptr, true, true);  // comments allowed
  } catch (const nlohmann::json::parse_error& err) {
    throw parse_error("synth spec: malformed JSON at byte " + std::to_string(err.byte));
  }
  return synth_spec_from_json(doc);
}

}  // namespace oss
