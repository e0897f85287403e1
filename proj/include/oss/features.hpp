#pragma once

#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "oss/crops.hpp"
#include "oss/errors.hpp"
#include "oss/feature_table.hpp"
#include "oss/image.hpp"
#include "oss/manifest.hpp"
#include "oss/parallel.hpp"

namespace oss {

// Which per-crop scalars go into the feature space. Schema order is fixed:
// [AR, DCT, CH, HUE, SAT, VAL], restricted to the enabled flags.
struct FeatureConfig {
  bool use_ar = true;
  bool use_dct = true;
  bool use_ch = true;
  bool use_hue = false;
  bool use_sat = false;
  bool use_val = false;
  int dct_resize_px = 64;
  int ch_bins_per_channel = 8;
  bool ch_normalized = false;

  void validate() const {
    if (!(use_ar || use_dct || use_ch || use_hue || use_sat || use_val))
      throw domain_error("feature config: at least one feature must be enabled");
    if (dct_resize_px < 8) throw domain_error("feature config: dct_resize_px must be >= 8");
    if (ch_bins_per_channel < 2 || ch_bins_per_channel > 32)
      throw domain_error("feature config: ch_bins_per_channel must be in [2, 32]");
  }

  std::vector<std::string> schema() const {
    std::vector<std::string> names;
    if (use_ar) names.push_back("AR");
    if (use_dct) names.push_back("DCT");
    if (use_ch) names.push_back("CH");
    if (use_hue) names.push_back("HUE");
    if (use_sat) names.push_back("SAT");
    if (use_val) names.push_back("VAL");
    return names;
  }
};

inline double aspect_ratio(const CropRecord& crop) {
  return static_cast<double>(crop.width_px) / static_cast<double>(crop.height_px);
}

namespace detail {

// Orthonormal DCT-II basis: C[k][j] = a_k cos(pi (2j+1) k / (2N)).
inline Eigen::MatrixXd dct_basis(int n) {
  Eigen::MatrixXd c(n, n);
  const double a0 = std::sqrt(1.0 / n);
  const double ak = std::sqrt(2.0 / n);
  for (int k = 0; k < n; ++k)
    for (int j = 0; j < n; ++j)
      c(k, j) = (k == 0 ? a0 : ak) * std::cos(M_PI * (2.0 * j + 1.0) * k / (2.0 * n));
  return c;
}

}  // namespace detail

// Mean over all coefficients of the orthonormal 2-D DCT-II of the crop's
// BT.601 luma, bilinearly resized to resize_px x resize_px first.
inline double dct_mean(const CropRecord& crop, int resize_px = 64) {
  if (resize_px < 1) throw domain_error("dct_mean: resize must be positive");
  const std::vector<double> luma =
      to_luma(crop.pixels.data(), static_cast<std::size_t>(crop.width_px) * crop.height_px);
  const std::vector<double> resized =
      bilinear_resize(luma, crop.width_px, crop.height_px, resize_px, resize_px);
  Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> gray(
      resized.data(), resize_px, resize_px);
  const Eigen::MatrixXd basis = detail::dct_basis(resize_px);
  const Eigen::MatrixXd coeffs = basis * gray * basis.transpose();
  return coeffs.mean();
}

// Mean of the flattened BxBxB joint RGB histogram. Raw counts make this
// pixel_count / B^3 by construction; the normalized variant reports the
// fraction of occupied bins instead.
inline double color_hist_mean(const CropRecord& crop, int bins_per_channel = 8,
                              bool normalized = false) {
  if (bins_per_channel < 2 || bins_per_channel > 32)
    throw domain_error("color_hist_mean: bins_per_channel must be in [2, 32]");
  const double total_bins = std::pow(static_cast<double>(bins_per_channel), 3.0);
  const std::size_t pixel_count = static_cast<std::size_t>(crop.width_px) * crop.height_px;
  if (!normalized) return static_cast<double>(pixel_count) / total_bins;

  const int b = bins_per_channel;
  std::vector<std::uint8_t> occupied(static_cast<std::size_t>(b) * b * b, 0);
  for (std::size_t i = 0; i < pixel_count; ++i) {
    const std::uint8_t* p = crop.pixels.data() + i * 3;
    const int br = p[0] * b / 256;
    const int bg = p[1] * b / 256;
    const int bb = p[2] * b / 256;
    occupied[(static_cast<std::size_t>(br) * b + bg) * b + bb] = 1;
  }
  std::size_t used = 0;
  for (std::uint8_t o : occupied) used += o;
  return static_cast<double>(used) / total_bins;
}

// Per-pixel RGB -> HSV (hue in [0, 360), sat/val in [0, 1]; zero-saturation
// hue defined as 0), then the arithmetic mean of each channel.
inline std::array<double, 3> hsv_means(const CropRecord& crop) {
  const std::size_t pixel_count = static_cast<std::size_t>(crop.width_px) * crop.height_px;
  double hue_sum = 0.0, sat_sum = 0.0, val_sum = 0.0;
  for (std::size_t i = 0; i < pixel_count; ++i) {
    const std::uint8_t* p = crop.pixels.data() + i * 3;
    const double r = p[0] / 255.0, g = p[1] / 255.0, b = p[2] / 255.0;
    const double maxc = std::max({r, g, b});
    const double minc = std::min({r, g, b});
    const double delta = maxc - minc;
    double h = 0.0;
    if (delta > 0.0) {
      if (maxc == r) h = 60.0 * std::fmod((g - b) / delta, 6.0);
      else if (maxc == g) h = 60.0 * ((b - r) / delta + 2.0);
      else h = 60.0 * ((r - g) / delta + 4.0);
      if (h < 0.0) h += 360.0;
    }
    hue_sum += h;
    sat_sum += maxc > 0.0 ? delta / maxc : 0.0;
    val_sum += maxc;
  }
  const double n = static_cast<double>(pixel_count);
  return {hue_sum / n, sat_sum / n, val_sum / n};
}

struct FeaturizeResult {
  FeatureTable table;
  std::vector<RecordIssue> dropped;  // rows rejected for non-finite values
};

// One row per crop, schema per config, canonical crop order preserved.
inline FeaturizeResult featurize_table(const std::vector<CropRecord>& crops,
                                       const FeatureConfig& config, const std::string& set_id,
                                       const std::vector<std::string>& class_catalog,
                                       int threads = 0) {
  config.validate();
  FeaturizeResult result;
  result.table.set_id = set_id;
  result.table.class_catalog = class_catalog;
  result.table.feature_schema = config.schema();

  std::vector<FeatureRow> rows(crops.size());
  parallel_for(crops.size(), threads, [&](std::size_t i) {
    const CropRecord& crop = crops[i];
    FeatureRow row;
    row.class_id = crop.class_id;
    row.image_id = crop.image_id;
    row.values.reserve(result.table.feature_schema.size());
    if (config.use_ar) row.values.push_back(aspect_ratio(crop));
    if (config.use_dct) row.values.push_back(dct_mean(crop, config.dct_resize_px));
    if (config.use_ch)
      row.values.push_back(
          color_hist_mean(crop, config.ch_bins_per_channel, config.ch_normalized));
    if (config.use_hue || config.use_sat || config.use_val) {
      const auto hsv = hsv_means(crop);
      if (config.use_hue) row.values.push_back(hsv[0]);
      if (config.use_sat) row.values.push_back(hsv[1]);
      if (config.use_val) row.values.push_back(hsv[2]);
    }
    rows[i] = std::move(row);
  });

  result.table.rows.reserve(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const bool finite = std::all_of(rows[i].values.begin(), rows[i].values.end(),
                                    [](double v) { return std::isfinite(v); });
    if (!finite) {
      result.dropped.push_back(
          {rows[i].image_id, "crop produced a non-finite feature value; row dropped"});
      continue;
    }
    result.table.rows.push_back(std::move(rows[i]));
  }
  return result;
}

}  // namespace oss
