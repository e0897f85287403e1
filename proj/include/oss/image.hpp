#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include "oss/errors.hpp"

namespace oss {

// Interleaved 8-bit RGB, row-major.
struct Image {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> rgb;

  std::uint8_t* pixel(int x, int y) { return rgb.data() + (static_cast<std::size_t>(y) * width + x) * 3; }
  const std::uint8_t* pixel(int x, int y) const {
    return rgb.data() + (static_cast<std::size_t>(y) * width + x) * 3;
  }
};

// BT.601 luma, one double per pixel.
inline std::vector<double> to_luma(const std::uint8_t* rgb, std::size_t pixel_count) {
  std::vector<double> out(pixel_count);
  for (std::size_t i = 0; i < pixel_count; ++i) {
    const std::uint8_t* p = rgb + i * 3;
    out[i] = 0.299 * p[0] + 0.587 * p[1] + 0.114 * p[2];
  }
  return out;
}

// Bilinear resample of a grayscale grid using half-pixel sample centers.
inline std::vector<double> bilinear_resize(const std::vector<double>& src, int src_w, int src_h,
                                           int dst_w, int dst_h) {
  if (src_w < 1 || src_h < 1 || dst_w < 1 || dst_h < 1)
    throw domain_error("bilinear_resize: non-positive dimensions");
  if (src.size() != static_cast<std::size_t>(src_w) * src_h)
    throw domain_error("bilinear_resize: buffer size mismatch");
  std::vector<double> dst(static_cast<std::size_t>(dst_w) * dst_h);
  const double sx = static_cast<double>(src_w) / dst_w;
  const double sy = static_cast<double>(src_h) / dst_h;
  for (int y = 0; y < dst_h; ++y) {
    const double fy = std::clamp((y + 0.5) * sy - 0.5, 0.0, static_cast<double>(src_h - 1));
    const int y0 = static_cast<int>(fy);
    const int y1 = std::min(y0 + 1, src_h - 1);
    const double wy = fy - y0;
    for (int x = 0; x < dst_w; ++x) {
      const double fx = std::clamp((x + 0.5) * sx - 0.5, 0.0, static_cast<double>(src_w - 1));
      const int x0 = static_cast<int>(fx);
      const int x1 = std::min(x0 + 1, src_w - 1);
      const double wx = fx - x0;
      const double top = src[static_cast<std::size_t>(y0) * src_w + x0] * (1.0 - wx) +
                         src[static_cast<std::size_t>(y0) * src_w + x1] * wx;
      const double bot = src[static_cast<std::size_t>(y1) * src_w + x0] * (1.0 - wx) +
                         src[static_cast<std::size_t>(y1) * src_w + x1] * wx;
      dst[static_cast<std::size_t>(y) * dst_w + x] = top * (1.0 - wy) + bot * wy;
    }
  }
  return dst;
}

namespace detail {

inline void skip_ppm_space(std::istream& in) {
  for (;;) {
    int c = in.peek();
    if (c == '#') {
      std::string line;
      std::getline(in, line);
    } else if (c != EOF && std::isspace(c)) {
      in.get();
    } else {
      return;
    }
  }
}

inline long read_ppm_int(std::istream& in, const char* what) {
  skip_ppm_space(in);
  long v = -1;
  if (!(in >> v) || v < 0) throw parse_error(std::string("ppm: bad ") + what);
  return v;
}

}  // namespace detail

// Binary PPM (P6), maxval 255.
inline Image read_ppm(std::istream& in) {
  char magic[2] = {0, 0};
  in.read(magic, 2);
  if (!in || magic[0] != 'P' || magic[1] != '6') throw parse_error("ppm: missing P6 magic");
  const long w = detail::read_ppm_int(in, "width");
  const long h = detail::read_ppm_int(in, "height");
  const long maxval = detail::read_ppm_int(in, "maxval");
  if (w < 1 || h < 1) throw parse_error("ppm: non-positive dimensions");
  if (maxval != 255) throw parse_error("ppm: only maxval 255 is supported");
  in.get();  // the single whitespace before the raster
  Image img;
  img.width = static_cast<int>(w);
  img.height = static_cast<int>(h);
  img.rgb.resize(static_cast<std::size_t>(w) * h * 3);
  in.read(reinterpret_cast<char*>(img.rgb.data()), static_cast<std::streamsize>(img.rgb.size()));
  if (static_cast<std::size_t>(in.gcount()) != img.rgb.size())
    throw parse_error("ppm: truncated raster");
  return img;
}

inline Image read_ppm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io_error("cannot open " + path);
  return read_ppm(in);
}

inline void write_ppm(const Image& img, const std::string& path) {
  if (img.width < 1 || img.height < 1 ||
      img.rgb.size() != static_cast<std::size_t>(img.width) * img.height * 3)
    throw domain_error("write_ppm: malformed image");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw io_error("cannot create " + path);
  out << "P6\n" << img.width << " " << img.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(img.rgb.data()),
            static_cast<std::streamsize>(img.rgb.size()));
  if (!out) throw io_error("short write to " + path);
}

}  // namespace oss
