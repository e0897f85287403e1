#pragma once

#include <jpeglib.h>
#include <png.h>

#include <csetjmp>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include "oss/errors.hpp"
#include "oss/image.hpp"

namespace oss {
namespace detail {

struct JpegErrorTrap {
  jpeg_error_mgr mgr;
  std::jmp_buf jump;
  char message[JMSG_LENGTH_MAX] = {0};
};

inline void jpeg_trap_exit(j_common_ptr cinfo) {
  auto* trap = reinterpret_cast<JpegErrorTrap*>(cinfo->err);
  (*cinfo->err->format_message)(cinfo, trap->message);
  std::longjmp(trap->jump, 1);
}

struct FileHandle {
  std::FILE* fp = nullptr;
  explicit FileHandle(const std::string& path) : fp(std::fopen(path.c_str(), "rb")) {}
  ~FileHandle() { if (fp) std::fclose(fp); }
  FileHandle(const FileHandle&) = delete;
  FileHandle& operator=(const FileHandle&) = delete;
};

// decode=false reads only the header for dimensions.
inline Image read_jpeg(const std::string& path, bool decode) {
  FileHandle file(path);
  if (!file.fp) throw io_error("cannot open " + path);

  jpeg_decompress_struct cinfo;
  JpegErrorTrap trap;
  cinfo.err = jpeg_std_error(&trap.mgr);
  trap.mgr.error_exit = jpeg_trap_exit;

  // Raster lives outside the setjmp scope so cleanup stays trivial.
  Image img;
  std::vector<JSAMPLE*> row_ptrs;
  jpeg_create_decompress(&cinfo);
  if (setjmp(trap.jump)) {
    jpeg_destroy_decompress(&cinfo);
    throw parse_error(path + ": " + trap.message);
  }
  jpeg_stdio_src(&cinfo, file.fp);
  jpeg_read_header(&cinfo, TRUE);
  img.width = static_cast<int>(cinfo.image_width);
  img.height = static_cast<int>(cinfo.image_height);
  if (decode) {
    cinfo.out_color_space = JCS_RGB;
    jpeg_start_decompress(&cinfo);
    img.rgb.resize(static_cast<std::size_t>(img.width) * img.height * 3);
    row_ptrs.resize(img.height);
    for (int y = 0; y < img.height; ++y)
      row_ptrs[static_cast<std::size_t>(y)] = img.rgb.data() + static_cast<std::size_t>(y) * img.width * 3;
    while (cinfo.output_scanline < cinfo.output_height)
      jpeg_read_scanlines(&cinfo, row_ptrs.data() + cinfo.output_scanline,
                          cinfo.output_height - cinfo.output_scanline);
    jpeg_finish_decompress(&cinfo);
  }
  jpeg_destroy_decompress(&cinfo);
  return img;
}

inline Image read_png(const std::string& path, bool decode) {
  png_image png{};
  png.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&png, path.c_str()))
    throw parse_error(path + ": " + png.message);
  Image img;
  img.width = static_cast<int>(png.width);
  img.height = static_cast<int>(png.height);
  if (!decode) {
    png_image_free(&png);
    return img;
  }
  png.format = PNG_FORMAT_RGB;
  img.rgb.resize(PNG_IMAGE_SIZE(png));
  if (!png_image_finish_read(&png, nullptr, img.rgb.data(), 0, nullptr)) {
    std::string msg = png.message;
    png_image_free(&png);
    throw parse_error(path + ": " + msg);
  }
  return img;
}

enum class ImageFormat { png, jpeg, ppm, unknown };

inline ImageFormat sniff_format(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io_error("cannot open " + path);
  unsigned char head[8] = {0};
  in.read(reinterpret_cast<char*>(head), 8);
  static const unsigned char png_sig[8] = {0x89, 'P', 'N', 'G', 0x0d, 0x0a, 0x1a, 0x0a};
  if (in.gcount() >= 8 && std::memcmp(head, png_sig, 8) == 0) return ImageFormat::png;
  if (in.gcount() >= 2 && head[0] == 0xff && head[1] == 0xd8) return ImageFormat::jpeg;
  if (in.gcount() >= 2 && head[0] == 'P' && head[1] == '6') return ImageFormat::ppm;
  return ImageFormat::unknown;
}

}  // namespace detail

// Decode PNG, JPEG, or binary PPM by content sniffing.
inline Image decode_image(const std::string& path) {
  switch (detail::sniff_format(path)) {
    case detail::ImageFormat::png: return detail::read_png(path, true);
    case detail::ImageFormat::jpeg: return detail::read_jpeg(path, true);
    case detail::ImageFormat::ppm: return read_ppm(path);
    default: throw parse_error(path + ": unrecognized image format");
  }
}

// Header-only probe for (width, height).
inline std::pair<int, int> probe_image_size(const std::string& path) {
  switch (detail::sniff_format(path)) {
    case detail::ImageFormat::png: {
      const Image img = detail::read_png(path, false);
      return {img.width, img.height};
    }
    case detail::ImageFormat::jpeg: {
      const Image img = detail::read_jpeg(path, false);
      return {img.width, img.height};
    }
    case detail::ImageFormat::ppm: {
      std::ifstream in(path, std::ios::binary);
      char magic[2];
      in.read(magic, 2);
      const long w = detail::read_ppm_int(in, "width");
      const long h = detail::read_ppm_int(in, "height");
      return {static_cast<int>(w), static_cast<int>(h)};
    }
    default: throw parse_error(path + ": unrecognized image format");
  }
}

}  // namespace oss
