#include "editforge/image.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>

#include "editforge/common.hpp"

namespace editforge {

size_t MaskGrid::count() const {
  size_t n = 0;
  for (std::uint8_t b : v) n += b;
  return n;
}

double MaskGrid::area_frac() const {
  if (v.empty()) return 0.0;
  return static_cast<double>(count()) / static_cast<double>(v.size());
}

bool operator==(const MaskGrid& a, const MaskGrid& b) {
  return a.width == b.width && a.height == b.height && a.v == b.v;
}

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

[[noreturn]] void fail(const std::string& path, const std::string& what) {
  throw DataError("png " + what + ": " + path);
}

ImageU8 read_png_generic(const std::string& path) {
  FilePtr fp(std::fopen(path.c_str(), "rb"));
  if (!fp) fail(path, "open failed");

  png_structp png =
      png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) fail(path, "init failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    fail(path, "init failed");
  }
  std::vector<png_bytep> rows;
  ImageU8 out;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    fail(path, "decode failed");
  }
  png_init_io(png, fp.get());
  png_read_info(png, info);

  png_uint_32 w = png_get_image_width(png, info);
  png_uint_32 h = png_get_image_height(png, info);
  int color = png_get_color_type(png, info);
  int depth = png_get_bit_depth(png, info);

  if (depth == 16) png_set_strip_16(png);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
  if (color == PNG_COLOR_TYPE_GRAY || color == PNG_COLOR_TYPE_GRAY_ALPHA)
    png_set_gray_to_rgb(png);
  png_set_strip_alpha(png);
  png_read_update_info(png, info);

  out.width = static_cast<int>(w);
  out.height = static_cast<int>(h);
  out.rgb.resize(size_t(w) * h * 3);
  rows.resize(h);
  for (png_uint_32 r = 0; r < h; ++r)
    rows[r] = out.rgb.data() + size_t(r) * w * 3;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return out;
}

void write_png(const std::string& path, int w, int h, int color_type,
               const std::uint8_t* data, int bytes_per_px) {
  FilePtr fp(std::fopen(path.c_str(), "wb"));
  if (!fp) fail(path, "open for write failed");
  png_structp png =
      png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) fail(path, "init failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    fail(path, "init failed");
  }
  std::vector<png_bytep> rows(h);
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    fail(path, "encode failed");
  }
  png_init_io(png, fp.get());
  // Fixed settings so identical pixels always produce identical bytes.
  png_set_compression_level(png, 6);
  png_set_filter(png, 0, PNG_FILTER_NONE);
  png_set_IHDR(png, info, w, h, 8, color_type, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (int r = 0; r < h; ++r)
    rows[r] = const_cast<png_bytep>(data + size_t(r) * w * bytes_per_px);
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

}  // namespace

ImageU8 read_png_rgb(const std::string& path) { return read_png_generic(path); }

void write_png_rgb(const std::string& path, const ImageU8& img) {
  write_png(path, img.width, img.height, PNG_COLOR_TYPE_RGB, img.rgb.data(), 3);
}

MaskGrid read_png_mask(const std::string& path) {
  ImageU8 img = read_png_generic(path);
  MaskGrid m(img.width, img.height);
  for (int r = 0; r < img.height; ++r)
    for (int c = 0; c < img.width; ++c)
      m.at(r, c) = img.px(r, c)[0] != 0 ? 1 : 0;
  return m;
}

void write_png_mask(const std::string& path, const MaskGrid& mask) {
  std::vector<std::uint8_t> gray(mask.v.size());
  for (size_t i = 0; i < mask.v.size(); ++i) gray[i] = mask.v[i] ? 255 : 0;
  write_png(path, mask.width, mask.height, PNG_COLOR_TYPE_GRAY, gray.data(), 1);
}

GridF luma(const ImageU8& img) {
  GridF out(img.width, img.height);
  for (int r = 0; r < img.height; ++r) {
    for (int c = 0; c < img.width; ++c) {
      const std::uint8_t* p = img.px(r, c);
      out.at(r, c) = (0.299 * p[0] + 0.587 * p[1] + 0.114 * p[2]) / 255.0;
    }
  }
  return out;
}

ImageU8 resize_bilinear(const ImageU8& src, int out_w, int out_h) {
  ImageU8 out;
  out.width = out_w;
  out.height = out_h;
  out.rgb.resize(size_t(out_w) * out_h * 3);
  double sx = static_cast<double>(src.width) / out_w;
  double sy = static_cast<double>(src.height) / out_h;
  for (int r = 0; r < out_h; ++r) {
    double fy = (r + 0.5) * sy - 0.5;
    int y0 = std::clamp(static_cast<int>(std::floor(fy)), 0, src.height - 1);
    int y1 = std::min(y0 + 1, src.height - 1);
    double wy = std::clamp(fy - y0, 0.0, 1.0);
    for (int c = 0; c < out_w; ++c) {
      double fx = (c + 0.5) * sx - 0.5;
      int x0 = std::clamp(static_cast<int>(std::floor(fx)), 0, src.width - 1);
      int x1 = std::min(x0 + 1, src.width - 1);
      double wx = std::clamp(fx - x0, 0.0, 1.0);
      for (int ch = 0; ch < 3; ++ch) {
        double top = src.px(y0, x0)[ch] * (1 - wx) + src.px(y0, x1)[ch] * wx;
        double bot = src.px(y1, x0)[ch] * (1 - wx) + src.px(y1, x1)[ch] * wx;
        out.px(r, c)[ch] =
            static_cast<std::uint8_t>(std::lround(std::clamp(top * (1 - wy) + bot * wy, 0.0, 255.0)));
      }
    }
  }
  return out;
}

}  // namespace editforge
