#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace editforge {

// Row-major interleaved RGB, 8 bits per channel.
struct ImageU8 {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> rgb;  // size = width * height * 3

  bool empty() const { return width == 0 || height == 0; }
  std::uint8_t* px(int r, int c) { return rgb.data() + 3 * (r * width + c); }
  const std::uint8_t* px(int r, int c) const {
    return rgb.data() + 3 * (r * width + c);
  }
};

// Row-major scalar field (diff maps, luma planes).
struct GridF {
  int width = 0;
  int height = 0;
  std::vector<double> v;  // size = width * height

  GridF() = default;
  GridF(int w, int h, double fill = 0.0) : width(w), height(h), v(size_t(w) * h, fill) {}
  double& at(int r, int c) { return v[size_t(r) * width + c]; }
  double at(int r, int c) const { return v[size_t(r) * width + c]; }
  size_t size() const { return v.size(); }
};

// Row-major binary mask, values strictly 0 or 1.
struct MaskGrid {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> v;  // size = width * height

  MaskGrid() = default;
  MaskGrid(int w, int h, std::uint8_t fill = 0)
      : width(w), height(h), v(size_t(w) * h, fill) {}
  std::uint8_t& at(int r, int c) { return v[size_t(r) * width + c]; }
  std::uint8_t at(int r, int c) const { return v[size_t(r) * width + c]; }
  size_t count() const;
  double area_frac() const;
};

bool operator==(const MaskGrid& a, const MaskGrid& b);

// PNG I/O (libpng). Readers throw DataError on unreadable files; any color
// type is folded to 8-bit RGB on read.
ImageU8 read_png_rgb(const std::string& path);
void write_png_rgb(const std::string& path, const ImageU8& img);

// Masks persist as single-channel 8-bit PNG, 0 or 255. Reading maps any
// nonzero gray to 1.
MaskGrid read_png_mask(const std::string& path);
void write_png_mask(const std::string& path, const MaskGrid& mask);

// Rec.601 luma in [0,1].
GridF luma(const ImageU8& img);

ImageU8 resize_bilinear(const ImageU8& src, int out_w, int out_h);

}  // namespace editforge
