#include "doctest.h"

#include <cstdint>
#include <filesystem>
#include <random>

#include "editforge/common.hpp"
#include "editforge/image.hpp"
#include "editforge/textcfg.hpp"

using namespace editforge;
namespace fs = std::filesystem;

TEST_CASE("rgb png round-trip is lossless") {
  std::mt19937 rng(11);
  ImageU8 img;
  img.width = 37;
  img.height = 23;
  img.rgb.resize(size_t(37) * 23 * 3);
  for (auto& b : img.rgb) b = static_cast<std::uint8_t>(rng() & 0xff);

  fs::path path = fs::temp_directory_path() / "image_rt.png";
  write_png_rgb(path.string(), img);
  ImageU8 back = read_png_rgb(path.string());
  CHECK(back.width == img.width);
  CHECK(back.height == img.height);
  CHECK(back.rgb == img.rgb);
  fs::remove(path);
}

TEST_CASE("png writes are byte-stable across repeats") {
  ImageU8 img;
  img.width = 16;
  img.height = 16;
  img.rgb.resize(16 * 16 * 3);
  for (size_t i = 0; i < img.rgb.size(); ++i)
    img.rgb[i] = static_cast<std::uint8_t>((i * 7) & 0xff);
  fs::path a = fs::temp_directory_path() / "image_det_a.png";
  fs::path b = fs::temp_directory_path() / "image_det_b.png";
  write_png_rgb(a.string(), img);
  write_png_rgb(b.string(), img);
  CHECK(read_file(a.string()) == read_file(b.string()));
  fs::remove(a);
  fs::remove(b);
}

TEST_CASE("mask png round-trip is exact and strictly binary") {
  std::mt19937 rng(3);
  MaskGrid m;
  m.width = 19;
  m.height = 31;
  m.v.resize(size_t(19) * 31);
  for (auto& p : m.v) p = (rng() & 1) ? 1 : 0;

  fs::path path = fs::temp_directory_path() / "mask_rt.png";
  write_png_mask(path.string(), m);
  MaskGrid back = read_png_mask(path.string());
  CHECK(back == m);
  CHECK(back.count() == m.count());
  fs::remove(path);
}

TEST_CASE("read errors are DataError, not crashes") {
  CHECK_THROWS_AS(read_png_rgb("/nonexistent/nope.png"), DataError);
  fs::path bogus = fs::temp_directory_path() / "not_a_png.png";
  write_file(bogus.string(), "plainly not a png");
  CHECK_THROWS_AS(read_png_rgb(bogus.string()), DataError);
  fs::remove(bogus);
}

TEST_CASE("luma is Rec.601 in [0,1]") {
  ImageU8 img;
  img.width = 2;
  img.height = 1;
  img.rgb = {255, 255, 255, 255, 0, 0};  // white, pure red
  GridF y = luma(img);
  CHECK(y.at(0, 0) == doctest::Approx(1.0));
  CHECK(y.at(0, 1) == doctest::Approx(0.299));
}

TEST_CASE("bilinear resize keeps constant images constant") {
  ImageU8 img;
  img.width = 8;
  img.height = 6;
  img.rgb.assign(size_t(8) * 6 * 3, 77);
  ImageU8 out = resize_bilinear(img, 13, 9);
  CHECK(out.width == 13);
  CHECK(out.height == 9);
  for (auto b : out.rgb) CHECK(b == 77);
}

TEST_CASE("mask area_frac matches count") {
  MaskGrid m;
  m.width = 10;
  m.height = 10;
  m.v.assign(100, 0);
  for (int i = 0; i < 12; ++i) m.v[i] = 1;
  CHECK(m.count() == 12);
  CHECK(m.area_frac() == 0.12);  // 12/100 rounds to the same double
}
