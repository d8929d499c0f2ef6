#include "doctest.h"

#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <string>

#include "editforge/common.hpp"
#include "editforge/image.hpp"
#include "editforge/ingest.hpp"

namespace fs = std::filesystem;
using namespace editforge;
using namespace editforge::ingest;

namespace {

struct TmpDir {
  fs::path path;
  TmpDir() {
    static int counter = 0;
    path = fs::temp_directory_path() /
           ("editforge_ingest_" + std::to_string(::getpid()) + "_" +
            std::to_string(counter++));
    fs::create_directories(path);
  }
  ~TmpDir() { fs::remove_all(path); }
  std::string str() const { return path.string(); }
};

ImageU8 solid(int w, int h, std::uint8_t r, std::uint8_t g, std::uint8_t b) {
  ImageU8 img;
  img.width = w;
  img.height = h;
  img.rgb.resize(size_t(w) * h * 3);
  for (int i = 0; i < w * h; ++i) {
    img.rgb[3 * size_t(i) + 0] = r;
    img.rgb[3 * size_t(i) + 1] = g;
    img.rgb[3 * size_t(i) + 2] = b;
  }
  return img;
}

void paint_rect(ImageU8& img, int r0, int r1, int c0, int c1, std::uint8_t r,
                std::uint8_t g, std::uint8_t b) {
  for (int rr = r0; rr <= r1; ++rr)
    for (int cc = c0; cc <= c1; ++cc) {
      std::uint8_t* p = img.px(rr, cc);
      p[0] = r;
      p[1] = g;
      p[2] = b;
    }
}

void write_lines(const fs::path& p, const std::string& body) {
  std::ofstream out(p);
  out << body;
}

}  // namespace

TEST_CASE("stem sanitization") {
  CHECK(sanitize_stem("Photo 01.PNG") == "photo_01");
  CHECK(sanitize_stem("edits/Out One.png") == "out_one");
  CHECK(sanitize_stem("ABC-def_9.png") == "abc-def_9");
  CHECK(sanitize_stem("IMG_1234.output.png") == "img_1234_output");
  CHECK(sanitize_stem("") == "unnamed");
}

TEST_CASE("picobanana ingest: good rows, per-row issues, metadata") {
  TmpDir tmp;
  fs::create_directories(tmp.path / "edits");
  write_png_rgb((tmp.path / "edits" / "Out One.png").string(),
                solid(4, 4, 10, 20, 30));
  write_png_rgb((tmp.path / "in1.png").string(), solid(4, 4, 200, 0, 0));
  write_png_rgb((tmp.path / "out2.png").string(), solid(4, 4, 9, 9, 9));
  write_png_rgb((tmp.path / "out6.png").string(), solid(4, 4, 1, 2, 3));
  write_png_rgb((tmp.path / "in6.png").string(), solid(4, 4, 4, 5, 6));

  std::string manifest =
      R"({"text": "add a hat", "output_image": "edits/Out One.png", "local_input_image": "in1.png"})"
      "\n"
      R"({"text": "swap it", "output_image": "out2.png", "open_image_input_url": "http://img.test/a.png"})"
      "\n"
      "{oops\n"
      R"({"output_image": "out4.png"})"
      "\n"
      R"({"text": "remove it", "output_image": "missing.png", "local_input_image": "in1.png"})"
      "\n"
      R"({"text": "brighten it", "output_image": "out6.png", "local_input_image": "in6.png", "edit_type": "Adjust brightness/contrast"})"
      "\n";
  write_lines(tmp.path / "manifest.jsonl", manifest);

  AdapterConfig cfg;
  IngestResult res = ingest_picobanana((tmp.path / "manifest.jsonl").string(), cfg);

  REQUIRE(res.triplets.size() == 2);
  const EditTriplet& t0 = res.triplets[0];
  CHECK(t0.triplet_id == "picobanana_out_one");
  CHECK(t0.source_dataset == SourceDataset::pico_banana);
  CHECK(t0.instruction == "add a hat");
  CHECK(fs::exists(t0.real_path));
  CHECK(fs::exists(t0.edited_path));
  CHECK(t0.metadata.empty());

  const EditTriplet& t1 = res.triplets[1];
  CHECK(t1.triplet_id == "picobanana_out6");
  CHECK(t1.metadata.at("source_edit_type") == "Adjust brightness/contrast");

  REQUIRE(res.issues.size() == 4);
  CHECK(res.issues[0].lineno == 2);
  CHECK(res.issues[0].reason ==
        "input missing locally and downloads are disabled");
  CHECK(res.issues[1].lineno == 3);
  CHECK(res.issues[1].reason.rfind("bad json:", 0) == 0);
  CHECK(res.issues[2].lineno == 4);
  CHECK(res.issues[2].reason == "missing text or output_image");
  CHECK(res.issues[3].lineno == 5);
  CHECK(res.issues[3].reason.rfind("edited image not found:", 0) == 0);

  SUBCASE("max_rows stops early") {
    cfg.max_rows = 1;
    IngestResult capped =
        ingest_picobanana((tmp.path / "manifest.jsonl").string(), cfg);
    CHECK(capped.triplets.size() == 1);
    CHECK(capped.triplets[0].triplet_id == "picobanana_out_one");
  }
}

TEST_CASE("picobanana ingest: duplicate stems abort naming both rows") {
  TmpDir tmp;
  write_png_rgb((tmp.path / "dup.png").string(), solid(4, 4, 9, 9, 9));
  write_png_rgb((tmp.path / "in.png").string(), solid(4, 4, 9, 9, 9));
  write_lines(
      tmp.path / "m.jsonl",
      R"({"text": "one", "output_image": "dup.png", "local_input_image": "in.png"})"
      "\n"
      R"({"text": "two", "output_image": "dup.png", "local_input_image": "in.png"})"
      "\n");
  try {
    ingest_picobanana((tmp.path / "m.jsonl").string(), AdapterConfig{});
    FAIL("expected DataError");
  } catch (const DataError& e) {
    std::string msg = e.what();
    CHECK(msg.find("duplicate output stem 'dup'") != std::string::npos);
    CHECK(msg.find("rows 1 and 2") != std::string::npos);
  }
}

TEST_CASE("picobanana ingest: row without any usable input") {
  TmpDir tmp;
  write_png_rgb((tmp.path / "o.png").string(), solid(4, 4, 9, 9, 9));
  write_lines(tmp.path / "m.jsonl",
              R"({"text": "x", "output_image": "o.png"})"
              "\n");
  IngestResult res =
      ingest_picobanana((tmp.path / "m.jsonl").string(), AdapterConfig{});
  CHECK(res.triplets.empty());
  REQUIRE(res.issues.size() == 1);
  CHECK(res.issues[0].reason == "no usable input image");

  CHECK_THROWS_AS(ingest_picobanana((tmp.path / "nope.jsonl").string(),
                                    AdapterConfig{}),
                  DataError);
}

TEST_CASE("download cache: local hits and hard failures, no network needed") {
  TmpDir tmp;
  std::string cache = (tmp.path / "cache").string();

  CHECK_THROWS_AS(download_to_cache("http://x.test/a.png", ""), ConfigError);

  // Garbage without a scheme never touches the network.
  CHECK(download_to_cache("not a url", cache).empty());

  // A pre-seeded cache entry is returned as-is; the key is the URL hash and
  // the extension comes from the path component, query stripped.
  std::string url = "http://img.test/photos/cat.png?sig=abc123";
  fs::create_directories(cache);
  fs::path seeded = fs::path(cache) / (fnv1a64_hex(url) + ".png");
  write_lines(seeded, "pngbytes");
  CHECK(download_to_cache(url, cache) == seeded.string());

  // Connection refused: three bounded attempts, then empty.
  CHECK(download_to_cache("http://127.0.0.1:1/x.png", cache).empty());
}

TEST_CASE("magicbrush mask decode") {
  ImageU8 target = solid(10, 10, 120, 130, 140);
  ImageU8 mask = solid(10, 10, 255, 255, 255);
  paint_rect(mask, 2, 5, 3, 6, 0, 0, 0);  // 16 black px marks the edit

  SUBCASE("normal polarity") {
    DecodedMask d = decode_magicbrush_mask(mask, target);
    CHECK(!d.inverted);
    CHECK(!d.warned_empty);
    CHECK(d.mask.count() == 16);
    CHECK(d.mask.at(2, 3) == 1);
    CHECK(d.mask.at(0, 0) == 0);
  }

  SUBCASE("pixels black in the target itself are excluded") {
    paint_rect(target, 2, 2, 3, 3, 0, 0, 0);
    DecodedMask d = decode_magicbrush_mask(mask, target);
    CHECK(d.mask.count() == 15);
    CHECK(d.mask.at(2, 3) == 0);
  }

  SUBCASE("majority-black input flips polarity") {
    ImageU8 inv = solid(10, 10, 0, 0, 0);
    paint_rect(inv, 2, 5, 3, 6, 255, 255, 255);
    DecodedMask d = decode_magicbrush_mask(inv, target);
    CHECK(d.inverted);
    CHECK(d.mask.count() == 16);
    CHECK(d.mask.at(2, 3) == 1);
  }

  SUBCASE("exactly half black stays non-inverted") {
    ImageU8 half = solid(2, 2, 255, 255, 255);
    paint_rect(half, 0, 0, 0, 1, 0, 0, 0);
    ImageU8 tgt = solid(2, 2, 50, 50, 50);
    DecodedMask d = decode_magicbrush_mask(half, tgt);
    CHECK(!d.inverted);
    CHECK(d.mask.count() == 2);
  }

  SUBCASE("empty result is flagged, not fatal") {
    ImageU8 blank = solid(10, 10, 255, 255, 255);
    DecodedMask d = decode_magicbrush_mask(blank, target);
    CHECK(!d.inverted);
    CHECK(d.warned_empty);
    CHECK(d.mask.count() == 0);
  }

  SUBCASE("dimension mismatch is a data error") {
    ImageU8 small = solid(8, 10, 255, 255, 255);
    CHECK_THROWS_AS(decode_magicbrush_mask(small, target), DataError);
  }
}

TEST_CASE("magicbrush ingest: re-encode, metadata, issues") {
  TmpDir tmp;
  fs::path split_dir = tmp.path / "data" / "dev";
  fs::create_directories(split_dir);
  fs::path out_root = tmp.path / "out";

  ImageU8 source = solid(8, 8, 100, 110, 120);
  ImageU8 target = solid(8, 8, 100, 110, 120);
  paint_rect(target, 1, 3, 1, 3, 240, 10, 10);
  ImageU8 mask = solid(8, 8, 255, 255, 255);
  paint_rect(mask, 1, 3, 1, 3, 0, 0, 0);
  ImageU8 inv_mask = solid(8, 8, 0, 0, 0);
  paint_rect(inv_mask, 1, 3, 1, 3, 255, 255, 255);
  ImageU8 empty_mask = solid(8, 8, 255, 255, 255);

  write_png_rgb((split_dir / "s.png").string(), source);
  write_png_rgb((split_dir / "t.png").string(), target);
  write_png_rgb((split_dir / "m.png").string(), mask);
  write_png_rgb((split_dir / "m_inv.png").string(), inv_mask);
  write_png_rgb((split_dir / "m_empty.png").string(), empty_mask);

  std::string rows =
      R"({"img_id": "Img 7", "turn_index": 1, "instruction": "paint the box red", "source_img": "s.png", "target_img": "t.png", "mask_img": "m.png"})"
      "\n"
      R"({"img_id": "Img 7", "turn_index": 2, "instruction": "again", "source_img": "t.png", "target_img": "t.png", "mask_img": "m_inv.png"})"
      "\n"
      R"({"img_id": "empty", "turn_index": 1, "instruction": "noop", "source_img": "s.png", "target_img": "t.png", "mask_img": "m_empty.png"})"
      "\n"
      R"({"img_id": "broken", "turn_index": 1, "instruction": "x", "source_img": "nope.png", "target_img": "t.png", "mask_img": "m.png"})"
      "\n"
      R"({"img_id": "nofield", "turn_index": 1, "source_img": "s.png", "target_img": "t.png", "mask_img": "m.png"})"
      "\n"
      R"({"img_id": "zturn", "turn_index": 0, "instruction": "x", "source_img": "s.png", "target_img": "t.png", "mask_img": "m.png"})"
      "\n";
  write_lines(split_dir / "rows.jsonl", rows);

  AdapterConfig cfg;
  IngestResult res = ingest_magicbrush((tmp.path / "data").string(), "dev",
                                       out_root.string(), cfg);

  REQUIRE(res.triplets.size() == 3);
  const EditTriplet& t0 = res.triplets[0];
  CHECK(t0.triplet_id == "magicbrush_dev_img_7_t01");
  CHECK(t0.source_dataset == SourceDataset::magicbrush);
  CHECK(t0.metadata.at("split") == "dev");
  CHECK(t0.metadata.at("turn_index") == "1");
  CHECK(t0.metadata.at("source_is_authentic") == "true");
  CHECK(t0.metadata.count("mask_inverted") == 0);
  REQUIRE(t0.provided_mask_path.has_value());

  // Assets are re-encoded losslessly under the output root.
  ImageU8 real_back = read_png_rgb(t0.real_path);
  CHECK(real_back.rgb == source.rgb);
  ImageU8 edited_back = read_png_rgb(t0.edited_path);
  CHECK(edited_back.rgb == target.rgb);
  MaskGrid mask_back = read_png_mask(*t0.provided_mask_path);
  CHECK(mask_back.count() == 9);
  CHECK(mask_back.at(1, 1) == 1);

  const EditTriplet& t1 = res.triplets[1];
  CHECK(t1.triplet_id == "magicbrush_dev_img_7_t02");
  CHECK(t1.metadata.at("source_is_authentic") == "false");
  CHECK(t1.metadata.at("mask_inverted") == "true");

  const EditTriplet& t2 = res.triplets[2];
  CHECK(t2.metadata.at("mask_empty") == "true");

  REQUIRE(res.issues.size() == 4);
  CHECK(res.issues[0].lineno == 3);  // empty decoded mask, row still kept
  CHECK(res.issues[0].reason.find("decoded mask is empty") != std::string::npos);
  CHECK(res.issues[1].lineno == 4);
  CHECK(res.issues[2].lineno == 5);
  CHECK(res.issues[2].reason == "missing required fields");
  CHECK(res.issues[3].lineno == 6);

  SUBCASE("single_turn_only drops follow-up turns silently") {
    cfg.single_turn_only = true;
    IngestResult only1 = ingest_magicbrush((tmp.path / "data").string(), "dev",
                                           (tmp.path / "out2").string(), cfg);
    CHECK(only1.triplets.size() == 2);
    for (const auto& t : only1.triplets)
      CHECK(t.metadata.at("turn_index") == "1");
  }

  SUBCASE("duplicate ids become per-row issues") {
    write_lines(
        split_dir / "rows.jsonl",
        R"({"img_id": "d", "turn_index": 1, "instruction": "a", "source_img": "s.png", "target_img": "t.png", "mask_img": "m.png"})"
        "\n"
        R"({"img_id": "d", "turn_index": 1, "instruction": "b", "source_img": "s.png", "target_img": "t.png", "mask_img": "m.png"})"
        "\n");
    IngestResult dup = ingest_magicbrush((tmp.path / "data").string(), "dev",
                                         (tmp.path / "out3").string(), cfg);
    CHECK(dup.triplets.size() == 1);
    REQUIRE(dup.issues.size() == 1);
    CHECK(dup.issues[0].reason.find("duplicate triplet id") != std::string::npos);
    CHECK(dup.issues[0].reason.find("rows 1 and 2") != std::string::npos);
  }

  CHECK_THROWS_AS(ingest_magicbrush((tmp.path / "data").string(), "train",
                                    out_root.string(), cfg),
                  DataError);
}

TEST_CASE("synthetic ingest resolves paths against the manifest directory") {
  TmpDir tmp;
  write_lines(
      tmp.path / "manifest.jsonl",
      R"({"triplet_id": "s1", "real_image": "a.png", "edited_image": "b.png", "instruction": "x", "gt_mask": "m.png", "kind": "paste_patch", "gt_scope": "local", "magnitude": 0.75})"
      "\n"
      R"({"triplet_id": "s2", "real_image": "c.png", "edited_image": "d.png", "instruction": "y", "magnitude": "not a number"})"
      "\n"
      R"({"triplet_id": "s3", "real_image": "e.png", "edited_image": "f.png"})"
      "\n");

  IngestResult res = ingest_synthetic((tmp.path / "manifest.jsonl").string(),
                                      AdapterConfig{});
  REQUIRE(res.triplets.size() == 2);
  const EditTriplet& t0 = res.triplets[0];
  CHECK(t0.real_path == (tmp.path / "a.png").string());
  CHECK(t0.edited_path == (tmp.path / "b.png").string());
  REQUIRE(t0.provided_mask_path.has_value());
  CHECK(*t0.provided_mask_path == (tmp.path / "m.png").string());
  CHECK(t0.metadata.at("kind") == "paste_patch");
  CHECK(t0.metadata.at("gt_scope") == "local");
  CHECK(t0.metadata.at("magnitude") == "0.75");

  CHECK(res.triplets[1].metadata.count("magnitude") == 0);
  CHECK(!res.triplets[1].provided_mask_path.has_value());

  REQUIRE(res.issues.size() == 1);
  CHECK(res.issues[0].lineno == 3);
  CHECK(res.issues[0].reason == "missing required fields");
}
