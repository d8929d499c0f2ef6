#include "doctest.h"

#include <cstdio>
#include <string>

#include "editforge/common.hpp"
#include "editforge/textcfg.hpp"

using namespace editforge;

TEST_CASE("parse_cfg reads top-level keys, sections, comments") {
  CfgFile cfg = parse_cfg(
      "# leading comment\n"
      "version = \"v2.3\"\n"
      "expected_count = 2\n"
      "\n"
      "[alpha]\n"
      "first item\n"
      "# comment inside section\n"
      "second item\n"
      "[beta]\n"
      "x => y\n",
      "test");
  CHECK(cfg.version == "v2.3");
  CHECK(cfg.top_kv.at("expected_count") == "2");
  REQUIRE(cfg.sections.size() == 2);
  const CfgSection* a = cfg.find("alpha");
  REQUIRE(a != nullptr);
  REQUIRE(a->items.size() == 2);
  CHECK(a->items[0].text == "first item");
  CHECK(a->items[0].lineno == 6);
  CHECK(a->items[1].text == "second item");
  CHECK(cfg.find("beta")->items[0].text == "x => y");
  CHECK(cfg.find("missing") == nullptr);
}

TEST_CASE("parse_cfg strips CR and quotes") {
  CfgFile cfg = parse_cfg("version = v9\r\n[s]\r\n  padded  \r\n", "test");
  CHECK(cfg.version == "v9");
  CHECK(cfg.find("s")->items[0].text == "padded");
}

TEST_CASE("parse_cfg requires a version") {
  CHECK_THROWS_AS(parse_cfg("[s]\nitem\n", "test"), ConfigError);
  CHECK_THROWS_AS(parse_cfg("version = \"\"\n", "test"), ConfigError);
}

TEST_CASE("parse_cfg rejects bare text before the first section") {
  CHECK_THROWS_AS(parse_cfg("version = v1\nnot a key value\n", "test"),
                  ConfigError);
}

TEST_CASE("read_file and write_file round-trip bytes") {
  std::string path = "textcfg_roundtrip.tmp";
  std::string content = "version = v1\n[s]\nbinary \xc3\xa9 bytes\n";
  write_file(path, content);
  CHECK(read_file(path) == content);
  std::remove(path.c_str());
  CHECK_THROWS_AS(read_file(path), DataError);
}
