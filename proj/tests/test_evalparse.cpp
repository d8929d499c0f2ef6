#include "doctest.h"

#include <algorithm>
#include <sstream>
#include <string>
#include <vector>

#include "editforge/chaincomp.hpp"
#include "editforge/evalparse.hpp"
#include "editforge/textcfg.hpp"
#include "helpers/golden_records.hpp"

using namespace editforge;
using namespace editforge::evalparse;

namespace {

// Rendered golden chain + the triple a perfect parser should recover.
struct Rendered {
  std::string text;
  GoldTriple gold;
};

std::vector<Rendered> rendered_goldens() {
  auto templates = chaincomp::PriorTemplateSet::load_default();
  std::vector<Rendered> out;
  for (const auto& g : golden::all()) {
    auto mask = golden::make_mask(g);
    auto chain = chaincomp::compose_chain(golden::make_triplet(g), mask,
                                          golden::make_difficulty(g),
                                          golden::make_category(g), templates);
    out.push_back({chain.render(),
                   {g.category, chaincomp::spatial_descriptor(mask), g.bin}});
  }
  return out;
}

std::string drop_first_line(const std::string& text) {
  size_t nl = text.find('\n');
  return nl == std::string::npos ? std::string() : text.substr(nl + 1);
}

bool has_note(const ParsedFields& p, const std::string& note) {
  return std::find(p.notes.begin(), p.notes.end(), note) != p.notes.end();
}

}  // namespace

TEST_CASE("chain parse round-trips every golden chain") {
  for (const auto& r : rendered_goldens()) {
    CAPTURE(r.text.substr(0, 60));
    ParsedFields p = parse_chain_fields(r.text);
    REQUIRE(p.category.has_value());
    REQUIRE(p.spatial.has_value());
    REQUIRE(p.bin.has_value());
    CHECK(*p.category == r.gold.category);
    CHECK(*p.spatial == r.gold.spatial);
    CHECK(*p.bin == r.gold.bin);
    CHECK(p.notes.empty());
  }
}

TEST_CASE("chain parse falls back to step text without a header") {
  for (const auto& r : rendered_goldens()) {
    ParsedFields p = parse_chain_fields(drop_first_line(r.text));
    REQUIRE(p.category.has_value());
    REQUIRE(p.spatial.has_value());
    REQUIRE(p.bin.has_value());
    CHECK(*p.category == r.gold.category);
    CHECK(*p.spatial == r.gold.spatial);
    CHECK(*p.bin == r.gold.bin);
    CHECK(has_note(p, "category from step text"));
    CHECK(has_note(p, "bin from step text"));
  }
}

TEST_CASE("chain parse tolerates reordered steps") {
  const Rendered r = rendered_goldens().front();
  std::vector<std::string> lines;
  std::istringstream in(r.text);
  std::string line;
  while (std::getline(in, line)) lines.push_back(line);
  REQUIRE(lines.size() == 7);
  std::reverse(lines.begin(), lines.end());  // header last, steps 6..1
  std::string shuffled;
  for (const auto& l : lines) shuffled += l + "\n";

  ParsedFields p = parse_chain_fields(shuffled);
  CHECK(p.category == r.gold.category);
  CHECK(p.spatial == r.gold.spatial);
  CHECK(p.bin == r.gold.bin);
}

TEST_CASE("chain parse survives partial output") {
  ParsedFields p = parse_chain_fields(
      "4. The edit is classified as text_edit, inferred from the instruction "
      "text via a rule-based keyword match (confidence 0.70).\n");
  CHECK(p.category == Category::text_edit);
  CHECK(!p.spatial.has_value());
  CHECK(!p.bin.has_value());
  CHECK(has_note(p, "spatial unextractable"));
  CHECK(has_note(p, "bin unextractable"));
}

TEST_CASE("well-formed header wins over contradicting steps") {
  std::string text =
      "[category=geometric, scope=local, difficulty=easy, source=rule_based]\n"
      "2. The mask of changed pixels covers roughly 8% of the image and is "
      "centered in the image.\n"
      "4. The edit is classified as photometric, based on the dataset's "
      "curated edit-type label.\n"
      "6. Overall, this triplet is harder than average to detect, given "
      "diffuse geometry or a high-complexity instruction (difficulty score = "
      "0.40, instruction complexity = 0.20).\n";
  ParsedFields p = parse_chain_fields(text);
  CHECK(p.category == Category::geometric);
  CHECK(p.bin == Bin::easy);
  CHECK(p.spatial == SpatialDescriptor::centered);
}

TEST_CASE("header scope pins spatial only when unambiguous") {
  SUBCASE("global -> whole_image") {
    ParsedFields p = parse_chain_fields(
        "[category=photometric, scope=global, difficulty=medium, "
        "source=dataset_label]\n2. (step damaged)\n");
    CHECK(p.spatial == SpatialDescriptor::whole_image);
    CHECK(has_note(p, "spatial from header scope"));
  }
  SUBCASE("alignment_failed -> alignment_failed") {
    ParsedFields p = parse_chain_fields(
        "[category=photometric, scope=alignment_failed, difficulty=medium, "
        "source=dataset_label]\n2. (step damaged)\n");
    CHECK(p.spatial == SpatialDescriptor::alignment_failed);
  }
  SUBCASE("local scope says nothing about the descriptor") {
    ParsedFields p = parse_chain_fields(
        "[category=photometric, scope=local, difficulty=medium, "
        "source=dataset_label]\n2. (step damaged)\n");
    CHECK(!p.spatial.has_value());
    CHECK(has_note(p, "spatial unextractable"));
  }
}

TEST_CASE("degraded step 2 parses as alignment_failed") {
  ParsedFields p = parse_chain_fields(
      "2. The mask of changed pixels could not be computed because image "
      "alignment failed.\n");
  CHECK(p.spatial == SpatialDescriptor::alignment_failed);
}

TEST_CASE("free text yields nothing but notes") {
  ParsedFields p = parse_chain_fields("the quick brown fox jumps over it\n");
  CHECK(!p.category.has_value());
  CHECK(!p.spatial.has_value());
  CHECK(!p.bin.has_value());
  CHECK(p.notes.size() == 3);

  // Numbered lists that are not chains parse without crashing.
  ParsedFields q = parse_chain_fields("1. first\n2. second\n3. third\n");
  CHECK(!q.category.has_value());
}

TEST_CASE("label JSON: happy path and key case-insensitivity") {
  ParsedFields p = parse_label_json(
      R"({"category": "photometric", "scope": "whole_image", "difficulty_bin": "hard"})");
  CHECK(p.category == Category::photometric);
  CHECK(p.spatial == SpatialDescriptor::whole_image);
  CHECK(p.bin == Bin::hard);
  CHECK(p.notes.empty());

  ParsedFields q = parse_label_json(
      R"(Sure, here you go: {"Category": "text_edit", "SCOPE": "upper_left", "Difficulty_Bin": "easy"} hope it helps)");
  CHECK(q.category == Category::text_edit);
  CHECK(q.spatial == SpatialDescriptor::upper_left);
  CHECK(q.bin == Bin::easy);
}

TEST_CASE("label JSON: values must match the enums exactly") {
  ParsedFields p = parse_label_json(
      R"({"category": "Photometric", "scope": "middle", "difficulty_bin": "hard"})");
  CHECK(!p.category.has_value());
  CHECK(!p.spatial.has_value());
  CHECK(p.bin == Bin::hard);
  CHECK(has_note(p, "unknown category value"));
  CHECK(has_note(p, "unknown scope value"));
}

TEST_CASE("label JSON: object discovery") {
  SUBCASE("skips malformed braces to the first parseable object") {
    ParsedFields p =
        parse_label_json(R"({oops not json} and then {"category": "other"})");
    CHECK(p.category == Category::other);
    CHECK(has_note(p, "scope key missing"));
    CHECK(has_note(p, "difficulty_bin key missing"));
  }
  SUBCASE("braces inside strings do not derail matching") {
    ParsedFields p = parse_label_json(
        R"({"category": "geometric", "note": "look {here} for more"})");
    CHECK(p.category == Category::geometric);
  }
  SUBCASE("keys are only read at the top level") {
    ParsedFields p =
        parse_label_json(R"({"wrapper": {"category": "geometric"}})");
    CHECK(!p.category.has_value());
    CHECK(has_note(p, "category key missing"));
  }
  SUBCASE("non-string values are ignored") {
    ParsedFields p = parse_label_json(R"({"category": 3, "scope": null})");
    CHECK(!p.category.has_value());
    CHECK(has_note(p, "category key missing"));
  }
  SUBCASE("no object at all") {
    ParsedFields p = parse_label_json("category: photometric");
    CHECK(!p.category.has_value());
    CHECK(has_note(p, "no JSON object found"));
  }
}

TEST_CASE("scoring: perfect predictions give all ones") {
  auto rendered = rendered_goldens();
  std::vector<ParsedFields> preds;
  std::vector<GoldTriple> gold;
  for (const auto& r : rendered) {
    preds.push_back(parse_chain_fields(r.text));
    gold.push_back(r.gold);
  }
  MetricsReport rep = score_predictions(preds, gold);
  CHECK(rep.n == rendered.size());
  for (const FieldMetrics* m : {&rep.category, &rep.spatial, &rep.bin}) {
    CHECK(m->accuracy == 1.0);
    CHECK(m->extraction_rate == 1.0);
    CHECK(m->conditional == 1.0);
  }
  CHECK(rep.joint_accuracy == 1.0);
}

TEST_CASE("scoring: unextracted counts as wrong, conditional excludes it") {
  GoldTriple g{Category::photometric, SpatialDescriptor::whole_image, Bin::hard};
  std::vector<GoldTriple> gold(4, g);

  std::vector<ParsedFields> preds(4);
  // two right, one wrong, one unextracted -- category field only
  preds[0].category = Category::photometric;
  preds[1].category = Category::photometric;
  preds[2].category = Category::geometric;
  for (auto& p : preds) {
    p.spatial = SpatialDescriptor::whole_image;
    p.bin = Bin::hard;
  }

  MetricsReport rep = score_predictions(preds, gold);
  CHECK(rep.category.n_total == 4);
  CHECK(rep.category.n_extracted == 3);
  CHECK(rep.category.n_correct == 2);
  CHECK(rep.category.accuracy == doctest::Approx(0.5));
  CHECK(rep.category.extraction_rate == doctest::Approx(0.75));
  CHECK(rep.category.conditional == doctest::Approx(2.0 / 3.0));
  // joint needs every field: entries 2 and 3 fail on category
  CHECK(rep.joint_accuracy == doctest::Approx(0.5));
}

TEST_CASE("scoring: empty extraction yields zero conditional, not NaN") {
  std::vector<GoldTriple> gold(3);
  std::vector<ParsedFields> preds(3);
  MetricsReport rep = score_predictions(preds, gold);
  CHECK(rep.category.accuracy == 0.0);
  CHECK(rep.category.extraction_rate == 0.0);
  CHECK(rep.category.conditional == 0.0);
  CHECK(rep.joint_accuracy == 0.0);
}

TEST_CASE("scoring: size mismatch is a data error") {
  std::vector<ParsedFields> preds(2);
  std::vector<GoldTriple> gold(3);
  CHECK_THROWS_AS(score_predictions(preds, gold), DataError);
}

TEST_CASE("scoring: empty inputs") {
  MetricsReport rep = score_predictions({}, {});
  CHECK(rep.n == 0);
  CHECK(rep.joint_accuracy == 0.0);
}
