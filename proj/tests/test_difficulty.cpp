#include "doctest.h"

#include <cmath>
#include <random>

#include "editforge/common.hpp"
#include "editforge/difficulty.hpp"
#include "editforge/reference.hpp"
#include "editforge/synthoracle.hpp"

using namespace editforge;

namespace {

MaskGrid random_mask(std::mt19937& rng, int w, int h, double fill) {
  std::bernoulli_distribution dist(fill);
  MaskGrid m(w, h);
  for (auto& v : m.v) v = dist(rng) ? 1 : 0;
  return m;
}

}  // namespace

TEST_CASE("lexicon loads from the shipped config") {
  difficulty::Lexicon lex = difficulty::Lexicon::load_default();
  CHECK(lex.version == "v1.0");
  CHECK(lex.verbs.size() >= 50);
  CHECK(!lex.conjunctions.empty());
  CHECK(lex.spatial.size() >= 20);
}

TEST_CASE("instruction complexity: hand-computed cases") {
  difficulty::Lexicon lex = difficulty::Lexicon::load_default();

  difficulty::InstructionComplexity c =
      difficulty::instruction_complexity("add a polar bear", lex);
  CHECK(c.words == 4);
  CHECK(c.verbs == 1);
  CHECK(c.conjunctions == 0);
  CHECK(c.spatial == 0);
  CHECK(c.score == doctest::Approx((4.0 / 30.0 + 1.0 / 3.0) / 4.0).epsilon(1e-12));

  c = difficulty::instruction_complexity(
      "move the lamp to the left and add a cat, then brighten the room", lex);
  CHECK(c.words == 14);
  CHECK(c.verbs == 3);
  CHECK(c.conjunctions == 3);  // and, then, one comma
  CHECK(c.spatial == 1);
  CHECK(c.score == doctest::Approx((14.0 / 30.0 + 1.0 + 1.0 + 0.5) / 4.0));
}

TEST_CASE("instruction complexity: matching is word-bounded, not substring") {
  difficulty::Lexicon lex = difficulty::Lexicon::load_default();
  // "addition" must not count as the verb "add"; "wooden" is not "wood".
  auto c = difficulty::instruction_complexity("an addition of saddle padding", lex);
  CHECK(c.verbs == 0);
  // Capitals fold away.
  CHECK(difficulty::instruction_complexity("ADD a hat", lex).verbs == 1);
}

TEST_CASE("instruction complexity: empty floors at 0.05 and growth is monotone") {
  difficulty::Lexicon lex = difficulty::Lexicon::load_default();
  CHECK(difficulty::instruction_complexity("", lex).score == 0.05);
  CHECK(difficulty::instruction_complexity("   \t ", lex).score == 0.05);

  double base = difficulty::instruction_complexity("remove the hat", lex).score;
  double extended =
      difficulty::instruction_complexity(
          "remove the hat and then also move it to the left", lex)
          .score;
  CHECK(extended > base);
}

TEST_CASE("compactness agrees with the BFS reference oracle") {
  std::mt19937 rng(77);
  for (int trial = 0; trial < 50; ++trial) {
    int w = 4 + int(rng() % 28), h = 4 + int(rng() % 28);
    double fill = (trial % 5) * 0.2 + 0.05;
    MaskGrid m = random_mask(rng, w, h, fill);
    CHECK(difficulty::compactness(m) ==
          doctest::Approx(ref::compactness(m)).epsilon(1e-12));
  }
}

TEST_CASE("compactness anchors: solid box 1, empty 0, split shrinks") {
  MaskGrid box(12, 12);
  for (int r = 3; r < 9; ++r)
    for (int c = 2; c < 10; ++c) box.at(r, c) = 1;
  CHECK(difficulty::compactness(box) == doctest::Approx(1.0));

  MaskGrid single(5, 5);
  single.at(2, 2) = 1;
  CHECK(difficulty::compactness(single) == doctest::Approx(1.0));

  CHECK(difficulty::compactness(MaskGrid(6, 6)) == 0.0);

  MaskGrid split(1, 10);
  split.at(0, 0) = 1;
  split.at(0, 9) = 1;  // bbox 10 wide, fill 0.2, dominance 0.5
  CHECK(difficulty::compactness(split) == doctest::Approx(std::sqrt(0.1)));
}

TEST_CASE("structural score: zero for identical pairs, positive for real edits") {
  synth::SyntheticEditSpec spec;
  spec.kind = synth::SyntheticKind::no_edit;
  spec.seed = 5;
  spec.img_w = 48;
  spec.img_h = 48;
  auto same = synth::apply_edit(spec);
  CHECK(difficulty::structural_score(same.base, same.edited) == 0.0);

  spec.kind = synth::SyntheticKind::global_noise;
  spec.magnitude = 0.9;
  auto noisy = synth::apply_edit(spec);
  double s = difficulty::structural_score(noisy.base, noisy.edited);
  CHECK(s > 0.05);
  CHECK(s <= 1.0);
}

TEST_CASE("score_v1 and score_v2 are the documented linear blends") {
  CHECK(difficulty::score_v2(0.5, 0.3, 0.1) ==
        doctest::Approx(0.55 * 0.5 + 0.25 * 0.3 + 0.20 * 0.1).epsilon(1e-15));
  CHECK(difficulty::score_v1(0.5, 0.4, 0.3, 0.2) ==
        doctest::Approx(0.30 * 0.5 + 0.30 * 0.4 + 0.20 * 0.3 + 0.20 * 0.2)
            .epsilon(1e-15));

  difficulty::WeightsV2 w2{0.5, 0.25, 0.25};
  CHECK(difficulty::score_v2(1.0, 1.0, 1.0, w2) == doctest::Approx(1.0));
}

TEST_CASE("tertile cuts: interpolated thirds over 1..9") {
  std::vector<double> scores{9, 1, 8, 2, 7, 3, 6, 4, 5};  // order must not matter
  difficulty::TertileCuts cuts = difficulty::tertile_cuts(scores);
  CHECK(!cuts.degenerate);
  CHECK(cuts.p33 == doctest::Approx(11.0 / 3.0).epsilon(1e-12));
  CHECK(cuts.p66 == doctest::Approx(19.0 / 3.0).epsilon(1e-12));

  CHECK(difficulty::bin_for(1.0, cuts) == Bin::easy);
  CHECK(difficulty::bin_for(cuts.p33, cuts) == Bin::easy);  // boundary goes low
  CHECK(difficulty::bin_for(5.0, cuts) == Bin::medium);
  CHECK(difficulty::bin_for(cuts.p66, cuts) == Bin::medium);
  CHECK(difficulty::bin_for(6.5, cuts) == Bin::hard);
}

TEST_CASE("tertile cuts: fewer than three scores is refused") {
  CHECK_THROWS_AS(difficulty::tertile_cuts({}), DataError);
  CHECK_THROWS_AS(difficulty::tertile_cuts({0.5}), DataError);
  CHECK_THROWS_AS(difficulty::tertile_cuts({0.2, 0.8}), DataError);
}

TEST_CASE("tertile cuts: a flat distribution flags degenerate, all-easy") {
  difficulty::TertileCuts cuts = difficulty::tertile_cuts({0.4, 0.4, 0.4, 0.4});
  CHECK(cuts.degenerate);
  CHECK(difficulty::bin_for(0.4, cuts) == Bin::easy);
}
