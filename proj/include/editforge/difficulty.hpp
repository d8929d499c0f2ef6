#pragma once

#include <string>
#include <vector>

#include "editforge/image.hpp"
#include "editforge/records.hpp"

namespace editforge::difficulty {

// Wordlists behind the instruction-complexity component. Versioned config,
// not code; see config/instruction_lexicon.toml.
struct Lexicon {
  std::string version;
  std::vector<std::string> verbs;
  std::vector<std::string> conjunctions;
  std::vector<std::string> spatial;

  static Lexicon load(const std::string& path);
  static Lexicon load_default();
};

struct InstructionComplexity {
  int words = 0;
  int verbs = 0;
  int conjunctions = 0;  // conjunction words + commas
  int spatial = 0;
  double score = 0.0;
};

// Mean of clamp(words/30), clamp(verbs/3), clamp(conjunctions/2),
// clamp(spatial/2); an empty instruction floors at 0.05. Matching is
// word-bounded on the lowercased text; commas count as conjunctions.
InstructionComplexity instruction_complexity(const std::string& instruction,
                                             const Lexicon& lex);

// 1 - mean local SSIM of the pair's luma, clamped to [0,1].
double structural_score(const ImageU8& real, const ImageU8& edited);

// sqrt( (|M|/|bbox|) * (|largest 8-connected component|/|M|) ).
// Empty mask -> 0 (worst concentration).
double compactness(const MaskGrid& mask);

struct WeightsV1 {
  double w_struct = 0.30, w_perc = 0.30, w_loc = 0.20, w_instr = 0.20;
};
struct WeightsV2 {
  double w_struct = 0.55, w_compact = 0.25, w_instr = 0.20;
};

double score_v1(double s_struct, double s_perc, double s_loc, double s_instr,
                const WeightsV1& w = {});
double score_v2(double s_struct, double s_compact, double s_instr,
                const WeightsV2& w = {});

// Dataset-internal tertile cutoffs (linear-interpolation quantiles at 1/3 and
// 2/3). score <= lower -> easy, <= upper -> medium, else hard. A fully
// degenerate distribution (all scores equal) flags itself: everything lands
// in easy.
struct TertileCuts {
  double p33 = 0.0;
  double p66 = 0.0;
  bool degenerate = false;
};
TertileCuts tertile_cuts(const std::vector<double>& scores);
Bin bin_for(double score, const TertileCuts& cuts);

}  // namespace editforge::difficulty
