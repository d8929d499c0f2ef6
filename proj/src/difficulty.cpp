#include "editforge/difficulty.hpp"

#include <algorithm>
#include <cmath>

#include "editforge/common.hpp"
#include "editforge/diffmask.hpp"
#include "editforge/textcfg.hpp"

namespace editforge::difficulty {

Lexicon Lexicon::load(const std::string& path) {
  CfgFile cfg = load_cfg(path);
  Lexicon lex;
  lex.version = cfg.version;
  auto fill = [&](const char* section, std::vector<std::string>& out) {
    const CfgSection* s = cfg.find(section);
    if (!s) throw ConfigError(path + ": missing [" + section + "] section");
    for (const CfgLine& l : s->items) out.push_back(lower(l.text));
  };
  fill("verbs", lex.verbs);
  fill("conjunctions", lex.conjunctions);
  fill("spatial", lex.spatial);
  if (lex.verbs.empty() || lex.conjunctions.empty() || lex.spatial.empty())
    throw ConfigError(path + ": empty wordlist section");
  return lex;
}

Lexicon Lexicon::load_default() {
  return load(default_config_dir() + "/instruction_lexicon.toml");
}

namespace {

inline bool word_char(char c) {
  return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '\'';
}

// Occurrences of `term` in `text` (both lowercase) bounded by non-word chars.
int count_bounded(const std::string& text, const std::string& term) {
  if (term.empty()) return 0;
  int count = 0;
  size_t pos = 0;
  while ((pos = text.find(term, pos)) != std::string::npos) {
    bool left_ok = pos == 0 || !word_char(text[pos - 1]);
    size_t end = pos + term.size();
    bool right_ok = end >= text.size() || !word_char(text[end]);
    if (left_ok && right_ok) ++count;
    pos += 1;
  }
  return count;
}

inline double clamp01(double v) { return std::clamp(v, 0.0, 1.0); }

}  // namespace

InstructionComplexity instruction_complexity(const std::string& instruction,
                                             const Lexicon& lex) {
  InstructionComplexity out;
  std::string text = lower(trim(instruction));
  if (text.empty()) {
    out.score = 0.05;
    return out;
  }
  bool in_word = false;
  for (char c : text) {
    bool ws = c == ' ' || c == '\t' || c == '\n';
    if (!ws && !in_word) ++out.words;
    in_word = !ws;
    if (c == ',') ++out.conjunctions;
  }
  for (const std::string& v : lex.verbs) out.verbs += count_bounded(text, v);
  for (const std::string& c : lex.conjunctions)
    out.conjunctions += count_bounded(text, c);
  for (const std::string& s : lex.spatial) out.spatial += count_bounded(text, s);

  out.score = (clamp01(out.words / 30.0) + clamp01(out.verbs / 3.0) +
               clamp01(out.conjunctions / 2.0) + clamp01(out.spatial / 2.0)) /
              4.0;
  return out;
}

double structural_score(const ImageU8& real, const ImageU8& edited) {
  GridF ssim = diffmask::ssim_map_local(luma(real), luma(edited));
  return std::clamp(1.0 - diffmask::grid_mean(ssim), 0.0, 1.0);
}

double compactness(const MaskGrid& mask) {
  const size_t area = mask.count();
  if (area == 0) return 0.0;

  int rmin = mask.height, rmax = -1, cmin = mask.width, cmax = -1;
  for (int r = 0; r < mask.height; ++r)
    for (int c = 0; c < mask.width; ++c)
      if (mask.at(r, c)) {
        rmin = std::min(rmin, r);
        rmax = std::max(rmax, r);
        cmin = std::min(cmin, c);
        cmax = std::max(cmax, c);
      }

  // Largest 8-connected component via union-find over set pixels; the oracle
  // in the reference library does a BFS flood fill instead.
  const int W = mask.width;
  std::vector<int> parent(mask.v.size(), -1);
  std::vector<int> rank_(mask.v.size(), 0);
  auto find = [&](int a) {
    while (parent[a] != a) {
      parent[a] = parent[parent[a]];
      a = parent[a];
    }
    return a;
  };
  auto unite = [&](int a, int b) {
    a = find(a);
    b = find(b);
    if (a == b) return;
    if (rank_[a] < rank_[b]) std::swap(a, b);
    parent[b] = a;
    if (rank_[a] == rank_[b]) ++rank_[a];
  };
  for (int r = 0; r < mask.height; ++r)
    for (int c = 0; c < mask.width; ++c) {
      int idx = r * W + c;
      if (!mask.v[idx]) continue;
      parent[idx] = idx;
      // connect to already-initialized neighbors (previous row + left)
      if (c > 0 && mask.at(r, c - 1)) unite(idx, idx - 1);
      if (r > 0) {
        for (int dc = -1; dc <= 1; ++dc) {
          int cc = c + dc;
          if (cc >= 0 && cc < W && mask.at(r - 1, cc)) unite(idx, idx - W + dc);
        }
      }
    }
  std::vector<size_t> sizes(mask.v.size(), 0);
  size_t largest = 0;
  for (size_t i = 0; i < mask.v.size(); ++i)
    if (parent[i] >= 0) largest = std::max(largest, ++sizes[find(static_cast<int>(i))]);

  double bbox = double(rmax - rmin + 1) * double(cmax - cmin + 1);
  double fill = static_cast<double>(area) / bbox;
  double dominance = static_cast<double>(largest) / static_cast<double>(area);
  return std::sqrt(fill * dominance);
}

double score_v1(double s_struct, double s_perc, double s_loc, double s_instr,
                const WeightsV1& w) {
  return w.w_struct * s_struct + w.w_perc * s_perc + w.w_loc * s_loc +
         w.w_instr * s_instr;
}

double score_v2(double s_struct, double s_compact, double s_instr,
                const WeightsV2& w) {
  return w.w_struct * s_struct + w.w_compact * s_compact + w.w_instr * s_instr;
}

TertileCuts tertile_cuts(const std::vector<double>& scores) {
  if (scores.size() < 3)
    throw DataError("tertile_cuts: need at least 3 scores, got " +
                    std::to_string(scores.size()));
  TertileCuts cuts;
  cuts.p33 = quantile(scores, 1.0 / 3.0);
  cuts.p66 = quantile(scores, 2.0 / 3.0);
  auto [mn, mx] = std::minmax_element(scores.begin(), scores.end());
  cuts.degenerate = *mn == *mx;
  return cuts;
}

Bin bin_for(double score, const TertileCuts& cuts) {
  if (score <= cuts.p33) return Bin::easy;
  if (score <= cuts.p66) return Bin::medium;
  return Bin::hard;
}

}  // namespace editforge::difficulty
