#include "editforge/chaincomp.hpp"

#include <cmath>
#include <regex>
#include <set>
#include <sstream>

#include "editforge/common.hpp"
#include "editforge/textcfg.hpp"

namespace editforge::chaincomp {

namespace {
constexpr const char* kTemplatePrefix = "Edits of this type typically exhibit";
}

PriorTemplateSet PriorTemplateSet::load(const std::string& path) {
  CfgFile cfg = load_cfg(path);
  PriorTemplateSet set;
  set.version = cfg.version;
  const CfgSection* sec = cfg.find("templates");
  if (!sec) throw ConfigError(path + ": missing [templates] section");
  for (const CfgLine& line : sec->items) {
    size_t eq = line.text.find('=');
    if (eq == std::string::npos)
      throw ConfigError(path + ":" + std::to_string(line.lineno) +
                        ": expected `category = sentence`");
    auto cat = parse_category(trim(line.text.substr(0, eq)));
    if (!cat)
      throw ConfigError(path + ":" + std::to_string(line.lineno) +
                        ": unknown category");
    std::string sentence = trim(line.text.substr(eq + 1));
    if (sentence.rfind(kTemplatePrefix, 0) != 0)
      throw ConfigError(path + ":" + std::to_string(line.lineno) +
                        ": template must begin \"" + kTemplatePrefix + "\"");
    if (!set.step5.emplace(*cat, sentence).second)
      throw ConfigError(path + ":" + std::to_string(line.lineno) +
                        ": duplicate category");
  }
  if (set.step5.size() != static_cast<size_t>(kNumCategories))
    throw ConfigError(path + ": expected one template per category (12), got " +
                      std::to_string(set.step5.size()));
  return set;
}

PriorTemplateSet PriorTemplateSet::load_default() {
  return load(default_config_dir() + "/prior_templates.toml");
}

SpatialDescriptor spatial_descriptor(const MaskArtifact& artifact) {
  if (artifact.scope == Scope::alignment_failed)
    return SpatialDescriptor::alignment_failed;
  if (artifact.scope == Scope::global) return SpatialDescriptor::whole_image;
  if (!artifact.mask)
    throw DataError("spatial_descriptor: mask grid not loaded for " +
                    artifact.triplet_id);
  const MaskGrid& m = *artifact.mask;
  size_t area = m.count();
  if (area == 0) return SpatialDescriptor::centered;

  // Largest component share decides scattered-ness; centroid decides where.
  size_t largest = 0;
  {
    std::vector<std::uint8_t> seen(m.v.size(), 0);
    std::vector<std::pair<int, int>> stack;
    for (int r = 0; r < m.height; ++r)
      for (int c = 0; c < m.width; ++c) {
        size_t idx = size_t(r) * m.width + c;
        if (!m.v[idx] || seen[idx]) continue;
        size_t count = 0;
        seen[idx] = 1;
        stack.push_back({r, c});
        while (!stack.empty()) {
          auto [cr, cc] = stack.back();
          stack.pop_back();
          ++count;
          for (int i = -1; i <= 1; ++i)
            for (int j = -1; j <= 1; ++j) {
              int nr = cr + i, nc = cc + j;
              if (nr < 0 || nr >= m.height || nc < 0 || nc >= m.width) continue;
              size_t nidx = size_t(nr) * m.width + nc;
              if (m.v[nidx] && !seen[nidx]) {
                seen[nidx] = 1;
                stack.push_back({nr, nc});
              }
            }
        }
        largest = std::max(largest, count);
      }
  }
  if (static_cast<double>(largest) / static_cast<double>(area) < 0.5)
    return SpatialDescriptor::scattered;

  double cr = 0.0, cc = 0.0;
  for (int r = 0; r < m.height; ++r)
    for (int c = 0; c < m.width; ++c)
      if (m.at(r, c)) {
        cr += r;
        cc += c;
      }
  cr /= static_cast<double>(area);
  cc /= static_cast<double>(area);

  double h3 = m.height / 3.0, w3 = m.width / 3.0;
  if (cr >= h3 && cr < 2 * h3 && cc >= w3 && cc < 2 * w3)
    return SpatialDescriptor::centered;
  bool upper = cr < m.height / 2.0;
  bool left = cc < m.width / 2.0;
  if (upper)
    return left ? SpatialDescriptor::upper_left : SpatialDescriptor::upper_right;
  return left ? SpatialDescriptor::lower_left : SpatialDescriptor::lower_right;
}

namespace {

std::string location_phrase(SpatialDescriptor d) {
  switch (d) {
    case SpatialDescriptor::whole_image: return "spans the entire image";
    case SpatialDescriptor::centered: return "is centered in the image";
    case SpatialDescriptor::upper_left:
      return "is concentrated in the upper-left region";
    case SpatialDescriptor::upper_right:
      return "is concentrated in the upper-right region";
    case SpatialDescriptor::lower_left:
      return "is concentrated in the lower-left region";
    case SpatialDescriptor::lower_right:
      return "is concentrated in the lower-right region";
    case SpatialDescriptor::scattered:
      return "is spread across multiple separate regions";
    case SpatialDescriptor::alignment_failed: return "";
  }
  return "";
}

int area_percent(const MaskArtifact& mask, SpatialDescriptor d) {
  if (d == SpatialDescriptor::whole_image) return 100;
  int pct = static_cast<int>(std::lround(100.0 * mask.mask_area_frac));
  if (mask.mask_area_frac > 0.0 && pct < 1) pct = 1;
  return pct;
}

std::string magnitude_word(double s_struct) {
  if (s_struct < 0.25) return "minor";
  if (s_struct <= 0.55) return "moderate";
  return "substantial";
}

std::string concentration_phrase(double compactness) {
  if (compactness >= 0.7) return "well-concentrated in a single coherent region";
  if (compactness >= 0.4) return "moderately concentrated";
  return "diffuse or split across multiple sub-regions";
}

std::string bin_sentence(Bin bin, double score, double s_instr) {
  std::string tail = " (difficulty score = " + format2(score) +
                     ", instruction complexity = " + format2(s_instr) + ").";
  switch (bin) {
    case Bin::easy:
      return "Overall, this triplet is easier than average to detect, given "
             "clear local geometry and a low-complexity instruction" +
             tail;
    case Bin::medium:
      return "Overall, this triplet is of moderate detection difficulty" + tail;
    case Bin::hard:
      return "Overall, this triplet is harder than average to detect, given "
             "diffuse geometry or a high-complexity instruction" +
             tail;
  }
  return tail;
}

const std::regex& numeral_re() {
  static const std::regex re("[0-9]+(?:\\.[0-9]+)?");
  return re;
}

std::set<std::string> extract_numerals(const std::string& text) {
  std::set<std::string> out;
  for (auto it = std::sregex_iterator(text.begin(), text.end(), numeral_re());
       it != std::sregex_iterator(); ++it)
    out.insert(it->str());
  return out;
}

}  // namespace

ReasoningChain compose_chain(const EditTriplet& triplet,
                             const MaskArtifact& mask,
                             const DifficultyRecord& difficulty,
                             const CategoryRecord& category,
                             const PriorTemplateSet& templates) {
  if (difficulty.scorer_version != ScorerVersion::v2)
    throw DataError("compose_chain: difficulty record for " +
                    triplet.triplet_id + " is not v2");
  auto tmpl = templates.step5.find(category.category);
  if (tmpl == templates.step5.end())
    throw DataError("compose_chain: no template for " +
                    to_string(category.category));

  const SpatialDescriptor desc = spatial_descriptor(mask);
  const bool degraded = desc == SpatialDescriptor::alignment_failed;

  ReasoningChain chain;
  chain.triplet_id = triplet.triplet_id;
  chain.header = {category.category, mask.scope, difficulty.bin, category.source};
  chain.template_version = templates.version;

  chain.steps[0] =
      "1. The edit instruction states: \"" + triplet.instruction + "\".";

  if (degraded) {
    chain.steps[1] =
        "2. The mask of changed pixels could not be computed because image "
        "alignment failed.";
  } else {
    chain.steps[1] = "2. The mask of changed pixels covers roughly " +
                     std::to_string(area_percent(mask, desc)) +
                     "% of the image and " + location_phrase(desc) + ".";
  }

  double compact = 1.0 - difficulty.s_compact.value_or(0.0);
  chain.steps[2] = "3. Structural change relative to the original is " +
                   magnitude_word(difficulty.s_struct) +
                   " (SSIM-based score = " + format2(difficulty.s_struct) +
                   "), and the edit region is " + concentration_phrase(compact) +
                   ".";

  std::string step4 = "4. The edit is classified as " +
                      to_string(category.category) + ", ";
  switch (category.source) {
    case ClassSource::dataset_label:
      step4 += "based on the dataset's curated edit-type label.";
      break;
    case ClassSource::rule_based:
      step4 += "inferred from the instruction text via a rule-based keyword "
               "match (confidence " +
               format2(category.confidence) + ").";
      break;
    case ClassSource::fallback:
      step4 += "could not be determined confidently from the available "
               "signals; treated as an unspecified edit type.";
      break;
  }
  chain.steps[3] = step4;

  chain.steps[4] = "5. " + tmpl->second;

  // Degraded triplets always read as moderate in Step 6 (the header still
  // carries the record's real bin); the caveat marks them for audit.
  std::string step6 =
      "6. " + bin_sentence(degraded ? Bin::medium : difficulty.bin,
                           difficulty.score, difficulty.s_instr);
  if (degraded)
    step6 += " Image alignment failed upstream, so spatial evidence is "
             "unavailable.";
  chain.steps[5] = step6;

  chain.word_count = chain_word_count(chain.steps);
  return chain;
}

int chain_word_count(const std::array<std::string, 6>& steps) {
  int count = 0;
  for (const std::string& s : steps) {
    std::istringstream in(s);
    std::string tok;
    while (in >> tok) ++count;
  }
  return count;
}

std::vector<std::string> audit_chain(const ReasoningChain& chain,
                                     const EditTriplet& triplet,
                                     const MaskArtifact& mask,
                                     const DifficultyRecord& difficulty,
                                     const CategoryRecord& category) {
  std::vector<std::string> violations;

  for (size_t i = 0; i < chain.steps.size(); ++i) {
    std::string want = std::to_string(i + 1) + ". ";
    if (chain.steps[i].rfind(want, 0) != 0)
      violations.push_back("step " + std::to_string(i + 1) +
                           " does not start with its number");
  }

  if (chain.header.category != category.category)
    violations.push_back("header category disagrees with category record");
  if (chain.header.scope != mask.scope)
    violations.push_back("header scope disagrees with mask record");
  if (chain.header.difficulty != difficulty.bin)
    violations.push_back("header difficulty disagrees with difficulty record");
  if (chain.header.source != category.source)
    violations.push_back("header source disagrees with category record");

  // Faithfulness: every numeral in the text must be a rendering of an
  // upstream field (or quoted from the instruction itself).
  std::set<std::string> allowed = {"1", "2", "3", "4", "5", "6"};
  int pct = static_cast<int>(std::lround(100.0 * mask.mask_area_frac));
  if (mask.mask_area_frac > 0.0 && pct < 1) pct = 1;
  allowed.insert(std::to_string(pct));
  if (mask.scope == Scope::global) allowed.insert("100");
  allowed.insert(format2(difficulty.s_struct));
  allowed.insert(format2(difficulty.score));
  allowed.insert(format2(difficulty.s_instr));
  if (category.source == ClassSource::rule_based)
    allowed.insert(format2(category.confidence));
  for (const std::string& n : extract_numerals(triplet.instruction))
    allowed.insert(n);

  for (const std::string& step : chain.steps)
    for (const std::string& n : extract_numerals(step))
      if (!allowed.count(n))
        violations.push_back("numeral " + n + " has no upstream source");

  return violations;
}

}  // namespace editforge::chaincomp
