#include "editforge/evalparse.hpp"

#include <map>
#include <regex>
#include <sstream>

#include <nlohmann/json.hpp>

namespace editforge::evalparse {

namespace {

struct HeaderFields {
  std::optional<Category> category;
  std::optional<Scope> scope;
  std::optional<Bin> bin;
};

std::optional<HeaderFields> parse_header(const std::string& text) {
  static const std::regex re(
      "\\[category=([a-z_]+), scope=([a-z_]+), difficulty=([a-z_]+), "
      "source=([a-z_]+)\\]");
  std::smatch m;
  if (!std::regex_search(text, m, re)) return std::nullopt;
  HeaderFields h;
  h.category = parse_category(m[1].str());
  h.scope = parse_scope(m[2].str());
  h.bin = parse_bin(m[3].str());
  if (!h.category && !h.scope && !h.bin) return std::nullopt;
  return h;
}

// Collects "N. content" lines (leading whitespace tolerated, any order,
// first occurrence of each number wins).
std::map<int, std::string> collect_steps(const std::string& text) {
  std::map<int, std::string> steps;
  std::istringstream in(text);
  std::string line;
  static const std::regex re("^\\s*([1-6])\\.\\s*(.*)$");
  while (std::getline(in, line)) {
    std::smatch m;
    if (std::regex_match(line, m, re))
      steps.emplace(std::stoi(m[1].str()), m[2].str());
  }
  return steps;
}

const std::vector<std::pair<std::string, SpatialDescriptor>>& phrase_table() {
  static const std::vector<std::pair<std::string, SpatialDescriptor>> t = {
      {"spans the entire image", SpatialDescriptor::whole_image},
      {"is centered in the image", SpatialDescriptor::centered},
      {"concentrated in the upper-left region", SpatialDescriptor::upper_left},
      {"concentrated in the upper-right region", SpatialDescriptor::upper_right},
      {"concentrated in the lower-left region", SpatialDescriptor::lower_left},
      {"concentrated in the lower-right region", SpatialDescriptor::lower_right},
      {"spread across multiple separate regions", SpatialDescriptor::scattered},
      {"could not be computed because image alignment failed",
       SpatialDescriptor::alignment_failed},
  };
  return t;
}

std::optional<SpatialDescriptor> spatial_from_text(const std::string& text) {
  for (const auto& [phrase, desc] : phrase_table())
    if (text.find(phrase) != std::string::npos) return desc;
  return std::nullopt;
}

std::optional<Bin> bin_from_text(const std::string& text) {
  if (text.find("easier than average") != std::string::npos) return Bin::easy;
  if (text.find("harder than average") != std::string::npos) return Bin::hard;
  if (text.find("moderate detection difficulty") != std::string::npos)
    return Bin::medium;
  return std::nullopt;
}

std::optional<Category> category_from_text(const std::string& text) {
  static const std::regex re("classified as ([a-z_]+)");
  std::smatch m;
  if (!std::regex_search(text, m, re)) return std::nullopt;
  return parse_category(m[1].str());
}

}  // namespace

ParsedFields parse_chain_fields(const std::string& text) {
  ParsedFields out;
  auto header = parse_header(text);
  auto steps = collect_steps(text);

  if (header && header->category) {
    out.category = header->category;
  } else {
    auto it = steps.find(4);
    out.category = category_from_text(it != steps.end() ? it->second : text);
    if (out.category) out.notes.push_back("category from step text");
  }
  if (!out.category) out.notes.push_back("category unextractable");

  {
    auto it = steps.find(2);
    out.spatial = spatial_from_text(it != steps.end() ? it->second : text);
    if (!out.spatial && it != steps.end())
      out.spatial = spatial_from_text(text);  // phrase drifted to another line
    if (!out.spatial && header && header->scope) {
      // Scope pins the descriptor only where the mapping is one-to-one.
      if (*header->scope == Scope::global)
        out.spatial = SpatialDescriptor::whole_image;
      else if (*header->scope == Scope::alignment_failed)
        out.spatial = SpatialDescriptor::alignment_failed;
      if (out.spatial) out.notes.push_back("spatial from header scope");
    }
  }
  if (!out.spatial) out.notes.push_back("spatial unextractable");

  if (header && header->bin) {
    out.bin = header->bin;
  } else {
    auto it = steps.find(6);
    out.bin = bin_from_text(it != steps.end() ? it->second : text);
    if (out.bin) out.notes.push_back("bin from step text");
  }
  if (!out.bin) out.notes.push_back("bin unextractable");
  return out;
}

ParsedFields parse_label_json(const std::string& text) {
  ParsedFields out;
  using json = nlohmann::json;
  json obj;
  bool found = false;
  for (size_t start = text.find('{'); start != std::string::npos;
       start = text.find('{', start + 1)) {
    // Walk to the matching brace, respecting strings.
    int depth = 0;
    bool in_str = false;
    for (size_t i = start; i < text.size(); ++i) {
      char c = text[i];
      if (in_str) {
        if (c == '\\')
          ++i;
        else if (c == '"')
          in_str = false;
        continue;
      }
      if (c == '"') in_str = true;
      if (c == '{') ++depth;
      if (c == '}') {
        --depth;
        if (depth == 0) {
          json candidate =
              json::parse(text.substr(start, i - start + 1), nullptr, false);
          if (!candidate.is_discarded() && candidate.is_object()) {
            obj = std::move(candidate);
            found = true;
          }
          break;
        }
      }
    }
    if (found) break;
  }
  if (!found) {
    out.notes.push_back("no JSON object found");
    return out;
  }

  std::string cat_v, scope_v, bin_v;
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (!it.value().is_string()) continue;
    std::string key = lower(it.key());
    if (key == "category")
      cat_v = it.value().get<std::string>();
    else if (key == "scope")
      scope_v = it.value().get<std::string>();
    else if (key == "difficulty_bin")
      bin_v = it.value().get<std::string>();
  }
  out.category = parse_category(cat_v);
  if (!out.category)
    out.notes.push_back(cat_v.empty() ? "category key missing"
                                      : "unknown category value");
  out.spatial = parse_spatial(scope_v);
  if (!out.spatial)
    out.notes.push_back(scope_v.empty() ? "scope key missing"
                                        : "unknown scope value");
  out.bin = parse_bin(bin_v);
  if (!out.bin)
    out.notes.push_back(bin_v.empty() ? "difficulty_bin key missing"
                                      : "unknown difficulty_bin value");
  return out;
}

namespace {

template <typename T>
void tally(FieldMetrics& m, const std::optional<T>& pred, const T& gold) {
  ++m.n_total;
  if (pred) {
    ++m.n_extracted;
    if (*pred == gold) ++m.n_correct;
  }
}

void finish(FieldMetrics& m) {
  if (m.n_total == 0) return;
  m.accuracy = static_cast<double>(m.n_correct) / static_cast<double>(m.n_total);
  m.extraction_rate =
      static_cast<double>(m.n_extracted) / static_cast<double>(m.n_total);
  m.conditional = m.n_extracted == 0 ? 0.0
                                     : static_cast<double>(m.n_correct) /
                                           static_cast<double>(m.n_extracted);
}

}  // namespace

MetricsReport score_predictions(const std::vector<ParsedFields>& preds,
                                const std::vector<GoldTriple>& gold) {
  if (preds.size() != gold.size())
    throw DataError("score_predictions: size mismatch (" +
                    std::to_string(preds.size()) + " predictions vs " +
                    std::to_string(gold.size()) + " references)");
  MetricsReport rep;
  rep.n = preds.size();
  size_t joint = 0;
  for (size_t i = 0; i < preds.size(); ++i) {
    tally(rep.category, preds[i].category, gold[i].category);
    tally(rep.spatial, preds[i].spatial, gold[i].spatial);
    tally(rep.bin, preds[i].bin, gold[i].bin);
    bool all = preds[i].category && *preds[i].category == gold[i].category &&
               preds[i].spatial && *preds[i].spatial == gold[i].spatial &&
               preds[i].bin && *preds[i].bin == gold[i].bin;
    if (all) ++joint;
  }
  finish(rep.category);
  finish(rep.spatial);
  finish(rep.bin);
  if (rep.n > 0)
    rep.joint_accuracy = static_cast<double>(joint) / static_cast<double>(rep.n);
  return rep;
}

}  // namespace editforge::evalparse
