#include "editforge/taxonomy.hpp"

#include "editforge/common.hpp"
#include "editforge/textcfg.hpp"

namespace editforge::taxonomy {

LabelMap LabelMap::load(const std::string& path) {
  CfgFile cfg = load_cfg(path);
  LabelMap map;
  map.version = cfg.version;
  const CfgSection* sec = cfg.find("labels");
  if (!sec) throw ConfigError(path + ": missing [labels] section");
  for (const CfgLine& line : sec->items) {
    size_t arrow = line.text.find("=>");
    if (arrow == std::string::npos)
      throw ConfigError(path + ":" + std::to_string(line.lineno) +
                        ": expected `label => category`");
    std::string label = trim(line.text.substr(0, arrow));
    std::string cat_name = trim(line.text.substr(arrow + 2));
    auto cat = parse_category(cat_name);
    if (!cat)
      throw ConfigError(path + ":" + std::to_string(line.lineno) +
                        ": unknown category " + cat_name);
    if (!map.entries.emplace(label, *cat).second)
      throw ConfigError(path + ":" + std::to_string(line.lineno) +
                        ": duplicate label " + label);
  }
  auto it = cfg.top_kv.find("expected_count");
  if (it == cfg.top_kv.end())
    throw ConfigError(path + ": missing expected_count");
  size_t expected = std::stoul(it->second);
  if (map.entries.size() != expected)
    throw ConfigError(path + ": has " + std::to_string(map.entries.size()) +
                      " labels, expected_count says " + it->second);
  return map;
}

LabelMap LabelMap::load_default() {
  return load(default_config_dir() + "/picobanana_label_map.toml");
}

std::optional<Category> LabelMap::classify(const std::string& label) const {
  auto it = entries.find(trim(label));
  if (it == entries.end()) return std::nullopt;
  return it->second;
}

namespace {

// "a|b c|d" -> \b(?:a)\b|\b(?:b c)\b|\b(?:d)\b
std::regex build_pattern(const std::string& alternatives) {
  std::string rx;
  for (const std::string& alt : split(alternatives, '|')) {
    std::string a = trim(alt);
    if (a.empty()) continue;
    if (!rx.empty()) rx += "|";
    rx += "\\b(?:" + a + ")\\b";
  }
  return std::regex(rx, std::regex::ECMAScript);
}

}  // namespace

RuleSet RuleSet::load(const std::string& path) {
  CfgFile cfg = load_cfg(path);
  RuleSet rs;
  rs.version = cfg.version;
  for (const CfgSection& sec : cfg.sections) {
    if (sec.name.rfind("tier ", 0) != 0)
      throw ConfigError(path + ": unexpected section [" + sec.name + "]");
    std::string tier = sec.name.substr(5);
    for (const CfgLine& line : sec.items) {
      auto parts = split(line.text, '|');
      // name | alt1|alt2|... | category | confidence  -- the pattern field
      // itself may contain '|', so take name from the front and the last two
      // fields from the back.
      if (parts.size() < 4)
        throw ConfigError(path + ":" + std::to_string(line.lineno) +
                          ": expected `name | pattern | category | confidence`");
      Rule r;
      r.tier = tier;
      r.name = trim(parts.front());
      r.confidence = std::stod(trim(parts.back()));
      auto cat = parse_category(trim(parts[parts.size() - 2]));
      if (!cat)
        throw ConfigError(path + ":" + std::to_string(line.lineno) +
                          ": unknown category " + trim(parts[parts.size() - 2]));
      r.category = *cat;
      std::string pattern;
      for (size_t i = 1; i + 2 < parts.size(); ++i) {
        if (!pattern.empty()) pattern += "|";
        pattern += trim(parts[i]);
      }
      r.pattern_text = pattern;
      r.pattern = build_pattern(lower(pattern));
      if (r.confidence <= 0.0 || r.confidence > 1.0)
        throw ConfigError(path + ":" + std::to_string(line.lineno) +
                          ": confidence out of (0,1]");
      rs.rules.push_back(std::move(r));
    }
  }
  if (rs.rules.empty()) throw ConfigError(path + ": no rules");
  return rs;
}

RuleSet RuleSet::load_default() {
  return load(default_config_dir() + "/category_rules.toml");
}

const Rule* RuleSet::first_match(const std::string& instruction) const {
  std::string text = lower(instruction);
  for (const Rule& r : rules)
    if (std::regex_search(text, r.pattern)) return &r;
  return nullptr;
}

CategoryRecord classify(const EditTriplet& triplet, const LabelMap& labels,
                        const RuleSet& rules) {
  CategoryRecord rec;
  rec.triplet_id = triplet.triplet_id;
  rec.classifier_version =
      "labels/" + labels.version + "+rules/" + rules.version;

  auto meta = triplet.metadata.find("source_edit_type");
  if (meta != triplet.metadata.end() && !trim(meta->second).empty()) {
    if (auto cat = labels.classify(meta->second)) {
      rec.category = *cat;
      rec.source = ClassSource::dataset_label;
      rec.confidence = 1.0;
      rec.raw_label_or_match = trim(meta->second);
      return rec;
    }
    // Unknown curated label: fall through to the rule path rather than
    // trusting a string the map has never seen.
  }

  if (const Rule* r = rules.first_match(triplet.instruction)) {
    rec.category = r->category;
    rec.source = ClassSource::rule_based;
    rec.confidence = r->confidence;
    rec.raw_label_or_match = r->name;
    return rec;
  }

  rec.category = Category::other;
  rec.source = ClassSource::fallback;
  rec.confidence = 0.5;
  rec.raw_label_or_match = triplet.instruction;
  return rec;
}

CoverageReport coverage_report(const std::vector<CategoryRecord>& records) {
  CoverageReport rep;
  rep.total = records.size();
  for (const CategoryRecord& r : records) {
    ++rep.by_category[r.category];
    ++rep.by_source[r.source];
  }
  if (rep.total > 0)
    rep.other_rate = static_cast<double>(rep.by_category[Category::other]) /
                     static_cast<double>(rep.total);
  return rep;
}

}  // namespace editforge::taxonomy
