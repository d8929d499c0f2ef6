#pragma once

#include <map>
#include <optional>
#include <regex>
#include <string>
#include <vector>

#include "editforge/records.hpp"

namespace editforge::taxonomy {

// Curated source-label -> category map (config/picobanana_label_map.toml).
// Startup validation: exactly `expected_count` labels, every one mapped to a
// valid category.
struct LabelMap {
  std::string version;
  std::map<std::string, Category> entries;

  static LabelMap load(const std::string& path);
  static LabelMap load_default();

  std::optional<Category> classify(const std::string& label) const;
};

// Ordered keyword rules (config/category_rules.toml). First match wins.
// Patterns are case-insensitive alternations matched with word boundaries
// against the lowercased instruction.
struct Rule {
  std::string name;
  std::string pattern_text;
  std::regex pattern;
  Category category = Category::other;
  double confidence = 0.0;
  std::string tier;
};

struct RuleSet {
  std::string version;
  std::vector<Rule> rules;  // in file order

  static RuleSet load(const std::string& path);
  static RuleSet load_default();

  const Rule* first_match(const std::string& instruction) const;
};

// Label path (when the triplet carries a "source_edit_type" metadata entry),
// then rule path, then the fallback (other, confidence 0.5, instruction
// preserved).
CategoryRecord classify(const EditTriplet& triplet, const LabelMap& labels,
                        const RuleSet& rules);

struct CoverageReport {
  std::map<Category, size_t> by_category;
  std::map<ClassSource, size_t> by_source;
  size_t total = 0;
  double other_rate = 0.0;
};

CoverageReport coverage_report(const std::vector<CategoryRecord>& records);

}  // namespace editforge::taxonomy
