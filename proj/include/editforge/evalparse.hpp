#pragma once

#include <optional>
#include <string>
#include <vector>

#include "editforge/common.hpp"

namespace editforge::evalparse {

// Outcome of pulling (category, spatial, difficulty bin) out of a model
// generation. Fields the parser could not recover stay empty; notes say why.
struct ParsedFields {
  std::optional<Category> category;
  std::optional<SpatialDescriptor> spatial;
  std::optional<Bin> bin;
  std::vector<std::string> notes;
};

// Tolerant parse of chain-formatted text. The bracketed header wins when
// present and well-formed; otherwise Step 4's "classified as <name>", the
// Step 2 location phrase, and the Step 6 difficulty wording are consulted.
// Steps may be reordered or partially missing.
ParsedFields parse_chain_fields(const std::string& text);

// Finds the first parseable JSON object in the text and reads the keys
// category / scope / difficulty_bin case-insensitively. Values must match the
// enums exactly; anything else leaves the field empty.
ParsedFields parse_label_json(const std::string& text);

struct GoldTriple {
  Category category = Category::other;
  SpatialDescriptor spatial = SpatialDescriptor::centered;
  Bin bin = Bin::medium;
};

struct FieldMetrics {
  size_t n_total = 0;
  size_t n_extracted = 0;
  size_t n_correct = 0;        // unextracted counts as wrong
  double accuracy = 0.0;       // n_correct / n_total
  double extraction_rate = 0.0;  // n_extracted / n_total
  double conditional = 0.0;    // n_correct / n_extracted (0 when none extracted)
};

struct MetricsReport {
  size_t n = 0;
  FieldMetrics category;
  FieldMetrics spatial;
  FieldMetrics bin;
  double joint_accuracy = 0.0;  // all three fields correct / n
};

MetricsReport score_predictions(const std::vector<ParsedFields>& preds,
                                const std::vector<GoldTriple>& gold);

}  // namespace editforge::evalparse
