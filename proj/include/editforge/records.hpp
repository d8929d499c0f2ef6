#pragma once

#include <array>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "editforge/common.hpp"
#include "editforge/image.hpp"

namespace editforge {

// One source edit pair plus its instruction, normalized across datasets.
struct EditTriplet {
  std::string triplet_id;
  std::string real_path;
  std::string edited_path;
  std::string instruction;
  std::optional<std::string> provided_mask_path;  // dataset ground truth, if any
  SourceDataset source_dataset = SourceDataset::synthetic;
  std::map<std::string, std::string> metadata;
};

// Output of the differencing stage. The pixel grid itself lives in a PNG next
// to the record file; `mask` is populated only while in memory.
struct MaskArtifact {
  std::string triplet_id;
  Scope scope = Scope::ambiguous;
  std::optional<std::string> mask_path;  // relative to the output root
  double mask_area_frac = 0.0;
  double combined_diff_mean = 0.0;
  std::map<std::string, double> per_signal_means;  // key carries backend identity
  std::vector<std::string> signal_stack;
  std::optional<double> otsu_threshold_used;
  int routing_path = 0;  // 1 = mean-vs-tau shortcut, 2 = threshold+morphology, 0 = none
  std::vector<std::string> flags;
  std::optional<MaskGrid> mask;  // transient, never serialized
};

// Difficulty components + final score. Only the fields belonging to the
// scorer version are populated (and serialized).
struct DifficultyRecord {
  std::string triplet_id;
  ScorerVersion scorer_version = ScorerVersion::v2;
  double s_struct = 0.0;
  std::optional<double> s_perc;     // v1
  std::optional<double> s_loc;      // v1
  std::optional<double> s_compact;  // v2
  double s_instr = 0.0;
  double score = 0.0;
  Bin bin = Bin::medium;
  std::vector<std::string> flags;
};

struct CategoryRecord {
  std::string triplet_id;
  Category category = Category::other;
  ClassSource source = ClassSource::fallback;
  double confidence = 0.0;
  std::string raw_label_or_match;  // source label text, or rule name
  std::string classifier_version;
};

struct ChainHeader {
  Category category = Category::other;
  Scope scope = Scope::local;
  Bin difficulty = Bin::medium;
  ClassSource source = ClassSource::fallback;
};

struct ReasoningChain {
  std::string triplet_id;
  ChainHeader header;
  std::array<std::string, 6> steps;
  std::string template_version;
  int word_count = 0;

  // Header line + the six numbered steps, one per line.
  std::string render() const;
};

std::string render_chain_header(const ChainHeader& h);

}  // namespace editforge
