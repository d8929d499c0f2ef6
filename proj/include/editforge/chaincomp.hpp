#pragma once

#include <map>
#include <string>
#include <vector>

#include "editforge/records.hpp"

namespace editforge::chaincomp {

// The per-category Step-5 sentences (config/prior_templates.toml). Each entry
// must begin "Edits of this type typically exhibit"; the loader enforces 12
// entries, one per category.
struct PriorTemplateSet {
  std::string version;
  std::map<Category, std::string> step5;

  static PriorTemplateSet load(const std::string& path);
  static PriorTemplateSet load_default();
};

// Where the changed pixels sit. Global scope -> whole_image; failed alignment
// -> alignment_failed; an empty mask defaults to centered; a mask whose
// largest 8-connected component holds under half the set pixels -> scattered;
// a centroid inside the middle third both ways -> centered; otherwise the
// centroid's quadrant.
SpatialDescriptor spatial_descriptor(const MaskArtifact& artifact);

// Deterministic six-step chain. Requires the mask grid to be loaded for
// non-global scopes and a v2 difficulty record (the concentration wording
// reads s_compact).
ReasoningChain compose_chain(const EditTriplet& triplet,
                             const MaskArtifact& mask,
                             const DifficultyRecord& difficulty,
                             const CategoryRecord& category,
                             const PriorTemplateSet& templates);

// Every numeral in the chain must be a rendering of an upstream field; the
// header must agree with the records; there must be exactly six steps.
// Returns human-readable violations (empty = clean).
std::vector<std::string> audit_chain(const ReasoningChain& chain,
                                     const EditTriplet& triplet,
                                     const MaskArtifact& mask,
                                     const DifficultyRecord& difficulty,
                                     const CategoryRecord& category);

// Whitespace-delimited token count across the six steps.
int chain_word_count(const std::array<std::string, 6>& steps);

inline constexpr int kWordCountMin = 60;
inline constexpr int kWordCountMax = 170;

}  // namespace editforge::chaincomp
