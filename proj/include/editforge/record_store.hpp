#pragma once

#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "editforge/records.hpp"

namespace editforge::store {

using json = nlohmann::ordered_json;

// Stage names double as subdirectory names and schema-tag prefixes:
// <output_root>/<stage>/<dataset>.jsonl with rows tagged "<schema>/v1".
inline constexpr const char* kStageTriplets = "triplets";
inline constexpr const char* kStageMasks = "masks";
inline constexpr const char* kStageDifficulty = "difficulty";
inline constexpr const char* kStageCategories = "categories";
inline constexpr const char* kStageChains = "chains";

std::string schema_tag_for_stage(const std::string& stage);
std::string stage_file(const std::string& output_root, const std::string& stage,
                       const std::string& dataset);
std::string mask_png_rel_path(const std::string& triplet_id);

json to_json(const EditTriplet& r);
json to_json(const MaskArtifact& r);
json to_json(const DifficultyRecord& r);
json to_json(const CategoryRecord& r);
json to_json(const ReasoningChain& r);

EditTriplet triplet_from_json(const json& j);
MaskArtifact mask_from_json(const json& j);
DifficultyRecord difficulty_from_json(const json& j);
CategoryRecord category_from_json(const json& j);
ReasoningChain chain_from_json(const json& j);

// Sorts by triplet_id, rejects duplicate IDs (DataError naming the ID),
// verifies every row carries the expected schema tag, writes one JSON object
// per line. Returns the number of rows written. Parent directories are
// created as needed.
size_t write_jsonl(const std::string& path, const std::string& schema_tag,
                   std::vector<json> rows);

// Reads a JSONL stage file; every row must parse and carry the expected
// schema tag (DataError otherwise, naming the line).
std::vector<json> read_jsonl(const std::string& path,
                             const std::string& schema_tag);

template <typename T>
size_t write_records(const std::string& path, const std::string& schema_tag,
                     const std::vector<T>& records) {
  std::vector<json> rows;
  rows.reserve(records.size());
  for (const T& r : records) rows.push_back(to_json(r));
  return write_jsonl(path, schema_tag, std::move(rows));
}

std::vector<EditTriplet> read_triplets(const std::string& path);
std::vector<MaskArtifact> read_masks(const std::string& path);
std::vector<DifficultyRecord> read_difficulty(const std::string& path);
std::vector<CategoryRecord> read_categories(const std::string& path);
std::vector<ReasoningChain> read_chains(const std::string& path);

// Inner join over several stage files keyed by triplet_id. `views` holds, per
// surviving ID, the raw row from each input (keyed by stage name); IDs absent
// from at least one input land in `missing` with the list of stages that do
// contain them.
struct JoinResult {
  std::vector<std::string> ids;                       // sorted, survivors
  std::map<std::string, std::map<std::string, json>> views;
  std::map<std::string, std::vector<std::string>> missing;  // id -> stages present
};

JoinResult join_by_id(const std::map<std::string, std::vector<json>>& stages);

}  // namespace editforge::store
