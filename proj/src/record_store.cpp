#include "editforge/record_store.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>

namespace editforge::store {

namespace fs = std::filesystem;

std::string schema_tag_for_stage(const std::string& stage) {
  if (stage == kStageTriplets) return "triplet/v1";
  if (stage == kStageMasks) return "mask/v1";
  if (stage == kStageDifficulty) return "difficulty/v1";
  if (stage == kStageCategories) return "category/v1";
  if (stage == kStageChains) return "chain/v1";
  throw DataError("unknown stage: " + stage);
}

std::string stage_file(const std::string& output_root, const std::string& stage,
                       const std::string& dataset) {
  return output_root + "/" + stage + "/" + dataset + ".jsonl";
}

std::string mask_png_rel_path(const std::string& triplet_id) {
  return "masks_png/" + triplet_id + ".png";
}

namespace {

std::string require_string(const json& j, const char* key) {
  if (!j.contains(key) || !j[key].is_string())
    throw DataError(std::string("record missing string field: ") + key);
  return j[key].get<std::string>();
}

double require_number(const json& j, const char* key) {
  if (!j.contains(key) || !j[key].is_number())
    throw DataError(std::string("record missing numeric field: ") + key);
  return j[key].get<double>();
}

template <typename T>
T require_enum(const json& j, const char* key,
               std::optional<T> (*parse)(const std::string&)) {
  auto v = parse(require_string(j, key));
  if (!v) throw DataError(std::string("bad enum value in field: ") + key);
  return *v;
}

std::vector<std::string> get_string_list(const json& j, const char* key) {
  std::vector<std::string> out;
  if (j.contains(key) && j[key].is_array())
    for (const auto& e : j[key]) out.push_back(e.get<std::string>());
  return out;
}

}  // namespace

json to_json(const EditTriplet& r) {
  json j;
  j["schema"] = "triplet/v1";
  j["triplet_id"] = r.triplet_id;
  j["real_path"] = r.real_path;
  j["edited_path"] = r.edited_path;
  j["instruction"] = r.instruction;
  j["provided_mask_path"] =
      r.provided_mask_path ? json(*r.provided_mask_path) : json(nullptr);
  j["source_dataset"] = to_string(r.source_dataset);
  json meta = json::object();
  for (const auto& [k, v] : r.metadata) meta[k] = v;  // std::map: sorted keys
  j["metadata"] = meta;
  return j;
}

EditTriplet triplet_from_json(const json& j) {
  EditTriplet r;
  r.triplet_id = require_string(j, "triplet_id");
  r.real_path = require_string(j, "real_path");
  r.edited_path = require_string(j, "edited_path");
  r.instruction = require_string(j, "instruction");
  if (j.contains("provided_mask_path") && j["provided_mask_path"].is_string())
    r.provided_mask_path = j["provided_mask_path"].get<std::string>();
  r.source_dataset = require_enum(j, "source_dataset", parse_source_dataset);
  if (j.contains("metadata") && j["metadata"].is_object())
    for (auto it = j["metadata"].begin(); it != j["metadata"].end(); ++it)
      r.metadata[it.key()] = it.value().get<std::string>();
  return r;
}

json to_json(const MaskArtifact& r) {
  json j;
  j["schema"] = "mask/v1";
  j["triplet_id"] = r.triplet_id;
  j["scope"] = to_string(r.scope);
  j["mask_path"] = r.mask_path ? json(*r.mask_path) : json(nullptr);
  j["mask_area_frac"] = r.mask_area_frac;
  j["combined_diff_mean"] = r.combined_diff_mean;
  json means = json::object();
  for (const auto& [k, v] : r.per_signal_means) means[k] = v;
  j["per_signal_means"] = means;
  j["signal_stack"] = r.signal_stack;
  j["otsu_threshold_used"] =
      r.otsu_threshold_used ? json(*r.otsu_threshold_used) : json(nullptr);
  j["routing_path"] = r.routing_path == 0 ? json(nullptr) : json(r.routing_path);
  j["flags"] = r.flags;
  return j;
}

MaskArtifact mask_from_json(const json& j) {
  MaskArtifact r;
  r.triplet_id = require_string(j, "triplet_id");
  r.scope = require_enum(j, "scope", parse_scope);
  if (j.contains("mask_path") && j["mask_path"].is_string())
    r.mask_path = j["mask_path"].get<std::string>();
  r.mask_area_frac = require_number(j, "mask_area_frac");
  r.combined_diff_mean = require_number(j, "combined_diff_mean");
  if (j.contains("per_signal_means") && j["per_signal_means"].is_object())
    for (auto it = j["per_signal_means"].begin(); it != j["per_signal_means"].end(); ++it)
      r.per_signal_means[it.key()] = it.value().get<double>();
  r.signal_stack = get_string_list(j, "signal_stack");
  if (j.contains("otsu_threshold_used") && j["otsu_threshold_used"].is_number())
    r.otsu_threshold_used = j["otsu_threshold_used"].get<double>();
  if (j.contains("routing_path") && j["routing_path"].is_number_integer())
    r.routing_path = j["routing_path"].get<int>();
  r.flags = get_string_list(j, "flags");
  return r;
}

json to_json(const DifficultyRecord& r) {
  json j;
  j["schema"] = "difficulty/v1";
  j["triplet_id"] = r.triplet_id;
  j["scorer_version"] = to_string(r.scorer_version);
  j["s_struct"] = r.s_struct;
  if (r.scorer_version == ScorerVersion::v1) {
    j["s_perc"] = r.s_perc.value_or(0.0);
    j["s_loc"] = r.s_loc.value_or(0.0);
  } else {
    j["s_compact"] = r.s_compact.value_or(0.0);
  }
  j["s_instr"] = r.s_instr;
  j["score"] = r.score;
  j["bin"] = to_string(r.bin);
  j["flags"] = r.flags;
  return j;
}

DifficultyRecord difficulty_from_json(const json& j) {
  DifficultyRecord r;
  r.triplet_id = require_string(j, "triplet_id");
  r.scorer_version = require_enum(j, "scorer_version", parse_scorer_version);
  r.s_struct = require_number(j, "s_struct");
  if (r.scorer_version == ScorerVersion::v1) {
    r.s_perc = require_number(j, "s_perc");
    r.s_loc = require_number(j, "s_loc");
  } else {
    r.s_compact = require_number(j, "s_compact");
  }
  r.s_instr = require_number(j, "s_instr");
  r.score = require_number(j, "score");
  r.bin = require_enum(j, "bin", parse_bin);
  r.flags = get_string_list(j, "flags");
  return r;
}

json to_json(const CategoryRecord& r) {
  json j;
  j["schema"] = "category/v1";
  j["triplet_id"] = r.triplet_id;
  j["category"] = to_string(r.category);
  j["source"] = to_string(r.source);
  j["confidence"] = r.confidence;
  j["raw_label_or_match"] = r.raw_label_or_match;
  j["classifier_version"] = r.classifier_version;
  return j;
}

CategoryRecord category_from_json(const json& j) {
  CategoryRecord r;
  r.triplet_id = require_string(j, "triplet_id");
  r.category = require_enum(j, "category", parse_category);
  r.source = require_enum(j, "source", parse_class_source);
  r.confidence = require_number(j, "confidence");
  r.raw_label_or_match = require_string(j, "raw_label_or_match");
  r.classifier_version = require_string(j, "classifier_version");
  return r;
}

json to_json(const ReasoningChain& r) {
  json j;
  j["schema"] = "chain/v1";
  j["triplet_id"] = r.triplet_id;
  j["category"] = to_string(r.header.category);
  j["scope"] = to_string(r.header.scope);
  j["difficulty"] = to_string(r.header.difficulty);
  j["source"] = to_string(r.header.source);
  j["steps"] = r.steps;
  j["template_version"] = r.template_version;
  j["word_count"] = r.word_count;
  return j;
}

ReasoningChain chain_from_json(const json& j) {
  ReasoningChain r;
  r.triplet_id = require_string(j, "triplet_id");
  r.header.category = require_enum(j, "category", parse_category);
  r.header.scope = require_enum(j, "scope", parse_scope);
  r.header.difficulty = require_enum(j, "difficulty", parse_bin);
  r.header.source = require_enum(j, "source", parse_class_source);
  if (!j.contains("steps") || !j["steps"].is_array() || j["steps"].size() != 6)
    throw DataError("chain record must carry exactly 6 steps");
  for (size_t i = 0; i < 6; ++i) r.steps[i] = j["steps"][i].get<std::string>();
  r.template_version = require_string(j, "template_version");
  r.word_count = j.value("word_count", 0);
  return r;
}

size_t write_jsonl(const std::string& path, const std::string& schema_tag,
                   std::vector<json> rows) {
  std::stable_sort(rows.begin(), rows.end(), [](const json& a, const json& b) {
    return a.at("triplet_id").get<std::string>() <
           b.at("triplet_id").get<std::string>();
  });
  std::set<std::string> seen;
  for (const json& r : rows) {
    if (r.at("schema").get<std::string>() != schema_tag)
      throw DataError("row schema " + r.at("schema").get<std::string>() +
                      " does not match " + schema_tag);
    const std::string id = r.at("triplet_id").get<std::string>();
    if (!seen.insert(id).second)
      throw DataError("duplicate triplet_id: " + id);
  }
  fs::path p(path);
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path);
  for (const json& r : rows) out << r.dump() << "\n";
  if (!out) throw DataError("short write to " + path);
  return rows.size();
}

std::vector<json> read_jsonl(const std::string& path,
                             const std::string& schema_tag) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read " + path);
  std::vector<json> rows;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded())
      throw DataError(path + ":" + std::to_string(lineno) + ": malformed JSON");
    if (!j.contains("schema") || j["schema"].get<std::string>() != schema_tag)
      throw DataError(path + ":" + std::to_string(lineno) +
                      ": schema tag mismatch, expected " + schema_tag);
    rows.push_back(std::move(j));
  }
  return rows;
}

namespace {
template <typename T>
std::vector<T> read_typed(const std::string& path, const std::string& tag,
                          T (*from)(const json&)) {
  std::vector<T> out;
  for (const json& j : read_jsonl(path, tag)) out.push_back(from(j));
  return out;
}
}  // namespace

std::vector<EditTriplet> read_triplets(const std::string& path) {
  return read_typed<EditTriplet>(path, "triplet/v1", triplet_from_json);
}
std::vector<MaskArtifact> read_masks(const std::string& path) {
  return read_typed<MaskArtifact>(path, "mask/v1", mask_from_json);
}
std::vector<DifficultyRecord> read_difficulty(const std::string& path) {
  return read_typed<DifficultyRecord>(path, "difficulty/v1", difficulty_from_json);
}
std::vector<CategoryRecord> read_categories(const std::string& path) {
  return read_typed<CategoryRecord>(path, "category/v1", category_from_json);
}
std::vector<ReasoningChain> read_chains(const std::string& path) {
  return read_typed<ReasoningChain>(path, "chain/v1", chain_from_json);
}

JoinResult join_by_id(const std::map<std::string, std::vector<json>>& stages) {
  JoinResult out;
  std::map<std::string, std::map<std::string, json>> by_id;
  for (const auto& [stage, rows] : stages)
    for (const json& r : rows)
      by_id[r.at("triplet_id").get<std::string>()][stage] = r;
  for (auto& [id, view] : by_id) {
    if (view.size() == stages.size()) {
      out.ids.push_back(id);
      out.views[id] = view;
    } else {
      std::vector<std::string> present;
      for (const auto& [stage, _] : view) present.push_back(stage);
      out.missing[id] = present;
    }
  }
  return out;
}

}  // namespace editforge::store
