#include "editforge/pipeline.hpp"

#include <omp.h>

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>

#include "editforge/analysis.hpp"
#include "editforge/chaincomp.hpp"
#include "editforge/difficulty.hpp"
#include "editforge/ingest.hpp"
#include "editforge/perceptual_backend.hpp"
#include "editforge/record_store.hpp"
#include "editforge/taxonomy.hpp"
#include "editforge/textcfg.hpp"

namespace fs = std::filesystem;

namespace editforge::pipeline {
namespace {

using store::json;

double now_seconds() {
  using clock = std::chrono::steady_clock;
  return std::chrono::duration<double>(clock::now().time_since_epoch()).count();
}

std::string slurp(const std::string& path, const std::string& needed_by) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw DataError("the " + needed_by + " stage requires " + path +
                    "; run the upstream stage first");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string hash_file(const std::string& path, const std::string& needed_by) {
  return fnv1a64_hex(slurp(path, needed_by));
}

std::string config_dir_of(const RunConfig& cfg) {
  return cfg.config_dir.empty() ? default_config_dir() : cfg.config_dir;
}

std::string stack_name(const std::vector<Signal>& stack) {
  std::string out;
  for (const Signal& s : stack) {
    if (!out.empty()) out += "+";
    out += to_string(s);
  }
  return out;
}

// Cache probe: skip the stage when its manifest matches both hashes and the
// output file is still there.
bool cache_hit(const std::string& manifest_path, const std::string& chash,
               const std::string& ihash, const std::string& out_file,
               json* manifest_out) {
  if (!fs::exists(manifest_path) || !fs::exists(out_file)) return false;
  std::ifstream in(manifest_path);
  json m = json::parse(in, nullptr, false);
  if (m.is_discarded()) return false;
  if (m.value("config_hash", "") != chash) return false;
  if (m.value("input_hash", "") != ihash) return false;
  *manifest_out = std::move(m);
  return true;
}

StageSummary cached_summary(const std::string& stage, const RunConfig& cfg,
                            const json& m, const std::string& out_file) {
  StageSummary s;
  s.stage = stage;
  s.dataset = cfg.dataset;
  s.n_inputs = m.value("n_inputs", 0u);
  s.n_outputs = m.value("n_outputs", 0u);
  s.n_dropped = m.value("n_dropped", 0u);
  s.n_flagged = m.value("n_flagged", 0u);
  s.cached = true;
  s.output_file = out_file;
  s.notes.push_back("cache hit: config and inputs unchanged");
  return s;
}

// Deliberately no timestamps or wall times: manifests are part of the
// deterministic output tree.
void write_manifest(const std::string& manifest_path, const StageSummary& s,
                    const std::string& chash, const std::string& ihash,
                    const std::string& out_rel) {
  json m;
  m["stage"] = s.stage;
  m["dataset"] = s.dataset;
  m["config_hash"] = chash;
  m["input_hash"] = ihash;
  m["n_inputs"] = s.n_inputs;
  m["n_outputs"] = s.n_outputs;
  m["n_dropped"] = s.n_dropped;
  m["n_flagged"] = s.n_flagged;
  m["output_file"] = out_rel;
  fs::create_directories(fs::path(manifest_path).parent_path());
  write_file(manifest_path, m.dump(2) + "\n");
}

void add_notes(StageSummary& s, const std::vector<std::string>& notes,
               size_t cap = 50) {
  for (size_t i = 0; i < notes.size(); ++i) {
    if (i == cap) {
      s.notes.push_back("... and " + std::to_string(notes.size() - cap) +
                        " more");
      break;
    }
    s.notes.push_back(notes[i]);
  }
}

std::string rel_stage_file(const std::string& stage, const std::string& dataset) {
  return stage + "/" + dataset + ".jsonl";
}

}  // namespace

std::string config_hash(const std::map<std::string, std::string>& kv) {
  std::string canon;
  for (const auto& [k, v] : kv) canon += k + "=" + v + "\n";
  return fnv1a64_hex(canon);
}

std::string manifest_path_for(const std::string& output_root,
                              const std::string& stage,
                              const std::string& dataset) {
  return (fs::path(output_root) / "manifests" / (stage + "_" + dataset + ".json"))
      .string();
}

StageSummary run_ingest(const RunConfig& cfg) {
  const double t0 = now_seconds();
  const std::string out_file =
      store::stage_file(cfg.output_root, store::kStageTriplets, cfg.dataset);
  const std::string man_path =
      manifest_path_for(cfg.output_root, store::kStageTriplets, cfg.dataset);

  const IngestOptions& opt = cfg.ingest;
  std::string input_file;
  if (opt.kind == "magicbrush")
    input_file = (fs::path(opt.root) / opt.split / "rows.jsonl").string();
  else
    input_file = opt.manifest;
  if (input_file.empty())
    throw ConfigError("ingest: no source manifest configured for kind '" +
                      opt.kind + "'");

  std::map<std::string, std::string> kv = {
      {"kind", opt.kind},
      {"source", input_file},
      {"root", opt.root},
      {"split", opt.split},
      {"single_turn_only", opt.single_turn_only ? "1" : "0"},
      {"download_missing", opt.download_missing ? "1" : "0"},
      {"max_rows", std::to_string(opt.max_rows)},
  };
  const std::string chash = config_hash(kv);
  const std::string ihash = hash_file(input_file, "ingest");

  json m;
  if (!cfg.force && cache_hit(man_path, chash, ihash, out_file, &m))
    return cached_summary(store::kStageTriplets, cfg, m, out_file);

  ingest::AdapterConfig acfg;
  acfg.dataset_root = opt.root;
  acfg.download_missing = opt.download_missing;
  acfg.single_turn_only = opt.single_turn_only;
  acfg.cache_dir = opt.cache_dir;
  acfg.max_rows = opt.max_rows;

  ingest::IngestResult result;
  if (opt.kind == "picobanana") {
    result = ingest::ingest_picobanana(opt.manifest, acfg);
  } else if (opt.kind == "magicbrush") {
    result = ingest::ingest_magicbrush(opt.root, opt.split, cfg.output_root, acfg);
  } else if (opt.kind == "synthetic") {
    result = ingest::ingest_synthetic(opt.manifest, acfg);
  } else {
    throw ConfigError("ingest: unknown dataset kind '" + opt.kind + "'");
  }

  store::write_records(out_file, store::schema_tag_for_stage(store::kStageTriplets),
                       result.triplets);

  StageSummary s;
  s.stage = store::kStageTriplets;
  s.dataset = cfg.dataset;
  s.n_inputs = result.triplets.size() + result.issues.size();
  s.n_outputs = result.triplets.size();
  s.n_dropped = result.issues.size();
  s.output_file = out_file;
  std::vector<std::string> notes;
  for (const auto& issue : result.issues)
    notes.push_back("line " + std::to_string(issue.lineno) + ": " + issue.reason);
  add_notes(s, notes);
  write_manifest(man_path, s, chash, ihash,
                 rel_stage_file(store::kStageTriplets, cfg.dataset));
  s.wall_seconds = now_seconds() - t0;
  return s;
}

StageSummary run_mask(const RunConfig& cfg) {
  const double t0 = now_seconds();
  const std::string in_file =
      store::stage_file(cfg.output_root, store::kStageTriplets, cfg.dataset);
  const std::string out_file =
      store::stage_file(cfg.output_root, store::kStageMasks, cfg.dataset);
  const std::string man_path =
      manifest_path_for(cfg.output_root, store::kStageMasks, cfg.dataset);

  std::map<std::string, std::string> kv = {
      {"stack", stack_name(cfg.stack)},
      {"tau", analysis::format_shortest(cfg.tau)},
      {"global_area_frac", analysis::format_shortest(cfg.global_area_frac)},
      {"ambiguous_area_frac", analysis::format_shortest(cfg.ambiguous_area_frac)},
      {"opening_radius", std::to_string(cfg.opening_radius)},
      {"max_aspect_dev", analysis::format_shortest(cfg.max_aspect_dev)},
      {"backend", cfg.backend_command.empty() ? "proxy" : cfg.backend_command},
  };
  const std::string chash = config_hash(kv);
  const std::string ihash = hash_file(in_file, "mask");

  json m;
  if (!cfg.force && cache_hit(man_path, chash, ihash, out_file, &m))
    return cached_summary(store::kStageMasks, cfg, m, out_file);

  std::vector<EditTriplet> triplets = store::read_triplets(in_file);
  const int n = static_cast<int>(triplets.size());

  const bool needs_backend =
      std::find(cfg.stack.begin(), cfg.stack.end(), Signal::perceptual) !=
      cfg.stack.end();
  // One backend per worker thread; external backends own a child process
  // each, so they are created lazily by the thread that first needs them.
  std::vector<std::unique_ptr<diffmask::PerceptualBackend>> backends(
      std::max(1, omp_get_max_threads()));

  fs::create_directories(fs::path(cfg.output_root) / "masks_png");

  std::vector<std::optional<MaskArtifact>> results(triplets.size());
  std::vector<std::string> errors(triplets.size());

#pragma omp parallel for schedule(dynamic)
  for (int i = 0; i < n; ++i) {
    try {
      diffmask::MaskConfig mc;
      mc.stack = cfg.stack;
      mc.tau = cfg.tau;
      mc.global_area_frac = cfg.global_area_frac;
      mc.ambiguous_area_frac = cfg.ambiguous_area_frac;
      mc.opening_radius = cfg.opening_radius;
      mc.max_aspect_dev = cfg.max_aspect_dev;
      if (needs_backend) {
        auto& be = backends[static_cast<size_t>(omp_get_thread_num())];
        if (!be) {
          be = cfg.backend_command.empty()
                   ? diffmask::make_proxy_backend()
                   : std::unique_ptr<diffmask::PerceptualBackend>(
                         diffmask::spawn_external_backend(cfg.backend_command));
        }
        mc.backend = be.get();
      }
      ImageU8 real = read_png_rgb(triplets[static_cast<size_t>(i)].real_path);
      ImageU8 edited = read_png_rgb(triplets[static_cast<size_t>(i)].edited_path);
      MaskArtifact art = diffmask::generate_mask(
          triplets[static_cast<size_t>(i)].triplet_id, real, edited, mc);
      if (art.mask && art.mask_path)
        write_png_mask((fs::path(cfg.output_root) / *art.mask_path).string(),
                       *art.mask);
      results[static_cast<size_t>(i)] = std::move(art);
    } catch (const std::exception& e) {
      errors[static_cast<size_t>(i)] = e.what();
    }
  }

  std::vector<MaskArtifact> artifacts;
  std::vector<std::string> notes;
  size_t flagged = 0;
  for (int i = 0; i < n; ++i) {
    if (results[static_cast<size_t>(i)]) {
      if (results[static_cast<size_t>(i)]->scope == Scope::alignment_failed)
        ++flagged;
      artifacts.push_back(std::move(*results[static_cast<size_t>(i)]));
    } else {
      notes.push_back(triplets[static_cast<size_t>(i)].triplet_id + ": " +
                      errors[static_cast<size_t>(i)]);
    }
  }
  store::write_records(out_file, store::schema_tag_for_stage(store::kStageMasks),
                       artifacts);

  StageSummary s;
  s.stage = store::kStageMasks;
  s.dataset = cfg.dataset;
  s.n_inputs = triplets.size();
  s.n_outputs = artifacts.size();
  s.n_dropped = triplets.size() - artifacts.size();
  s.n_flagged = flagged;
  s.output_file = out_file;
  add_notes(s, notes);
  write_manifest(man_path, s, chash, ihash,
                 rel_stage_file(store::kStageMasks, cfg.dataset));
  s.wall_seconds = now_seconds() - t0;
  return s;
}

StageSummary run_difficulty(const RunConfig& cfg) {
  const double t0 = now_seconds();
  const std::string trip_file =
      store::stage_file(cfg.output_root, store::kStageTriplets, cfg.dataset);
  const std::string mask_file =
      store::stage_file(cfg.output_root, store::kStageMasks, cfg.dataset);
  const std::string out_file =
      store::stage_file(cfg.output_root, store::kStageDifficulty, cfg.dataset);
  const std::string man_path =
      manifest_path_for(cfg.output_root, store::kStageDifficulty, cfg.dataset);

  const std::string lexicon_path =
      (fs::path(config_dir_of(cfg)) / "instruction_lexicon.toml").string();
  difficulty::Lexicon lexicon = difficulty::Lexicon::load(lexicon_path);

  const difficulty::WeightsV1 w1;
  const difficulty::WeightsV2 w2;
  std::map<std::string, std::string> kv = {
      {"scorer", to_string(cfg.scorer)},
      {"weights_v1", "0.30,0.30,0.20,0.20"},
      {"weights_v2", "0.55,0.25,0.20"},
      {"lexicon_version", lexicon.version},
      {"lexicon_hash", hash_file(lexicon_path, "difficulty")},
  };
  const std::string chash = config_hash(kv);
  const std::string ihash = hash_file(trip_file, "difficulty") + "+" +
                            hash_file(mask_file, "difficulty");

  json m;
  if (!cfg.force && cache_hit(man_path, chash, ihash, out_file, &m))
    return cached_summary(store::kStageDifficulty, cfg, m, out_file);

  std::vector<EditTriplet> triplets = store::read_triplets(trip_file);
  std::vector<MaskArtifact> masks = store::read_masks(mask_file);
  std::map<std::string, const MaskArtifact*> mask_by_id;
  for (const MaskArtifact& a : masks) mask_by_id[a.triplet_id] = &a;

  // V1 consumes the perceptual mean recorded by the mask stage; refuse to run
  // against a stack that never produced one.
  if (cfg.scorer == ScorerVersion::v1) {
    for (const MaskArtifact& a : masks) {
      if (a.scope == Scope::alignment_failed) continue;
      bool has_perc = false;
      for (const auto& [key, value] : a.per_signal_means)
        if (key.rfind("perceptual", 0) == 0) has_perc = true;
      if (!has_perc)
        throw DataError(
            "difficulty v1 needs a perceptual signal mean, but mask record " +
            a.triplet_id +
            " has none; re-run the mask stage with a stack that includes "
            "perceptual");
    }
  }

  const int n = static_cast<int>(triplets.size());
  std::vector<std::optional<DifficultyRecord>> results(triplets.size());
  std::vector<std::string> errors(triplets.size());

#pragma omp parallel for schedule(dynamic)
  for (int i = 0; i < n; ++i) {
    const EditTriplet& t = triplets[static_cast<size_t>(i)];
    try {
      auto it = mask_by_id.find(t.triplet_id);
      if (it == mask_by_id.end())
        throw DataError("no mask record (dropped upstream?)");
      const MaskArtifact& a = *it->second;

      DifficultyRecord rec;
      rec.triplet_id = t.triplet_id;
      rec.scorer_version = cfg.scorer;
      auto ic = difficulty::instruction_complexity(t.instruction, lexicon);
      rec.s_instr = ic.score;
      if (trim(t.instruction).empty()) rec.flags.push_back("empty_instruction");

      if (a.scope == Scope::alignment_failed) {
        rec.flags.push_back("alignment_failed");
        rec.s_struct = 0.0;
        if (cfg.scorer == ScorerVersion::v2) {
          rec.s_compact = 1.0;
          rec.flags.push_back("degenerate_mask");
        } else {
          rec.s_perc = 0.0;
          rec.s_loc = 1.0;
        }
      } else {
        ImageU8 real = read_png_rgb(t.real_path);
        ImageU8 edited = read_png_rgb(t.edited_path);
        auto aligned = diffmask::align_pair(real, edited, cfg.max_aspect_dev);
        if (!aligned.ok)
          throw DataError("pair no longer aligns (images changed on disk?)");
        rec.s_struct = difficulty::structural_score(aligned.real, aligned.edited);
        if (cfg.scorer == ScorerVersion::v2) {
          if (!a.mask_path) throw DataError("mask record has no mask file");
          MaskGrid grid = read_png_mask(
              (fs::path(cfg.output_root) / *a.mask_path).string());
          double c = difficulty::compactness(grid);
          rec.s_compact = 1.0 - c;
          if (grid.count() == 0) rec.flags.push_back("degenerate_mask");
        } else {
          double perc = 0.0;
          for (const auto& [key, value] : a.per_signal_means)
            if (key.rfind("perceptual", 0) == 0) perc = value;
          rec.s_perc = perc;
          rec.s_loc = 1.0 - a.mask_area_frac;
        }
      }

      rec.score = cfg.scorer == ScorerVersion::v2
                      ? difficulty::score_v2(rec.s_struct, *rec.s_compact,
                                             rec.s_instr, w2)
                      : difficulty::score_v1(rec.s_struct, *rec.s_perc,
                                             *rec.s_loc, rec.s_instr, w1);
      results[static_cast<size_t>(i)] = std::move(rec);
    } catch (const std::exception& e) {
      errors[static_cast<size_t>(i)] = e.what();
    }
  }

  std::vector<DifficultyRecord> records;
  std::vector<std::string> notes;
  for (int i = 0; i < n; ++i) {
    if (results[static_cast<size_t>(i)])
      records.push_back(std::move(*results[static_cast<size_t>(i)]));
    else
      notes.push_back(triplets[static_cast<size_t>(i)].triplet_id + ": " +
                      errors[static_cast<size_t>(i)]);
  }

  // Corpus barrier: tertiles are dataset-internal.
  std::vector<double> scores;
  scores.reserve(records.size());
  for (const DifficultyRecord& r : records) scores.push_back(r.score);
  difficulty::TertileCuts cuts = difficulty::tertile_cuts(scores);
  for (DifficultyRecord& r : records) r.bin = difficulty::bin_for(r.score, cuts);
  if (cuts.degenerate)
    notes.push_back("degenerate score distribution: all scores equal, every "
                    "triplet binned easy");

  store::write_records(
      out_file, store::schema_tag_for_stage(store::kStageDifficulty), records);

  StageSummary s;
  s.stage = store::kStageDifficulty;
  s.dataset = cfg.dataset;
  s.n_inputs = triplets.size();
  s.n_outputs = records.size();
  s.n_dropped = triplets.size() - records.size();
  for (const DifficultyRecord& r : records)
    if (!r.flags.empty()) ++s.n_flagged;
  s.output_file = out_file;
  add_notes(s, notes);
  write_manifest(man_path, s, chash, ihash,
                 rel_stage_file(store::kStageDifficulty, cfg.dataset));
  s.wall_seconds = now_seconds() - t0;
  return s;
}

StageSummary run_category(const RunConfig& cfg) {
  const double t0 = now_seconds();
  const std::string in_file =
      store::stage_file(cfg.output_root, store::kStageTriplets, cfg.dataset);
  const std::string out_file =
      store::stage_file(cfg.output_root, store::kStageCategories, cfg.dataset);
  const std::string man_path =
      manifest_path_for(cfg.output_root, store::kStageCategories, cfg.dataset);

  const std::string labels_path =
      (fs::path(config_dir_of(cfg)) / "picobanana_label_map.toml").string();
  const std::string rules_path =
      (fs::path(config_dir_of(cfg)) / "category_rules.toml").string();
  taxonomy::LabelMap labels = taxonomy::LabelMap::load(labels_path);
  taxonomy::RuleSet rules = taxonomy::RuleSet::load(rules_path);

  std::map<std::string, std::string> kv = {
      {"labels_version", labels.version},
      {"labels_hash", hash_file(labels_path, "category")},
      {"rules_version", rules.version},
      {"rules_hash", hash_file(rules_path, "category")},
  };
  const std::string chash = config_hash(kv);
  const std::string ihash = hash_file(in_file, "category");

  json m;
  if (!cfg.force && cache_hit(man_path, chash, ihash, out_file, &m))
    return cached_summary(store::kStageCategories, cfg, m, out_file);

  std::vector<EditTriplet> triplets = store::read_triplets(in_file);
  const int n = static_cast<int>(triplets.size());
  std::vector<CategoryRecord> records(triplets.size());

#pragma omp parallel for schedule(dynamic)
  for (int i = 0; i < n; ++i)
    records[static_cast<size_t>(i)] =
        taxonomy::classify(triplets[static_cast<size_t>(i)], labels, rules);

  store::write_records(
      out_file, store::schema_tag_for_stage(store::kStageCategories), records);

  taxonomy::CoverageReport cov = taxonomy::coverage_report(records);
  StageSummary s;
  s.stage = store::kStageCategories;
  s.dataset = cfg.dataset;
  s.n_inputs = triplets.size();
  s.n_outputs = records.size();
  s.n_flagged = cov.by_source.count(ClassSource::fallback)
                    ? cov.by_source.at(ClassSource::fallback)
                    : 0;
  s.output_file = out_file;
  {
    char buf[64];
    std::snprintf(buf, sizeof buf, "other rate: %.1f%%", 100.0 * cov.other_rate);
    s.notes.push_back(buf);
  }
  write_manifest(man_path, s, chash, ihash,
                 rel_stage_file(store::kStageCategories, cfg.dataset));
  s.wall_seconds = now_seconds() - t0;
  return s;
}

StageSummary run_chain(const RunConfig& cfg) {
  const double t0 = now_seconds();
  const std::string trip_file =
      store::stage_file(cfg.output_root, store::kStageTriplets, cfg.dataset);
  const std::string mask_file =
      store::stage_file(cfg.output_root, store::kStageMasks, cfg.dataset);
  const std::string diff_file =
      store::stage_file(cfg.output_root, store::kStageDifficulty, cfg.dataset);
  const std::string cat_file =
      store::stage_file(cfg.output_root, store::kStageCategories, cfg.dataset);
  const std::string out_file =
      store::stage_file(cfg.output_root, store::kStageChains, cfg.dataset);
  const std::string man_path =
      manifest_path_for(cfg.output_root, store::kStageChains, cfg.dataset);

  const std::string templates_path =
      (fs::path(config_dir_of(cfg)) / "prior_templates.toml").string();
  chaincomp::PriorTemplateSet templates =
      chaincomp::PriorTemplateSet::load(templates_path);

  std::map<std::string, std::string> kv = {
      {"templates_version", templates.version},
      {"templates_hash", hash_file(templates_path, "chain")},
  };
  const std::string chash = config_hash(kv);
  const std::string ihash =
      hash_file(trip_file, "chain") + "+" + hash_file(mask_file, "chain") + "+" +
      hash_file(diff_file, "chain") + "+" + hash_file(cat_file, "chain");

  json m;
  if (!cfg.force && cache_hit(man_path, chash, ihash, out_file, &m))
    return cached_summary(store::kStageChains, cfg, m, out_file);

  std::vector<EditTriplet> triplets = store::read_triplets(trip_file);
  std::vector<MaskArtifact> masks = store::read_masks(mask_file);
  std::vector<DifficultyRecord> diffs = store::read_difficulty(diff_file);
  std::vector<CategoryRecord> cats = store::read_categories(cat_file);

  std::map<std::string, const MaskArtifact*> mask_by_id;
  for (const MaskArtifact& a : masks) mask_by_id[a.triplet_id] = &a;
  std::map<std::string, const DifficultyRecord*> diff_by_id;
  for (const DifficultyRecord& d : diffs) diff_by_id[d.triplet_id] = &d;
  std::map<std::string, const CategoryRecord*> cat_by_id;
  for (const CategoryRecord& c : cats) cat_by_id[c.triplet_id] = &c;

  const int n = static_cast<int>(triplets.size());
  std::vector<std::optional<ReasoningChain>> results(triplets.size());
  std::vector<std::string> errors(triplets.size());

#pragma omp parallel for schedule(dynamic)
  for (int i = 0; i < n; ++i) {
    const EditTriplet& t = triplets[static_cast<size_t>(i)];
    try {
      std::string missing;
      auto mit = mask_by_id.find(t.triplet_id);
      if (mit == mask_by_id.end()) missing += " masks";
      auto dit = diff_by_id.find(t.triplet_id);
      if (dit == diff_by_id.end()) missing += " difficulty";
      auto cit = cat_by_id.find(t.triplet_id);
      if (cit == cat_by_id.end()) missing += " categories";
      if (!missing.empty())
        throw DataError("missing upstream record(s):" + missing);

      MaskArtifact mask = *mit->second;
      if (mask.scope != Scope::global &&
          mask.scope != Scope::alignment_failed && mask.mask_path)
        mask.mask = read_png_mask(
            (fs::path(cfg.output_root) / *mask.mask_path).string());

      ReasoningChain chain = chaincomp::compose_chain(
          t, mask, *dit->second, *cit->second, templates);
      results[static_cast<size_t>(i)] = std::move(chain);
    } catch (const std::exception& e) {
      errors[static_cast<size_t>(i)] = e.what();
    }
  }

  std::vector<ReasoningChain> chains;
  std::vector<std::string> notes;
  size_t flagged = 0;
  for (int i = 0; i < n; ++i) {
    const EditTriplet& t = triplets[static_cast<size_t>(i)];
    if (!results[static_cast<size_t>(i)]) {
      notes.push_back(t.triplet_id + ": " + errors[static_cast<size_t>(i)]);
      continue;
    }
    ReasoningChain& c = *results[static_cast<size_t>(i)];
    if (c.header.scope == Scope::alignment_failed) {
      ++flagged;
      notes.push_back(t.triplet_id + ": degraded chain (alignment failed)");
    } else if (c.word_count < chaincomp::kWordCountMin ||
               c.word_count > chaincomp::kWordCountMax) {
      ++flagged;
      notes.push_back(t.triplet_id + ": word count " +
                      std::to_string(c.word_count) + " outside [" +
                      std::to_string(chaincomp::kWordCountMin) + "," +
                      std::to_string(chaincomp::kWordCountMax) + "]");
    }
    chains.push_back(std::move(c));
  }

  store::write_records(out_file, store::schema_tag_for_stage(store::kStageChains),
                       chains);

  StageSummary s;
  s.stage = store::kStageChains;
  s.dataset = cfg.dataset;
  s.n_inputs = triplets.size();
  s.n_outputs = chains.size();
  s.n_dropped = triplets.size() - chains.size();
  s.n_flagged = flagged;
  s.output_file = out_file;
  add_notes(s, notes);
  write_manifest(man_path, s, chash, ihash,
                 rel_stage_file(store::kStageChains, cfg.dataset));
  s.wall_seconds = now_seconds() - t0;
  return s;
}

StageSummary run_stage(const std::string& stage, const RunConfig& cfg) {
  if (stage == "ingest") return run_ingest(cfg);
  if (stage == "mask") return run_mask(cfg);
  if (stage == "difficulty") return run_difficulty(cfg);
  if (stage == "category") return run_category(cfg);
  if (stage == "chain") return run_chain(cfg);
  throw ConfigError("unknown stage '" + stage + "'");
}

ReportResult run_report(const RunConfig& cfg) {
  ReportResult rr;
  const fs::path report_dir =
      fs::path(cfg.output_root) / "report" / cfg.dataset;
  fs::create_directories(report_dir);

  auto emit = [&](const std::string& name, const std::string& content) {
    std::string path = (report_dir / name).string();
    write_file(path, content);
    rr.files.push_back(path);
  };

  std::string text;
  text += "dataset: " + cfg.dataset + "\n\n";

  // -- record counts ----------------------------------------------------------
  {
    std::string csv = "stage,rows\n";
    std::string sec = "record counts\n";
    for (const char* stage :
         {store::kStageTriplets, store::kStageMasks, store::kStageDifficulty,
          store::kStageCategories, store::kStageChains}) {
      std::string path = store::stage_file(cfg.output_root, stage, cfg.dataset);
      if (!fs::exists(path)) {
        csv += std::string(stage) + ",missing\n";
        sec += "  " + std::string(stage) + ": missing\n";
        rr.gaps.push_back(std::string(stage) + ": stage file missing");
        continue;
      }
      size_t rows =
          store::read_jsonl(path, store::schema_tag_for_stage(stage)).size();
      csv += std::string(stage) + "," + std::to_string(rows) + "\n";
      sec += "  " + std::string(stage) + ": " + std::to_string(rows) + "\n";
    }
    emit("counts.csv", csv);
    text += sec + "\n";
  }

  // -- scope rates --------------------------------------------------------------
  std::vector<MaskArtifact> masks;
  try {
    masks = store::read_masks(
        store::stage_file(cfg.output_root, store::kStageMasks, cfg.dataset));
    std::map<Scope, size_t> by_scope;
    for (const MaskArtifact& a : masks) by_scope[a.scope]++;
    std::string csv = "scope,count,rate\n";
    std::string sec = "scope rates\n";
    for (Scope sc : {Scope::local, Scope::global, Scope::ambiguous,
                     Scope::alignment_failed}) {
      size_t c = by_scope.count(sc) ? by_scope.at(sc) : 0;
      double rate = masks.empty() ? 0.0
                                  : static_cast<double>(c) /
                                        static_cast<double>(masks.size());
      char pct[32];
      std::snprintf(pct, sizeof pct, "%.1f%%", 100.0 * rate);
      csv += to_string(sc) + "," + std::to_string(c) + "," +
             analysis::format_shortest(rate) + "\n";
      sec += "  " + to_string(sc) + ": " + std::to_string(c) + " (" + pct + ")\n";
    }
    emit("scope_rates.csv", csv);
    text += sec + "\n";
  } catch (const std::exception& e) {
    rr.gaps.push_back(std::string("scope rates: ") + e.what());
  }

  // -- spatial descriptor distribution ------------------------------------------
  try {
    if (masks.empty())
      throw DataError("no mask records");
    std::map<SpatialDescriptor, size_t> by_desc;
    for (const MaskArtifact& rec : masks) {
      MaskArtifact a = rec;
      if (a.scope != Scope::global && a.scope != Scope::alignment_failed &&
          a.mask_path)
        a.mask = read_png_mask(
            (fs::path(cfg.output_root) / *a.mask_path).string());
      by_desc[chaincomp::spatial_descriptor(a)]++;
    }
    std::string csv = "descriptor,count,rate\n";
    std::string sec = "spatial descriptors\n";
    for (SpatialDescriptor d : all_descriptors()) {
      size_t c = by_desc.count(d) ? by_desc.at(d) : 0;
      double rate = static_cast<double>(c) / static_cast<double>(masks.size());
      char pct[32];
      std::snprintf(pct, sizeof pct, "%.1f%%", 100.0 * rate);
      csv += to_string(d) + "," + std::to_string(c) + "," +
             analysis::format_shortest(rate) + "\n";
      sec += "  " + to_string(d) + ": " + std::to_string(c) + " (" + pct + ")\n";
    }
    emit("descriptors.csv", csv);
    text += sec + "\n";
  } catch (const std::exception& e) {
    rr.gaps.push_back(std::string("descriptor distribution: ") + e.what());
  }

  // -- score moments -------------------------------------------------------------
  std::vector<DifficultyRecord> diffs;
  try {
    diffs = store::read_difficulty(store::stage_file(
        cfg.output_root, store::kStageDifficulty, cfg.dataset));
    std::vector<double> scores;
    for (const DifficultyRecord& d : diffs) scores.push_back(d.score);
    analysis::DistributionStats st = analysis::distribution_stats(scores);
    std::string csv = "n,mean,sigma,min,max,p33,p66\n";
    csv += std::to_string(st.n) + "," + analysis::format_shortest(st.mean) +
           "," + analysis::format_shortest(st.sigma) + "," +
           analysis::format_shortest(st.min) + "," +
           analysis::format_shortest(st.max) + "," +
           analysis::format_shortest(st.p33) + "," +
           analysis::format_shortest(st.p66) + "\n";
    emit("score_stats.csv", csv);
    emit("score_histogram.csv", analysis::distribution_csv(st));
    char line[160];
    std::snprintf(line, sizeof line,
                  "difficulty scores\n  n=%zu mean=%.3f sigma=%.3f "
                  "cutoffs=(%.3f, %.3f)\n",
                  st.n, st.mean, st.sigma, st.p33, st.p66);
    text += std::string(line) + "\n";
  } catch (const std::exception& e) {
    rr.gaps.push_back(std::string("score moments: ") + e.what());
  }

  // -- category x bin crosstab ----------------------------------------------------
  std::vector<CategoryRecord> cats;
  try {
    cats = store::read_categories(store::stage_file(
        cfg.output_root, store::kStageCategories, cfg.dataset));
    if (diffs.empty()) throw DataError("no difficulty records to join");
    auto rows = analysis::crosstab(cats, diffs);
    emit("crosstab.csv", analysis::crosstab_csv(rows));
    text += analysis::crosstab_text(rows) + "\n";
  } catch (const std::exception& e) {
    rr.gaps.push_back(std::string("crosstab: ") + e.what());
  }

  // -- classifier coverage ---------------------------------------------------------
  try {
    if (cats.empty()) throw DataError("no category records");
    taxonomy::CoverageReport cov = taxonomy::coverage_report(cats);
    std::string csv = "category,count,share\n";
    std::string sec = "category coverage\n";
    for (Category c : all_categories()) {
      size_t n = cov.by_category.count(c) ? cov.by_category.at(c) : 0;
      double share =
          cov.total ? static_cast<double>(n) / static_cast<double>(cov.total)
                    : 0.0;
      csv += to_string(c) + "," + std::to_string(n) + "," +
             analysis::format_shortest(share) + "\n";
      char pct[32];
      std::snprintf(pct, sizeof pct, "%.1f%%", 100.0 * share);
      sec += "  " + to_string(c) + ": " + std::to_string(n) + " (" + pct + ")\n";
    }
    char other[64];
    std::snprintf(other, sizeof other, "  other rate: %.1f%%\n",
                  100.0 * cov.other_rate);
    emit("categories.csv", csv);
    text += sec + other + "\n";
  } catch (const std::exception& e) {
    rr.gaps.push_back(std::string("coverage: ") + e.what());
  }

  if (!rr.gaps.empty()) {
    text += "gaps\n";
    for (const std::string& g : rr.gaps) text += "  " + g + "\n";
  }
  emit("report.txt", text);
  return rr;
}

}  // namespace editforge::pipeline
