#include <omp.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "editforge/analysis.hpp"
#include "editforge/chaincomp.hpp"
#include "editforge/common.hpp"
#include "editforge/evalparse.hpp"
#include "editforge/pipeline.hpp"
#include "editforge/record_store.hpp"
#include "editforge/synthoracle.hpp"
#include "editforge/textcfg.hpp"

namespace fs = std::filesystem;
using namespace editforge;

namespace {

// Layered configuration: defaults <- config file <- --set overrides <- flags.
// The file and the overrides share one dotted-key vocabulary.
std::map<std::string, std::string> read_kv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  std::map<std::string, std::string> kv;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    auto eq = t.find('=');
    if (eq == std::string::npos)
      throw ConfigError(path + ":" + std::to_string(lineno) +
                        ": expected key=value");
    std::string key = trim(t.substr(0, eq));
    std::string value = trim(t.substr(eq + 1));
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"')
      value = value.substr(1, value.size() - 2);
    kv[key] = value;
  }
  return kv;
}

bool parse_bool(const std::string& key, const std::string& v) {
  std::string s = lower(trim(v));
  if (s == "1" || s == "true" || s == "yes" || s == "on") return true;
  if (s == "0" || s == "false" || s == "no" || s == "off") return false;
  throw ConfigError(key + ": expected a boolean, got '" + v + "'");
}

double parse_real(const std::string& key, const std::string& v) {
  try {
    size_t pos = 0;
    double d = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw ConfigError(key + ": expected a number, got '" + v + "'");
  }
}

int parse_int(const std::string& key, const std::string& v) {
  try {
    size_t pos = 0;
    int i = std::stoi(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return i;
  } catch (const std::exception&) {
    throw ConfigError(key + ": expected an integer, got '" + v + "'");
  }
}

std::vector<Signal> parse_stack(const std::string& text) {
  std::vector<Signal> stack;
  std::string normalized = text;
  for (char& c : normalized)
    if (c == ',') c = '+';
  for (const std::string& tok : split(normalized, '+')) {
    std::string t = trim(tok);
    if (t.empty()) continue;
    auto s = parse_signal(t);
    if (!s) throw ConfigError("unknown signal '" + t + "' in stack");
    stack.push_back(*s);
  }
  if (stack.empty()) throw ConfigError("signal stack is empty");
  return stack;
}

void apply_kv(pipeline::RunConfig& cfg, const std::string& key,
              const std::string& value) {
  if (key == "dataset") cfg.dataset = value;
  else if (key == "paths.output_root") cfg.output_root = value;
  else if (key == "paths.config_dir") cfg.config_dir = value;
  else if (key == "ingest.kind") cfg.ingest.kind = value;
  else if (key == "ingest.manifest") cfg.ingest.manifest = value;
  else if (key == "ingest.root") cfg.ingest.root = value;
  else if (key == "ingest.split") cfg.ingest.split = value;
  else if (key == "ingest.single_turn_only")
    cfg.ingest.single_turn_only = parse_bool(key, value);
  else if (key == "ingest.download_missing")
    cfg.ingest.download_missing = parse_bool(key, value);
  else if (key == "ingest.cache_dir") cfg.ingest.cache_dir = value;
  else if (key == "ingest.max_rows") cfg.ingest.max_rows = parse_int(key, value);
  else if (key == "mask.stack") cfg.stack = parse_stack(value);
  else if (key == "mask.tau") cfg.tau = parse_real(key, value);
  else if (key == "mask.global_area_frac")
    cfg.global_area_frac = parse_real(key, value);
  else if (key == "mask.ambiguous_area_frac")
    cfg.ambiguous_area_frac = parse_real(key, value);
  else if (key == "mask.opening_radius")
    cfg.opening_radius = parse_int(key, value);
  else if (key == "mask.max_aspect_dev")
    cfg.max_aspect_dev = parse_real(key, value);
  else if (key == "mask.backend") cfg.backend_command = value;
  else if (key == "difficulty.scorer") {
    auto v = parse_scorer_version(value);
    if (!v) throw ConfigError("difficulty.scorer: expected v1 or v2");
    cfg.scorer = *v;
  } else {
    throw ConfigError("unknown config key '" + key + "'");
  }
}

void print_summary(const pipeline::StageSummary& s) {
  std::printf("[%s] %s: %zu in, %zu out, %zu dropped, %zu flagged%s (%.2fs)\n",
              s.stage.c_str(), s.dataset.c_str(), s.n_inputs, s.n_outputs,
              s.n_dropped, s.n_flagged, s.cached ? ", cached" : "",
              s.wall_seconds);
  for (const std::string& note : s.notes)
    std::fprintf(stderr, "  note: %s\n", note.c_str());
}

std::vector<double> parse_candidates(const std::string& text) {
  std::vector<double> out;
  for (const std::string& tok : split(text, ',')) {
    std::string t = trim(tok);
    if (t.empty()) continue;
    out.push_back(parse_real("candidates", t));
  }
  if (out.empty()) throw ConfigError("no sweep candidates given");
  std::sort(out.begin(), out.end());
  return out;
}

SpatialDescriptor gold_descriptor(const ReasoningChain& chain) {
  if (chain.header.scope == Scope::global) return SpatialDescriptor::whole_image;
  if (chain.header.scope == Scope::alignment_failed)
    return SpatialDescriptor::alignment_failed;
  auto parsed = evalparse::parse_chain_fields(chain.render());
  if (!parsed.spatial)
    throw DataError("reference chain " + chain.triplet_id +
                    " has no recoverable spatial descriptor");
  return *parsed.spatial;
}

store::json metrics_field_json(const evalparse::FieldMetrics& f) {
  store::json j;
  j["accuracy"] = f.accuracy;
  j["extraction_rate"] = f.extraction_rate;
  j["conditional"] = f.conditional;
  return j;
}

int run(int argc, char** argv) {
  CLI::App app{"editforge — deterministic edit-forensics supervision pipeline"};
  app.require_subcommand(1);
  // Let `editforge mask --output-root X` work: unmatched subcommand options
  // bubble up to these app-level ones.
  app.fallthrough();

  const char* env_root = std::getenv("EDITFORGE_OUTPUT_ROOT");
  std::string config_file;
  std::vector<std::string> overrides;
  std::string output_root = env_root ? env_root : "";
  std::string dataset;
  std::string config_dir;
  int workers = 0;
  bool force = false;

  app.add_option("--config", config_file, "run-config file (key = value lines)");
  app.add_option("--set", overrides, "override, e.g. --set mask.tau=0.58")
      ->take_all();
  app.add_option("--output-root", output_root,
                 "record-tree root (default: $EDITFORGE_OUTPUT_ROOT)");
  app.add_option("--dataset", dataset, "dataset name (file stem)");
  app.add_option("--config-dir", config_dir, "data-file directory");
  app.add_option("--workers", workers, "worker threads (0 = library default)");
  app.add_flag("--force", force, "ignore stage caches");

  // stage subcommands ---------------------------------------------------------
  auto* c_ingest = app.add_subcommand("ingest", "Stage A: normalize a source dataset");
  std::string ing_kind, ing_manifest, ing_root, ing_split;
  bool ing_single = false, ing_download = false;
  std::string ing_cache;
  int ing_max_rows = -1;
  c_ingest->add_option("--kind", ing_kind, "picobanana | magicbrush | synthetic");
  c_ingest->add_option("--manifest", ing_manifest, "source manifest (jsonl)");
  c_ingest->add_option("--root", ing_root, "dataset root directory");
  c_ingest->add_option("--split", ing_split, "magicbrush split name");
  c_ingest->add_flag("--single-turn-only", ing_single, "keep only turn 1");
  c_ingest->add_flag("--download-missing", ing_download,
                     "fetch missing inputs by URL");
  c_ingest->add_option("--cache-dir", ing_cache, "download cache directory");
  c_ingest->add_option("--max-rows", ing_max_rows, "cap ingested rows");

  auto* c_mask = app.add_subcommand("mask", "Stage B: difference masks + scope");
  std::string mask_stack, mask_backend;
  std::optional<double> mask_tau;
  c_mask->add_option("--stack", mask_stack, "signals, e.g. lab+ssim+perceptual");
  c_mask->add_option("--tau", mask_tau, "Path-1 global routing threshold");
  c_mask->add_option("--backend", mask_backend,
                     "external perceptual backend command");

  auto* c_diff = app.add_subcommand("difficulty", "Stage C: scores + tertile bins");
  std::string diff_scorer;
  c_diff->add_option("--scorer", diff_scorer, "v1 | v2");

  auto* c_cat = app.add_subcommand("category", "Stage D: 12-way classification");
  auto* c_chain = app.add_subcommand("chain", "Stage E: reasoning chains");

  auto* c_sweep = app.add_subcommand("sweep", "offline tau sweep over recorded means");
  std::string sweep_candidates, sweep_out;
  std::optional<double> sweep_target;
  c_sweep->add_option("--candidates", sweep_candidates,
                      "comma-separated thresholds (default 0.40..0.80 by 0.02)");
  c_sweep->add_option("--out", sweep_out, "write CSV here instead of stdout");
  c_sweep->add_option("--calibrate-target", sweep_target,
                      "also pick tau closest to this Path-1 rate");

  auto* c_report = app.add_subcommand("report", "corpus characterization report");

  auto* c_eval = app.add_subcommand("eval", "score model generations");
  std::string eval_preds, eval_refs, eval_csv;
  c_eval->add_option("--preds", eval_preds,
                     "JSONL of {triplet_id, generation_text, mode}")
      ->required();
  c_eval->add_option("--refs", eval_refs, "reference chains JSONL")->required();
  c_eval->add_option("--out-csv", eval_csv, "also write metrics CSV here");

  auto* c_synth = app.add_subcommand("synth", "generate a synthetic dataset");
  int synth_n = 100, synth_size = 160;
  std::uint64_t synth_seed = 7;
  std::string synth_out;
  c_synth->add_option("--n", synth_n, "triplet count");
  c_synth->add_option("--out", synth_out, "output directory")->required();
  c_synth->add_option("--seed", synth_seed, "RNG seed");
  c_synth->add_option("--size", synth_size, "image side length");

  auto* c_audit = app.add_subcommand("audit", "verify chains against records");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 1;  // bad flags are config errors
  }

  if (workers > 0) omp_set_num_threads(workers);

  pipeline::RunConfig cfg;
  if (!config_file.empty())
    for (const auto& [k, v] : read_kv_file(config_file)) apply_kv(cfg, k, v);
  for (const std::string& ov : overrides) {
    auto eq = ov.find('=');
    if (eq == std::string::npos)
      throw ConfigError("--set expects key=value, got '" + ov + "'");
    apply_kv(cfg, trim(ov.substr(0, eq)), trim(ov.substr(eq + 1)));
  }
  if (!output_root.empty()) cfg.output_root = output_root;
  if (!dataset.empty()) cfg.dataset = dataset;
  if (!config_dir.empty()) cfg.config_dir = config_dir;
  cfg.force = force;

  if (cfg.output_root.empty() && !c_synth->parsed())
    throw ConfigError(
        "no output root: pass --output-root or set EDITFORGE_OUTPUT_ROOT");

  if (c_ingest->parsed()) {
    if (!ing_kind.empty()) cfg.ingest.kind = ing_kind;
    if (!ing_manifest.empty()) cfg.ingest.manifest = ing_manifest;
    if (!ing_root.empty()) cfg.ingest.root = ing_root;
    if (!ing_split.empty()) cfg.ingest.split = ing_split;
    if (ing_single) cfg.ingest.single_turn_only = true;
    if (ing_download) cfg.ingest.download_missing = true;
    if (!ing_cache.empty()) cfg.ingest.cache_dir = ing_cache;
    if (ing_max_rows >= 0) cfg.ingest.max_rows = ing_max_rows;
    if (cfg.ingest.kind.empty())
      throw ConfigError("ingest: --kind (or ingest.kind) is required");
    print_summary(pipeline::run_ingest(cfg));
    return 0;
  }
  if (c_mask->parsed()) {
    if (!mask_stack.empty()) cfg.stack = parse_stack(mask_stack);
    if (mask_tau) cfg.tau = *mask_tau;
    if (!mask_backend.empty()) cfg.backend_command = mask_backend;
    print_summary(pipeline::run_mask(cfg));
    return 0;
  }
  if (c_diff->parsed()) {
    if (!diff_scorer.empty()) {
      auto v = parse_scorer_version(diff_scorer);
      if (!v) throw ConfigError("--scorer: expected v1 or v2");
      cfg.scorer = *v;
    }
    print_summary(pipeline::run_difficulty(cfg));
    return 0;
  }
  if (c_cat->parsed()) {
    print_summary(pipeline::run_category(cfg));
    return 0;
  }
  if (c_chain->parsed()) {
    print_summary(pipeline::run_chain(cfg));
    return 0;
  }

  if (c_sweep->parsed()) {
    std::string mask_file =
        store::stage_file(cfg.output_root, store::kStageMasks, cfg.dataset);
    std::vector<MaskArtifact> masks = store::read_masks(mask_file);
    std::vector<double> means;
    means.reserve(masks.size());
    for (const MaskArtifact& a : masks)
      if (a.scope != Scope::alignment_failed)
        means.push_back(a.combined_diff_mean);
    std::vector<double> candidates;
    if (!sweep_candidates.empty()) {
      candidates = parse_candidates(sweep_candidates);
    } else {
      // Integer-scaled so the grid lands on exact hundredths (0.42, not
      // 0.42000000000000004 from accumulated 0.40 + k*0.02).
      for (int c = 40; c <= 80; c += 2) candidates.push_back(c / 100.0);
    }
    auto rows = analysis::sweep_thresholds(means, candidates);
    std::string csv = analysis::sweep_csv(rows);
    if (sweep_out.empty())
      std::fputs(csv.c_str(), stdout);
    else
      write_file(sweep_out, csv);
    if (sweep_target) {
      double tau = analysis::calibrate_tau(means, candidates, *sweep_target);
      std::fprintf(stderr, "calibrated tau = %s (target rate %s)\n",
                   analysis::format_shortest(tau).c_str(),
                   analysis::format_shortest(*sweep_target).c_str());
    }
    return 0;
  }

  if (c_report->parsed()) {
    pipeline::ReportResult rr = pipeline::run_report(cfg);
    for (const std::string& f : rr.files) std::printf("wrote %s\n", f.c_str());
    for (const std::string& g : rr.gaps)
      std::fprintf(stderr, "gap: %s\n", g.c_str());
    return 0;
  }

  if (c_eval->parsed()) {
    std::vector<ReasoningChain> refs = store::read_chains(eval_refs);
    std::map<std::string, const ReasoningChain*> ref_by_id;
    for (const ReasoningChain& c : refs) ref_by_id[c.triplet_id] = &c;

    std::ifstream in(eval_preds);
    if (!in) throw DataError("cannot open predictions file " + eval_preds);
    std::vector<evalparse::ParsedFields> preds;
    std::vector<evalparse::GoldTriple> gold;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (trim(line).empty()) continue;
      store::json row = store::json::parse(line, nullptr, false);
      if (row.is_discarded())
        throw DataError(eval_preds + ":" + std::to_string(lineno) +
                        ": malformed JSON");
      std::string id = row.value("triplet_id", "");
      std::string text = row.value("generation_text", "");
      std::string mode = row.value("mode", "chain");
      auto ref = ref_by_id.find(id);
      if (ref == ref_by_id.end())
        throw DataError(eval_preds + ":" + std::to_string(lineno) +
                        ": no reference chain for triplet_id '" + id + "'");
      if (mode == "chain")
        preds.push_back(evalparse::parse_chain_fields(text));
      else if (mode == "label")
        preds.push_back(evalparse::parse_label_json(text));
      else
        throw DataError(eval_preds + ":" + std::to_string(lineno) +
                        ": mode must be chain or label");
      evalparse::GoldTriple g;
      g.category = ref->second->header.category;
      g.bin = ref->second->header.difficulty;
      g.spatial = gold_descriptor(*ref->second);
      gold.push_back(g);
    }

    evalparse::MetricsReport rep = evalparse::score_predictions(preds, gold);
    store::json out;
    out["note"] =
        "gold references derive from the pipeline's own records for this split";
    out["n"] = rep.n;
    out["category"] = metrics_field_json(rep.category);
    out["spatial"] = metrics_field_json(rep.spatial);
    out["bin"] = metrics_field_json(rep.bin);
    out["joint_accuracy"] = rep.joint_accuracy;
    std::printf("%s\n", out.dump(2).c_str());

    if (!eval_csv.empty()) {
      std::string csv =
          "# gold references derive from the pipeline's own records\n"
          "field,accuracy,extraction_rate,conditional\n";
      auto row = [](const char* name, const evalparse::FieldMetrics& f) {
        char buf[128];
        std::snprintf(buf, sizeof buf, "%s,%.4f,%.4f,%.4f\n", name, f.accuracy,
                      f.extraction_rate, f.conditional);
        return std::string(buf);
      };
      csv += row("category", rep.category);
      csv += row("spatial", rep.spatial);
      csv += row("bin", rep.bin);
      char buf[64];
      std::snprintf(buf, sizeof buf, "joint,%.4f,,\n", rep.joint_accuracy);
      csv += buf;
      write_file(eval_csv, csv);
    }
    return 0;
  }

  if (c_synth->parsed()) {
    if (synth_n < 1) throw ConfigError("synth: --n must be positive");
    auto specs = synth::generate_dataset(synth_out, synth_n, synth_seed, synth_size);
    std::printf("wrote %zu synthetic triplets; manifest at %s\n", specs.size(),
                synth::manifest_path(synth_out).c_str());
    return 0;
  }

  if (c_audit->parsed()) {
    auto read_stage = [&](const char* stage) {
      return store::stage_file(cfg.output_root, stage, cfg.dataset);
    };
    std::vector<EditTriplet> triplets =
        store::read_triplets(read_stage(store::kStageTriplets));
    std::vector<MaskArtifact> masks =
        store::read_masks(read_stage(store::kStageMasks));
    std::vector<DifficultyRecord> diffs =
        store::read_difficulty(read_stage(store::kStageDifficulty));
    std::vector<CategoryRecord> cats =
        store::read_categories(read_stage(store::kStageCategories));
    std::vector<ReasoningChain> chains =
        store::read_chains(read_stage(store::kStageChains));

    std::map<std::string, const EditTriplet*> t_by;
    for (const auto& t : triplets) t_by[t.triplet_id] = &t;
    std::map<std::string, const MaskArtifact*> m_by;
    for (const auto& a : masks) m_by[a.triplet_id] = &a;
    std::map<std::string, const DifficultyRecord*> d_by;
    for (const auto& d : diffs) d_by[d.triplet_id] = &d;
    std::map<std::string, const CategoryRecord*> c_by;
    for (const auto& c : cats) c_by[c.triplet_id] = &c;

    size_t violations = 0;
    for (const ReasoningChain& chain : chains) {
      const std::string& id = chain.triplet_id;
      if (!t_by.count(id) || !m_by.count(id) || !d_by.count(id) ||
          !c_by.count(id)) {
        std::printf("%s: missing upstream records\n", id.c_str());
        ++violations;
        continue;
      }
      std::vector<std::string> v = chaincomp::audit_chain(
          chain, *t_by.at(id), *m_by.at(id), *d_by.at(id), *c_by.at(id));
      if (chain.word_count != chaincomp::chain_word_count(chain.steps))
        v.push_back("stored word_count disagrees with the steps");
      for (const std::string& msg : v) {
        std::printf("%s: %s\n", id.c_str(), msg.c_str());
        ++violations;
      }
    }
    std::printf("audited %zu chains, %zu violations\n", chains.size(),
                violations);
    if (violations) throw DataError("chain audit found violations");
    return 0;
  }

  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "%s\n", e.what());
    return 1;
  } catch (const DataError& e) {
    std::fprintf(stderr, "%s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
}
