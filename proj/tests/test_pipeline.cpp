#include "doctest.h"

#include <omp.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>

#include "editforge/chaincomp.hpp"
#include "editforge/common.hpp"
#include "editforge/perceptual_backend.hpp"
#include "editforge/pipeline.hpp"
#include "editforge/record_store.hpp"
#include "editforge/synthoracle.hpp"

namespace fs = std::filesystem;
using namespace editforge;
using pipeline::RunConfig;
using pipeline::StageSummary;

namespace {

struct TmpDir {
  fs::path path;
  TmpDir() {
    static int counter = 0;
    path = fs::temp_directory_path() /
           ("editforge_pipeline_" + std::to_string(::getpid()) + "_" +
            std::to_string(counter++));
    fs::create_directories(path);
  }
  ~TmpDir() { fs::remove_all(path); }
};

// Synthetic corpus plus a run configuration pointed at a fresh output root.
struct Corpus {
  TmpDir tmp;
  RunConfig cfg;

  explicit Corpus(int n = 10, std::uint64_t seed = 21, int size = 64) {
    std::string src = (tmp.path / "src").string();
    synth::generate_dataset(src, n, seed, size);
    cfg.output_root = (tmp.path / "out").string();
    cfg.ingest.kind = "synthetic";
    cfg.ingest.manifest = synth::manifest_path(src);
    cfg.quiet = true;
  }
};

void run_all_stages(const RunConfig& cfg) {
  for (const char* stage : {"ingest", "mask", "difficulty", "category", "chain"})
    pipeline::run_stage(stage, cfg);
}

std::string slurp_bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::map<std::string, std::string> collect_tree(const fs::path& root) {
  std::map<std::string, std::string> files;
  for (const auto& entry : fs::recursive_directory_iterator(root))
    if (entry.is_regular_file())
      files[fs::relative(entry.path(), root).string()] =
          slurp_bytes(entry.path());
  return files;
}

int run_cli(const std::string& args) {
  std::string cmd = std::string(EDITFORGE_CLI_BIN) + " " + args +
                    " >/dev/null 2>/dev/null";
  int rc = std::system(cmd.c_str());
  REQUIRE(rc != -1);
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

}  // namespace

TEST_CASE("stages run in order and populate the record tree") {
  Corpus c;

  StageSummary ing = pipeline::run_stage("ingest", c.cfg);
  CHECK(ing.stage == "triplets");
  CHECK(ing.n_outputs == 10);
  CHECK(ing.n_dropped == 0);
  CHECK(!ing.cached);
  CHECK(fs::exists(ing.output_file));
  CHECK(fs::exists(pipeline::manifest_path_for(c.cfg.output_root, "triplets",
                                               "synthetic")));

  StageSummary mask = pipeline::run_stage("mask", c.cfg);
  CHECK(mask.stage == "masks");
  CHECK(mask.n_inputs == 10);
  CHECK(mask.n_outputs == 10);
  CHECK(mask.n_flagged == 0);  // equal-sized pairs never fail alignment
  auto artifacts = store::read_masks(mask.output_file);
  for (const MaskArtifact& a : artifacts)
    if (a.mask_path)
      CHECK(fs::exists(fs::path(c.cfg.output_root) / *a.mask_path));

  CHECK(pipeline::run_stage("difficulty", c.cfg).n_outputs == 10);
  CHECK(pipeline::run_stage("category", c.cfg).n_outputs == 10);
  StageSummary chain = pipeline::run_stage("chain", c.cfg);
  CHECK(chain.n_outputs == 10);
  CHECK(chain.n_dropped == 0);

  auto chains = store::read_chains(chain.output_file);
  REQUIRE(chains.size() == 10);
  for (size_t i = 1; i < chains.size(); ++i)
    CHECK(chains[i - 1].triplet_id < chains[i].triplet_id);  // store sorts

  // Every chain audits clean against the records it was composed from.
  auto triplets = store::read_triplets(
      store::stage_file(c.cfg.output_root, "triplets", "synthetic"));
  auto diffs = store::read_difficulty(
      store::stage_file(c.cfg.output_root, "difficulty", "synthetic"));
  auto cats = store::read_categories(
      store::stage_file(c.cfg.output_root, "categories", "synthetic"));
  std::map<std::string, const EditTriplet*> t_by;
  for (const auto& t : triplets) t_by[t.triplet_id] = &t;
  std::map<std::string, MaskArtifact*> m_by;
  for (auto& a : artifacts) m_by[a.triplet_id] = &a;
  std::map<std::string, const DifficultyRecord*> d_by;
  for (const auto& d : diffs) d_by[d.triplet_id] = &d;
  std::map<std::string, const CategoryRecord*> c_by;
  for (const auto& x : cats) c_by[x.triplet_id] = &x;
  for (const ReasoningChain& ch : chains) {
    auto violations =
        chaincomp::audit_chain(ch, *t_by.at(ch.triplet_id),
                               *m_by.at(ch.triplet_id), *d_by.at(ch.triplet_id),
                               *c_by.at(ch.triplet_id));
    CAPTURE(ch.triplet_id);
    CHECK(violations.empty());
  }

  CHECK_THROWS_AS(pipeline::run_stage("bogus", c.cfg), ConfigError);

  RunConfig empty = c.cfg;
  empty.ingest.manifest.clear();
  CHECK_THROWS_AS(pipeline::run_ingest(empty), ConfigError);
}

TEST_CASE("stage caches hit until config or inputs change") {
  Corpus c;
  pipeline::run_ingest(c.cfg);
  StageSummary first = pipeline::run_mask(c.cfg);
  CHECK(!first.cached);

  StageSummary again = pipeline::run_mask(c.cfg);
  CHECK(again.cached);
  CHECK(again.n_outputs == first.n_outputs);
  REQUIRE(!again.notes.empty());
  CHECK(again.notes[0] == "cache hit: config and inputs unchanged");

  c.cfg.force = true;
  CHECK(!pipeline::run_mask(c.cfg).cached);
  c.cfg.force = false;

  c.cfg.tau = 0.55;  // config change invalidates
  CHECK(!pipeline::run_mask(c.cfg).cached);
  CHECK(pipeline::run_mask(c.cfg).cached);

  // Shrinking the ingest changes the triplets file, which invalidates mask.
  c.cfg.ingest.max_rows = 6;
  StageSummary capped = pipeline::run_ingest(c.cfg);
  CHECK(!capped.cached);
  CHECK(capped.n_outputs == 6);
  StageSummary remask = pipeline::run_mask(c.cfg);
  CHECK(!remask.cached);
  CHECK(remask.n_outputs == 6);
  CHECK(pipeline::run_mask(c.cfg).cached);
}

TEST_CASE("worker count never changes output bytes") {
  TmpDir tmp;
  std::string src = (tmp.path / "src").string();
  synth::generate_dataset(src, 10, 33, 64);

  int saved = omp_get_max_threads();
  auto run_into = [&](const std::string& root, int workers) {
    RunConfig cfg;
    cfg.output_root = root;
    cfg.ingest.kind = "synthetic";
    cfg.ingest.manifest = synth::manifest_path(src);
    cfg.quiet = true;
    omp_set_num_threads(workers);
    run_all_stages(cfg);
  };
  run_into((tmp.path / "serial").string(), 1);
  run_into((tmp.path / "parallel").string(), 4);
  omp_set_num_threads(saved);

  auto a = collect_tree(tmp.path / "serial");
  auto b = collect_tree(tmp.path / "parallel");
  REQUIRE(!a.empty());
  CHECK(a == b);
}

TEST_CASE("difficulty v1 demands a perceptual mean in the mask records") {
  Corpus c;
  pipeline::run_ingest(c.cfg);
  pipeline::run_mask(c.cfg);  // default stack: lab+ssim, no perceptual

  c.cfg.scorer = ScorerVersion::v1;
  try {
    pipeline::run_difficulty(c.cfg);
    FAIL("expected DataError");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("perceptual") != std::string::npos);
  }

  c.cfg.stack = {Signal::lab, Signal::perceptual};
  pipeline::run_mask(c.cfg);  // new stack -> cache miss -> proxy backend
  auto masks = store::read_masks(
      store::stage_file(c.cfg.output_root, "masks", "synthetic"));
  REQUIRE(!masks.empty());
  for (const MaskArtifact& a : masks)
    CHECK(a.per_signal_means.count("perceptual:proxy") == 1);

  StageSummary diff = pipeline::run_difficulty(c.cfg);
  CHECK(diff.n_outputs == 10);
  std::string raw = slurp_bytes(diff.output_file);
  CHECK(raw.find("\"s_perc\"") != std::string::npos);
  CHECK(raw.find("\"s_loc\"") != std::string::npos);
  CHECK(raw.find("\"s_compact\"") == std::string::npos);
}

TEST_CASE("external perceptual backend speaks the stdio protocol") {
  auto backend = diffmask::spawn_external_backend(EFPB_BACKEND_BIN);
  REQUIRE(backend != nullptr);
  CHECK(backend->identity() == "external:efpb_backend");

  ImageU8 a, b;
  a.width = b.width = 8;
  a.height = b.height = 6;
  a.rgb.assign(8 * 6 * 3, 100);
  b.rgb.assign(8 * 6 * 3, 150);
  GridF d = backend->diff_map(a, b);
  REQUIRE(d.width == 8);
  REQUIRE(d.height == 6);
  const double expected = 50.0 / 255.0;  // luma of a solid gray is its gray
  for (double v : d.v) CHECK(v == doctest::Approx(expected).epsilon(1e-5));

  // A second request over the same connection.
  GridF zero = backend->diff_map(a, a);
  for (double v : zero.v) CHECK(v == 0.0);

  CHECK_THROWS_AS(diffmask::spawn_external_backend("/nonexistent/efpb"),
                  ConfigError);
}

TEST_CASE("mask stage drives one external backend per worker thread") {
  Corpus c(8, 5, 64);
  pipeline::run_ingest(c.cfg);
  c.cfg.stack = {Signal::lab, Signal::perceptual};
  c.cfg.backend_command = EFPB_BACKEND_BIN;

  int saved = omp_get_max_threads();
  omp_set_num_threads(4);
  StageSummary s = pipeline::run_mask(c.cfg);
  omp_set_num_threads(saved);

  CHECK(s.n_outputs == 8);
  auto masks = store::read_masks(s.output_file);
  for (const MaskArtifact& a : masks) {
    CHECK(a.per_signal_means.count("perceptual:external:efpb_backend") == 1);
    CHECK(a.per_signal_means.count("lab") == 1);
  }
}

TEST_CASE("report writes one file per section plus the text roll-up") {
  Corpus c;
  run_all_stages(c.cfg);

  pipeline::ReportResult rr = pipeline::run_report(c.cfg);
  CHECK(rr.gaps.empty());
  std::set<std::string> names;
  for (const std::string& f : rr.files) {
    CHECK(fs::exists(f));
    names.insert(fs::path(f).filename().string());
  }
  CHECK(names == std::set<std::string>{"counts.csv", "scope_rates.csv",
                                       "descriptors.csv", "score_stats.csv",
                                       "score_histogram.csv", "crosstab.csv",
                                       "categories.csv", "report.txt"});
  std::string text = slurp_bytes(fs::path(c.cfg.output_root) / "report" /
                                 "synthetic" / "report.txt");
  CHECK(text.find("record counts") != std::string::npos);
  CHECK(text.find("difficulty scores") != std::string::npos);

  SUBCASE("missing stages surface as gaps, not crashes") {
    RunConfig bare;
    bare.output_root = (c.tmp.path / "bare").string();
    pipeline::ReportResult rg = pipeline::run_report(bare);
    CHECK(!rg.gaps.empty());
    std::string counts =
        slurp_bytes(fs::path(bare.output_root) / "report" / "synthetic" /
                    "counts.csv");
    CHECK(counts.find("triplets,missing") != std::string::npos);
  }
}

TEST_CASE("manifests pin hashes and counts, never wall time") {
  Corpus c;
  pipeline::run_ingest(c.cfg);
  pipeline::run_mask(c.cfg);

  std::string man_path =
      pipeline::manifest_path_for(c.cfg.output_root, "masks", "synthetic");
  CHECK(man_path == c.cfg.output_root + "/manifests/masks_synthetic.json");
  store::json m = store::json::parse(slurp_bytes(man_path));
  CHECK(m.at("stage") == "masks");
  CHECK(m.at("dataset") == "synthetic");
  CHECK(m.at("output_file") == "masks/synthetic.jsonl");
  CHECK(m.at("config_hash").get<std::string>().size() == 16);
  CHECK(m.at("input_hash").get<std::string>().size() == 16);
  CHECK(m.at("n_outputs") == 10);
  CHECK(!m.contains("wall_seconds"));
  CHECK(!m.contains("timestamp"));

  CHECK(pipeline::config_hash({{"b", "2"}, {"a", "1"}}) ==
        fnv1a64_hex("a=1\nb=2\n"));
}

TEST_CASE("the CLI binary drives the pipeline end to end") {
  TmpDir tmp;
  std::string src = (tmp.path / "src").string();
  std::string out = (tmp.path / "out").string();

  CHECK(run_cli("synth --out " + src + " --n 6 --seed 3 --size 64") == 0);
  CHECK(run_cli("ingest --kind synthetic --manifest " + src +
                "/synthetic_manifest.jsonl --output-root " + out) == 0);
  CHECK(run_cli("mask --output-root " + out + " --workers 2") == 0);
  CHECK(run_cli("difficulty --output-root " + out) == 0);
  CHECK(run_cli("category --output-root " + out) == 0);
  CHECK(run_cli("chain --output-root " + out) == 0);
  CHECK(run_cli("audit --output-root " + out) == 0);
  CHECK(run_cli("report --output-root " + out) == 0);
  CHECK(run_cli("sweep --output-root " + out) == 0);

  CHECK(fs::exists(fs::path(out) / "chains" / "synthetic.jsonl"));

  // Unknown flags and missing inputs map to the two failure exit codes.
  CHECK(run_cli("definitely-not-a-stage") == 1);
  CHECK(run_cli("mask --output-root " + (tmp.path / "void").string()) == 2);
  CHECK(run_cli("ingest --kind synthetic --output-root " + out) == 1);
}
