#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "editforge/common.hpp"
#include "editforge/diffmask.hpp"

namespace editforge::pipeline {

struct IngestOptions {
  std::string kind;  // picobanana | magicbrush | synthetic
  std::string manifest;        // picobanana / synthetic manifest path
  std::string root;            // magicbrush dataset root
  std::string split = "dev";   // magicbrush split
  bool single_turn_only = false;
  bool download_missing = false;
  std::string cache_dir;
  int max_rows = -1;
};

// Everything behavior-affecting for a run. The per-stage config hash is
// derived from the relevant subset plus the versions of the data files in
// play, so a rerun with an unchanged hash (and unchanged input file) is
// served from the existing output.
struct RunConfig {
  std::string output_root;
  std::string dataset = "synthetic";
  std::string config_dir;  // empty -> default_config_dir()

  IngestOptions ingest;

  // mask stage
  std::vector<Signal> stack = {Signal::lab, Signal::ssim};
  double tau = 0.62;
  double global_area_frac = 0.90;
  double ambiguous_area_frac = 0.005;
  int opening_radius = 1;
  double max_aspect_dev = 0.005;
  std::string backend_command;  // empty -> built-in proxy

  // difficulty stage
  ScorerVersion scorer = ScorerVersion::v2;

  bool force = false;
  bool quiet = false;
};

struct StageSummary {
  std::string stage;
  std::string dataset;
  size_t n_inputs = 0;
  size_t n_outputs = 0;
  size_t n_dropped = 0;
  size_t n_flagged = 0;
  bool cached = false;
  double wall_seconds = 0.0;
  std::string output_file;
  std::vector<std::string> notes;  // drop/skip reasons, warnings
};

// FNV-1a over the sorted "key=value" lines; covers every knob that can change
// output bytes for the stage.
std::string config_hash(const std::map<std::string, std::string>& kv);

StageSummary run_ingest(const RunConfig& cfg);
StageSummary run_mask(const RunConfig& cfg);
StageSummary run_difficulty(const RunConfig& cfg);
StageSummary run_category(const RunConfig& cfg);
StageSummary run_chain(const RunConfig& cfg);

// Dispatch by stage name (ingest|mask|difficulty|category|chain).
StageSummary run_stage(const std::string& stage, const RunConfig& cfg);

struct ReportResult {
  std::vector<std::string> files;  // everything written under report/
  std::vector<std::string> gaps;   // stages that were missing or unusable
};

// Corpus characterization: record counts, scope rates, spatial-descriptor
// distribution, score moments, category x bin crosstab, and classifier
// coverage — each as CSV plus a consolidated text report.
ReportResult run_report(const RunConfig& cfg);

std::string manifest_path_for(const std::string& output_root,
                              const std::string& stage,
                              const std::string& dataset);

}  // namespace editforge::pipeline
