#pragma once

#include <string>
#include <vector>

#include "editforge/image.hpp"
#include "editforge/records.hpp"

namespace editforge::ingest {

struct AdapterConfig {
  std::string dataset_root;
  bool download_missing = false;
  bool single_turn_only = false;  // magicbrush: keep only turn_index == 1
  std::string cache_dir;          // required when download_missing
  int max_rows = -1;              // <0 = unlimited
};

// Per-row problems that skip the row instead of aborting the run.
struct RowIssue {
  int lineno = 0;
  std::string reason;
};

struct IngestResult {
  std::vector<EditTriplet> triplets;
  std::vector<RowIssue> issues;
};

// Filename stem -> [a-z0-9_-], everything else folded to '_'.
std::string sanitize_stem(const std::string& filename);

// Pico-Banana-style manifest: JSONL rows with text, output_image,
// local_input_image and/or open_image_input_url, optional edit_type.
// Triplet IDs are "picobanana_<stem of output_image>"; two rows with the same
// stem abort the run naming both source lines. Missing local inputs either
// skip the row or, with download_missing, fetch the URL into cache_dir
// (bounded retry, URL-keyed cache file).
IngestResult ingest_picobanana(const std::string& manifest_path,
                               const AdapterConfig& cfg);

// MagicBrush-style local export: <root>/<split>/rows.jsonl with
// {img_id, turn_index, instruction, source_img, target_img, mask_img} and
// asset paths relative to <root>/<split>. Images are re-encoded as PNG under
// <output_root>/images/magicbrush/, the provided mask is decoded to a binary
// PNG under <output_root>/masks_gt/. IDs: "magicbrush_<split>_<img_id>_tNN".
IngestResult ingest_magicbrush(const std::string& root, const std::string& split,
                               const std::string& output_root,
                               const AdapterConfig& cfg);

// The provided MagicBrush mask marks the edited region as pure black [0,0,0]
// over otherwise-intact target content. Some rows arrive inverted (everything
// BUT the edit painted black); a black fraction above 0.5 triggers the
// inversion. Pixels where the target itself is pure black are excluded from
// the non-inverted reading. `warned_empty` reports an all-zero result.
struct DecodedMask {
  MaskGrid mask;
  bool inverted = false;
  bool warned_empty = false;
};
DecodedMask decode_magicbrush_mask(const ImageU8& mask_image,
                                   const ImageU8& target_image);

// Manifest written by synth::generate_dataset; paths resolve relative to the
// manifest's directory.
IngestResult ingest_synthetic(const std::string& manifest_path,
                              const AdapterConfig& cfg);

// HTTP GET with bounded retry (3 attempts) into a URL-keyed cache file.
// Returns the cache path; empty string when every attempt failed.
std::string download_to_cache(const std::string& url,
                              const std::string& cache_dir, int attempts = 3);

}  // namespace editforge::ingest
