#pragma once

#include <array>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "editforge/image.hpp"
#include "editforge/records.hpp"

namespace editforge::diffmask {

// Pluggable perceptual-difference signal. The built-in proxy is a multi-scale
// local-contrast comparison; an external backend speaks the stdio protocol in
// perceptual_backend.hpp.
class PerceptualBackend {
 public:
  virtual ~PerceptualBackend() = default;
  // Raw (un-normalized) non-negative difference map at input resolution.
  virtual GridF diff_map(const ImageU8& a, const ImageU8& b) = 0;
  // Short identity string recorded in per-signal means ("proxy", "external:...").
  virtual std::string identity() const = 0;
};

std::unique_ptr<PerceptualBackend> make_proxy_backend();

struct MaskConfig {
  std::vector<Signal> stack = {Signal::lab, Signal::ssim};
  double tau = 0.62;
  double global_area_frac = 0.90;
  double ambiguous_area_frac = 0.005;
  int opening_radius = 1;
  double max_aspect_dev = 0.005;     // aspect-ratio deviation tolerated by resize
  PerceptualBackend* backend = nullptr;  // nullptr -> proxy
};

// Brings the pair onto a common grid. Same dims pass through; dimension
// mismatch with aspect ratio within max_aspect_dev resizes the edited image
// onto the real image's grid (bilinear); anything else fails alignment.
struct AlignResult {
  bool ok = false;
  ImageU8 real;
  ImageU8 edited;
  bool resized = false;
};
AlignResult align_pair(const ImageU8& real, const ImageU8& edited,
                       double max_aspect_dev = 0.005);

// Per-pixel CIELAB delta-E (sRGB D65). delta-E(black, white) = 100.
GridF lab_distance_map(const ImageU8& a, const ImageU8& b);

// Local SSIM map over Rec.601 luma: 11x11 Gaussian window, sigma 1.5,
// C1 = 0.01^2, C2 = 0.03^2 on a [0,1] dynamic range, symmetric reflection at
// borders, separable passes. Errors if min(width, height) < 11.
GridF ssim_map_local(const GridF& ya, const GridF& yb);

// clamp(1 - ssim, 0, 1), elementwise.
GridF dssim_from_ssim(const GridF& ssim);

// Divide by the 99th percentile and clamp to [0,1]. An all-zero map stays
// all-zero (p99 reported as 0).
struct NormalizeResult {
  GridF map;
  double p99 = 0.0;
};
NormalizeResult normalize_p99(const GridF& raw);

GridF combine_max(const std::vector<const GridF*>& maps);

// Mean with a fixed reduction order (per-row partials folded in row order),
// so results are identical for any worker count.
double grid_mean(const GridF& g);

std::array<std::uint64_t, 256> histogram256(const GridF& g);

// Otsu over a 256-bin histogram of [0,1] values. The returned threshold is
// the boundary (k+1)/256 of the best split; foreground is v >= threshold.
// Degenerate (fewer than two occupied bins) yields no threshold.
struct OtsuResult {
  std::optional<double> threshold;
  bool degenerate = false;
};
OtsuResult otsu_threshold(const GridF& g);

MaskGrid binarize(const GridF& g, double threshold);

MaskGrid erode(const MaskGrid& m, int radius);
MaskGrid dilate(const MaskGrid& m, int radius);
MaskGrid morphological_open(const MaskGrid& m, int radius);

// Full Stage-B treatment of one aligned pair: per-signal raw maps, per-pair
// p99 normalization, elementwise-max fusion, then two-path scope routing.
MaskArtifact generate_mask(const std::string& triplet_id, const ImageU8& real,
                           const ImageU8& edited, const MaskConfig& cfg);

}  // namespace editforge::diffmask
