#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "editforge/image.hpp"
#include "editforge/records.hpp"

namespace editforge::synth {

enum class SyntheticKind {
  paste_patch,
  recolor_region,
  global_color_shift,
  global_noise,
  no_edit,
};

std::string to_string(SyntheticKind k);
std::optional<SyntheticKind> parse_synthetic_kind(const std::string& s);

struct SyntheticEditSpec {
  std::string id;
  SyntheticKind kind = SyntheticKind::no_edit;
  std::uint64_t seed = 0;
  double magnitude = 0.5;  // see apply_edit for the per-kind semantics
  int img_w = 160, img_h = 160;
  int x = 0, y = 0, w = 0, h = 0;  // edited rectangle for local kinds
};

// Deterministic procedural base: channel gradients plus a seeded, bilinearly
// interpolated value-noise texture. Channels stay inside [16, 239] so pure
// black never appears.
ImageU8 generate_base(const SyntheticEditSpec& spec);

// Applies the edit. Magnitude semantics:
//   paste_patch        strength of the pasted texture's channel rotation
//   recolor_region     hue-style per-channel rotation, shift = round(mag*120)
//   global_color_shift per-channel offsets of up to +/-16, scaled by magnitude
//   global_noise       per-pixel additive noise amplitude round(mag*64)
// Local rotations are mod-256, so for any magnitude >= 0.3 every edited pixel
// is guaranteed to differ from the base (no saturation no-ops). The global
// shift instead stays inside the [16, 239] channel headroom: it never wraps,
// which keeps the difference uniform across the frame — that uniformity is
// what the "global" ground-truth label promises. Local kinds change pixels
// exactly inside gt_mask; global kinds change every pixel.
struct SyntheticTriplet {
  ImageU8 base;
  ImageU8 edited;
  MaskGrid gt_mask;
  Scope gt_scope = Scope::ambiguous;
  std::string instruction;
};
SyntheticTriplet apply_edit(const SyntheticEditSpec& spec);

// Intersection over union of two equal-sized masks; both empty -> 1.0.
double iou(const MaskGrid& a, const MaskGrid& b);

// Writes images/, gt_masks/ and synthetic_manifest.jsonl under out_dir.
// Kinds cycle deterministically; local rectangles cover 2..40% of the image
// and magnitudes land in [0.3, 1.0]. Returns the specs in id order.
std::vector<SyntheticEditSpec> generate_dataset(const std::string& out_dir,
                                                int n, std::uint64_t seed,
                                                int img_size = 160);

std::string manifest_path(const std::string& out_dir);

}  // namespace editforge::synth
