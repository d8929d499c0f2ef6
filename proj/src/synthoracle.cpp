#include "editforge/synthoracle.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <random>

#include "editforge/common.hpp"
#include "editforge/record_store.hpp"
#include "editforge/textcfg.hpp"

namespace editforge::synth {

namespace fs = std::filesystem;

std::string to_string(SyntheticKind k) {
  switch (k) {
    case SyntheticKind::paste_patch: return "paste_patch";
    case SyntheticKind::recolor_region: return "recolor_region";
    case SyntheticKind::global_color_shift: return "global_color_shift";
    case SyntheticKind::global_noise: return "global_noise";
    case SyntheticKind::no_edit: return "no_edit";
  }
  return "?";
}

std::optional<SyntheticKind> parse_synthetic_kind(const std::string& s) {
  for (SyntheticKind k :
       {SyntheticKind::paste_patch, SyntheticKind::recolor_region,
        SyntheticKind::global_color_shift, SyntheticKind::global_noise,
        SyntheticKind::no_edit})
    if (to_string(k) == s) return k;
  return std::nullopt;
}

namespace {

constexpr int kLo = 16, kHi = 239;

// Coarse random lattice, bilinearly interpolated: smooth deterministic texture.
struct ValueNoise {
  int cells;
  std::vector<double> lattice;  // (cells+1)^2

  ValueNoise(std::uint64_t seed, int cells_) : cells(cells_) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    lattice.resize(size_t(cells + 1) * (cells + 1));
    for (double& v : lattice) v = dist(rng);
  }

  double at(double u, double v) const {  // u, v in [0,1]
    double x = u * cells, y = v * cells;
    int x0 = std::min(static_cast<int>(x), cells - 1);
    int y0 = std::min(static_cast<int>(y), cells - 1);
    double fx = x - x0, fy = y - y0;
    auto L = [&](int yy, int xx) { return lattice[size_t(yy) * (cells + 1) + xx]; };
    double top = L(y0, x0) * (1 - fx) + L(y0, x0 + 1) * fx;
    double bot = L(y0 + 1, x0) * (1 - fx) + L(y0 + 1, x0 + 1) * fx;
    return top * (1 - fy) + bot * fy;
  }
};

inline std::uint8_t clamp_ch(double v) {
  return static_cast<std::uint8_t>(std::clamp(v, double(kLo), double(kHi)));
}

// Splitmix-style per-pixel hash for noise that does not depend on traversal order.
inline std::uint64_t pixel_hash(std::uint64_t seed, int r, int c, int ch) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ull * (std::uint64_t(r) * 73856093u +
                                                    std::uint64_t(c) * 19349663u +
                                                    std::uint64_t(ch) * 83492791u + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

}  // namespace

ImageU8 generate_base(const SyntheticEditSpec& spec) {
  ImageU8 img;
  img.width = spec.img_w;
  img.height = spec.img_h;
  img.rgb.resize(size_t(img.width) * img.height * 3);
  ValueNoise noise(spec.seed, 8);
  for (int r = 0; r < img.height; ++r) {
    double v = static_cast<double>(r) / std::max(1, img.height - 1);
    for (int c = 0; c < img.width; ++c) {
      double u = static_cast<double>(c) / std::max(1, img.width - 1);
      double n = noise.at(u, v) * 28.0;
      std::uint8_t* p = img.px(r, c);
      p[0] = clamp_ch(48 + 150.0 * u + n);
      p[1] = clamp_ch(48 + 150.0 * v + n);
      p[2] = clamp_ch(48 + 75.0 * (u + v) + n);
    }
  }
  return img;
}

SyntheticTriplet apply_edit(const SyntheticEditSpec& spec) {
  SyntheticTriplet out;
  out.base = generate_base(spec);
  out.edited = out.base;
  out.gt_mask = MaskGrid(spec.img_w, spec.img_h, 0);

  // Local edits use the same headroom trick as the global shift below: base
  // channels stay in [kLo, kHi], so per-channel deltas capped at 16 never wrap
  // or clamp.  A wrapped pixel reads as a huge, sign-flipped difference, which
  // would poison the ground-truth contract that the edit is mild and uniform
  // inside the rectangle and absent outside it.
  auto nudge_px = [](std::uint8_t* p, int d) {
    p[0] = static_cast<std::uint8_t>(p[0] + d);
    p[1] = static_cast<std::uint8_t>(p[1] + std::max(1, d * 2 / 3));
    p[2] = static_cast<std::uint8_t>(p[2] - std::max(1, d / 2));
  };

  switch (spec.kind) {
    case SyntheticKind::paste_patch: {
      ValueNoise tex(spec.seed ^ 0xabcdef1234567890ull, 4);
      double span = 4.0 + spec.magnitude * 6.0;
      for (int r = spec.y; r < spec.y + spec.h; ++r)
        for (int c = spec.x; c < spec.x + spec.w; ++c) {
          double u = static_cast<double>(c - spec.x) / std::max(1, spec.w - 1);
          double v = static_cast<double>(r - spec.y) / std::max(1, spec.h - 1);
          double t01 = (tex.at(u, v) + 1.0) * 0.5;
          int d = 6 + static_cast<int>(std::lround(t01 * span));
          nudge_px(out.edited.px(r, c), d);  // d in [6, 16]
          out.gt_mask.at(r, c) = 1;
        }
      out.gt_scope = Scope::local;
      out.instruction = "add a small textured square to the scene";
      break;
    }
    case SyntheticKind::recolor_region: {
      const int d =
          std::max(6, static_cast<int>(std::lround(spec.magnitude * 16.0)));
      for (int r = spec.y; r < spec.y + spec.h; ++r)
        for (int c = spec.x; c < spec.x + spec.w; ++c) {
          nudge_px(out.edited.px(r, c), d);
          out.gt_mask.at(r, c) = 1;
        }
      out.gt_scope = Scope::local;
      out.instruction = "let the marked region be changed to a different color";
      break;
    }
    case SyntheticKind::global_color_shift: {
      const int d =
          std::max(4, static_cast<int>(std::lround(spec.magnitude * 16.0)));
      for (int r = 0; r < spec.img_h; ++r)
        for (int c = 0; c < spec.img_w; ++c) {
          nudge_px(out.edited.px(r, c), d);
          out.gt_mask.at(r, c) = 1;
        }
      out.gt_scope = Scope::global;
      out.instruction = "adjust the contrast and color balance of the whole image";
      break;
    }
    case SyntheticKind::global_noise: {
      int amp = std::max(1, static_cast<int>(std::lround(spec.magnitude * 64.0)));
      for (int r = 0; r < spec.img_h; ++r)
        for (int c = 0; c < spec.img_w; ++c) {
          std::uint8_t* p = out.edited.px(r, c);
          for (int ch = 0; ch < 3; ++ch) {
            int delta = 1 + static_cast<int>(pixel_hash(spec.seed, r, c, ch) %
                                             static_cast<std::uint64_t>(amp));
            p[ch] = static_cast<std::uint8_t>((p[ch] + delta) % 256);
          }
          out.gt_mask.at(r, c) = 1;
        }
      out.gt_scope = Scope::global;
      out.instruction = "apply film grain uniformly across the entire image";
      break;
    }
    case SyntheticKind::no_edit:
      out.gt_scope = Scope::ambiguous;
      out.instruction = "leave the scene exactly as it is";
      break;
  }
  return out;
}

double iou(const MaskGrid& a, const MaskGrid& b) {
  if (a.width != b.width || a.height != b.height)
    throw DataError("iou: dimension mismatch");
  size_t inter = 0, uni = 0;
  for (size_t i = 0; i < a.v.size(); ++i) {
    bool pa = a.v[i] != 0, pb = b.v[i] != 0;
    inter += pa && pb;
    uni += pa || pb;
  }
  if (uni == 0) return 1.0;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

std::string manifest_path(const std::string& out_dir) {
  return out_dir + "/synthetic_manifest.jsonl";
}

std::vector<SyntheticEditSpec> generate_dataset(const std::string& out_dir,
                                                int n, std::uint64_t seed,
                                                int img_size) {
  fs::create_directories(fs::path(out_dir) / "images");
  fs::create_directories(fs::path(out_dir) / "gt_masks");

  const SyntheticKind cycle[5] = {
      SyntheticKind::paste_patch, SyntheticKind::recolor_region,
      SyntheticKind::global_color_shift, SyntheticKind::global_noise,
      SyntheticKind::no_edit};

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> mag_dist(0.3, 1.0);
  std::uniform_real_distribution<double> area_dist(0.02, 0.40);
  std::uniform_real_distribution<double> ar_dist(0.6, 1.6);

  std::vector<SyntheticEditSpec> specs;
  std::vector<store::json> rows;
  for (int i = 0; i < n; ++i) {
    SyntheticEditSpec s;
    char idbuf[32];
    std::snprintf(idbuf, sizeof idbuf, "synthetic_%05d", i);
    s.id = idbuf;
    s.kind = cycle[i % 5];
    s.seed = seed * 1000003ull + static_cast<std::uint64_t>(i);
    s.magnitude = mag_dist(rng);
    s.img_w = s.img_h = img_size;
    if (s.kind == SyntheticKind::paste_patch ||
        s.kind == SyntheticKind::recolor_region) {
      double area = area_dist(rng) * img_size * img_size;
      double aspect = ar_dist(rng);
      s.w = std::clamp(static_cast<int>(std::lround(std::sqrt(area * aspect))), 4,
                       img_size - 2);
      s.h = std::clamp(static_cast<int>(std::lround(area / s.w)), 4, img_size - 2);
      std::uniform_int_distribution<int> xd(1, img_size - s.w - 1);
      std::uniform_int_distribution<int> yd(1, img_size - s.h - 1);
      s.x = xd(rng);
      s.y = yd(rng);
    }
    specs.push_back(s);

    SyntheticTriplet t = apply_edit(s);
    std::string real_rel = "images/" + s.id + "_real.png";
    std::string edited_rel = "images/" + s.id + "_edited.png";
    std::string gt_rel = "gt_masks/" + s.id + ".png";
    write_png_rgb(out_dir + "/" + real_rel, t.base);
    write_png_rgb(out_dir + "/" + edited_rel, t.edited);
    write_png_mask(out_dir + "/" + gt_rel, t.gt_mask);

    store::json row;
    row["triplet_id"] = s.id;
    row["real_image"] = real_rel;
    row["edited_image"] = edited_rel;
    row["gt_mask"] = gt_rel;
    row["instruction"] = t.instruction;
    row["kind"] = to_string(s.kind);
    row["gt_scope"] = editforge::to_string(t.gt_scope);
    row["seed"] = s.seed;
    row["magnitude"] = s.magnitude;
    row["region"] = {s.x, s.y, s.w, s.h};
    rows.push_back(row);
  }

  std::string manifest;
  for (const auto& r : rows) manifest += r.dump() + "\n";
  write_file(manifest_path(out_dir), manifest);
  return specs;
}

}  // namespace editforge::synth
