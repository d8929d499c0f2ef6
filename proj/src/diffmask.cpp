#include "editforge/diffmask.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "editforge/common.hpp"
#include "editforge/record_store.hpp"

namespace editforge::diffmask {

namespace {

inline int reflect(int i, int n) {
  if (i < 0) return -i - 1;
  if (i >= n) return 2 * n - i - 1;
  return i;
}

inline double srgb_lin(double v) {
  return v <= 0.04045 ? v / 12.92 : std::pow((v + 0.055) / 1.055, 2.4);
}

inline double lab_f(double t) {
  const double d = 6.0 / 29.0;
  return t > d * d * d ? std::cbrt(t) : t / (3.0 * d * d) + 4.0 / 29.0;
}

inline void rgb_to_lab(const std::uint8_t* p, double lab[3]) {
  double r = srgb_lin(p[0] / 255.0);
  double g = srgb_lin(p[1] / 255.0);
  double b = srgb_lin(p[2] / 255.0);
  double X = 0.4124564 * r + 0.3575761 * g + 0.1804375 * b;
  double Y = 0.2126729 * r + 0.7151522 * g + 0.0721750 * b;
  double Z = 0.0193339 * r + 0.1191920 * g + 0.9503041 * b;
  double fx = lab_f(X / 0.95047), fy = lab_f(Y / 1.0), fz = lab_f(Z / 1.08883);
  lab[0] = 116.0 * fy - 16.0;
  lab[1] = 500.0 * (fx - fy);
  lab[2] = 200.0 * (fy - fz);
}

std::vector<double> gaussian11() {
  const double sigma = 1.5;
  std::vector<double> k(11);
  double total = 0.0;
  for (int i = -5; i <= 5; ++i) {
    k[i + 5] = std::exp(-(i * i) / (2.0 * sigma * sigma));
    total += k[i + 5];
  }
  for (double& v : k) v /= total;
  return k;
}

// Separable 11-tap Gaussian with symmetric reflection.
GridF gauss_filter(const GridF& g) {
  static const std::vector<double> K = gaussian11();
  GridF tmp(g.width, g.height), out(g.width, g.height);
#pragma omp parallel for schedule(static)
  for (int r = 0; r < g.height; ++r)
    for (int c = 0; c < g.width; ++c) {
      double s = 0.0;
      for (int j = -5; j <= 5; ++j) s += K[j + 5] * g.at(r, reflect(c + j, g.width));
      tmp.at(r, c) = s;
    }
#pragma omp parallel for schedule(static)
  for (int r = 0; r < g.height; ++r)
    for (int c = 0; c < g.width; ++c) {
      double s = 0.0;
      for (int i = -5; i <= 5; ++i) s += K[i + 5] * tmp.at(reflect(r + i, g.height), c);
      out.at(r, c) = s;
    }
  return out;
}

GridF hadamard(const GridF& a, const GridF& b) {
  GridF out(a.width, a.height);
#pragma omp parallel for schedule(static)
  for (int r = 0; r < a.height; ++r)
    for (int c = 0; c < a.width; ++c) out.at(r, c) = a.at(r, c) * b.at(r, c);
  return out;
}

// Box mean with window side 2r+1, symmetric reflection.
GridF box_mean(const GridF& g, int radius) {
  GridF tmp(g.width, g.height), out(g.width, g.height);
  double inv = 1.0 / (2 * radius + 1);
#pragma omp parallel for schedule(static)
  for (int r = 0; r < g.height; ++r)
    for (int c = 0; c < g.width; ++c) {
      double s = 0.0;
      for (int j = -radius; j <= radius; ++j) s += g.at(r, reflect(c + j, g.width));
      tmp.at(r, c) = s * inv;
    }
#pragma omp parallel for schedule(static)
  for (int r = 0; r < g.height; ++r)
    for (int c = 0; c < g.width; ++c) {
      double s = 0.0;
      for (int i = -radius; i <= radius; ++i) s += tmp.at(reflect(r + i, g.height), c);
      out.at(r, c) = s * inv;
    }
  return out;
}

GridF box_downsample(const GridF& g, int factor) {
  if (factor == 1) return g;
  int ow = (g.width + factor - 1) / factor;
  int oh = (g.height + factor - 1) / factor;
  GridF out(ow, oh);
  for (int r = 0; r < oh; ++r)
    for (int c = 0; c < ow; ++c) {
      double s = 0.0;
      int n = 0;
      for (int i = r * factor; i < std::min((r + 1) * factor, g.height); ++i)
        for (int j = c * factor; j < std::min((c + 1) * factor, g.width); ++j) {
          s += g.at(i, j);
          ++n;
        }
      out.at(r, c) = s / n;
    }
  return out;
}

class ProxyBackend final : public PerceptualBackend {
 public:
  GridF diff_map(const ImageU8& a, const ImageU8& b) override {
    GridF ya = luma(a), yb = luma(b);
    GridF acc(a.width, a.height, 0.0);
    for (int octave = 0; octave < 3; ++octave) {
      int factor = 1 << octave;
      GridF da = box_downsample(ya, factor);
      GridF db = box_downsample(yb, factor);
      GridF ca = contrast(da), cb = contrast(db);
#pragma omp parallel for schedule(static)
      for (int r = 0; r < a.height; ++r)
        for (int c = 0; c < a.width; ++c) {
          int rr = std::min(r / factor, da.height - 1);
          int cc = std::min(c / factor, da.width - 1);
          acc.at(r, c) += std::abs(ca.at(rr, cc) - cb.at(rr, cc)) / 3.0;
        }
    }
    return acc;
  }
  std::string identity() const override { return "proxy"; }

 private:
  static GridF contrast(const GridF& y) {
    GridF mean = box_mean(y, 2);
    GridF out(y.width, y.height);
    for (int r = 0; r < y.height; ++r)
      for (int c = 0; c < y.width; ++c) out.at(r, c) = y.at(r, c) - mean.at(r, c);
    return out;
  }
};

}  // namespace

std::unique_ptr<PerceptualBackend> make_proxy_backend() {
  return std::make_unique<ProxyBackend>();
}

AlignResult align_pair(const ImageU8& real, const ImageU8& edited,
                       double max_aspect_dev) {
  AlignResult res;
  if (real.empty() || edited.empty()) return res;
  if (real.width == edited.width && real.height == edited.height) {
    res.ok = true;
    res.real = real;
    res.edited = edited;
    return res;
  }
  double ar_real = static_cast<double>(real.width) / real.height;
  double ar_edit = static_cast<double>(edited.width) / edited.height;
  if (std::abs(ar_edit / ar_real - 1.0) <= max_aspect_dev) {
    res.ok = true;
    res.real = real;
    res.edited = resize_bilinear(edited, real.width, real.height);
    res.resized = true;
    return res;
  }
  return res;
}

GridF lab_distance_map(const ImageU8& a, const ImageU8& b) {
  if (a.width != b.width || a.height != b.height)
    throw DataError("lab_distance_map: dimension mismatch");
  GridF out(a.width, a.height);
#pragma omp parallel for schedule(static)
  for (int r = 0; r < a.height; ++r)
    for (int c = 0; c < a.width; ++c) {
      double la[3], lb[3];
      rgb_to_lab(a.px(r, c), la);
      rgb_to_lab(b.px(r, c), lb);
      double d0 = la[0] - lb[0], d1 = la[1] - lb[1], d2 = la[2] - lb[2];
      out.at(r, c) = std::sqrt(d0 * d0 + d1 * d1 + d2 * d2);
    }
  return out;
}

GridF ssim_map_local(const GridF& ya, const GridF& yb) {
  if (ya.width != yb.width || ya.height != yb.height)
    throw DataError("ssim: dimension mismatch");
  if (std::min(ya.width, ya.height) < 11)
    throw DataError("ssim: image smaller than the 11x11 window");
  const double C1 = 0.01 * 0.01, C2 = 0.03 * 0.03;
  GridF mx = gauss_filter(ya);
  GridF my = gauss_filter(yb);
  GridF mxx = gauss_filter(hadamard(ya, ya));
  GridF myy = gauss_filter(hadamard(yb, yb));
  GridF mxy = gauss_filter(hadamard(ya, yb));
  GridF out(ya.width, ya.height);
#pragma omp parallel for schedule(static)
  for (int r = 0; r < ya.height; ++r)
    for (int c = 0; c < ya.width; ++c) {
      double ux = mx.at(r, c), uy = my.at(r, c);
      double vx = mxx.at(r, c) - ux * ux;
      double vy = myy.at(r, c) - uy * uy;
      double cov = mxy.at(r, c) - ux * uy;
      out.at(r, c) = ((2 * ux * uy + C1) * (2 * cov + C2)) /
                     ((ux * ux + uy * uy + C1) * (vx + vy + C2));
    }
  return out;
}

GridF dssim_from_ssim(const GridF& ssim) {
  GridF out(ssim.width, ssim.height);
#pragma omp parallel for schedule(static)
  for (int r = 0; r < ssim.height; ++r)
    for (int c = 0; c < ssim.width; ++c)
      out.at(r, c) = std::clamp(1.0 - ssim.at(r, c), 0.0, 1.0);
  return out;
}

NormalizeResult normalize_p99(const GridF& raw) {
  NormalizeResult res;
  res.map = GridF(raw.width, raw.height, 0.0);
  // nth_element route; the test-side oracle sorts the whole grid instead.
  std::vector<double> vals = raw.v;
  const size_t n = vals.size();
  if (n == 0) return res;
  double h = 0.99 * static_cast<double>(n - 1);
  size_t lo = static_cast<size_t>(h);
  std::nth_element(vals.begin(), vals.begin() + lo, vals.end());
  double xlo = vals[lo];
  double p99 = xlo;
  if (lo + 1 < n) {
    double xhi = *std::min_element(vals.begin() + lo + 1, vals.end());
    p99 = xlo + (h - static_cast<double>(lo)) * (xhi - xlo);
  }
  if (p99 <= 0.0) {
    res.p99 = 0.0;
    return res;  // all-zero map stays all-zero
  }
  res.p99 = p99;
#pragma omp parallel for schedule(static)
  for (int r = 0; r < raw.height; ++r)
    for (int c = 0; c < raw.width; ++c)
      res.map.at(r, c) = std::min(raw.at(r, c) / p99, 1.0);
  return res;
}

GridF combine_max(const std::vector<const GridF*>& maps) {
  if (maps.empty()) throw DataError("combine_max: no maps");
  GridF out(maps[0]->width, maps[0]->height, 0.0);
  for (const GridF* m : maps) {
    if (m->width != out.width || m->height != out.height)
      throw DataError("combine_max: dimension mismatch");
#pragma omp parallel for schedule(static)
    for (int r = 0; r < out.height; ++r)
      for (int c = 0; c < out.width; ++c)
        out.at(r, c) = std::max(out.at(r, c), m->at(r, c));
  }
  return out;
}

double grid_mean(const GridF& g) {
  if (g.v.empty()) return 0.0;
  std::vector<double> row_sums(g.height, 0.0);
#pragma omp parallel for schedule(static)
  for (int r = 0; r < g.height; ++r) {
    double s = 0.0;
    for (int c = 0; c < g.width; ++c) s += g.at(r, c);
    row_sums[r] = s;
  }
  double total = 0.0;
  for (double s : row_sums) total += s;  // fixed fold order
  return total / static_cast<double>(g.v.size());
}

std::array<std::uint64_t, 256> histogram256(const GridF& g) {
  std::array<std::uint64_t, 256> h{};
  for (double v : g.v) {
    int bin = static_cast<int>(v * 256.0);
    h[std::clamp(bin, 0, 255)] += 1;
  }
  return h;
}

OtsuResult otsu_threshold(const GridF& g) {
  OtsuResult res;
  auto h = histogram256(g);
  std::uint64_t total = 0;
  int occupied = 0;
  double global_sum = 0.0;
  for (int b = 0; b < 256; ++b) {
    total += h[b];
    if (h[b]) ++occupied;
    global_sum += static_cast<double>(h[b]) * ((b + 0.5) / 256.0);
  }
  if (occupied < 2) {
    res.degenerate = true;
    return res;
  }
  // Cumulative recurrence over ascending splits; strict > keeps the lowest
  // split on ties. The oracle recomputes every split from scratch.
  double best = -1.0;
  int best_k = -1;
  std::uint64_t n0 = 0;
  double s0 = 0.0;
  for (int k = 0; k + 1 < 256; ++k) {
    n0 += h[k];
    s0 += static_cast<double>(h[k]) * ((k + 0.5) / 256.0);
    std::uint64_t n1 = total - n0;
    if (n0 == 0 || n1 == 0) continue;
    double mu0 = s0 / static_cast<double>(n0);
    double mu1 = (global_sum - s0) / static_cast<double>(n1);
    double between =
        static_cast<double>(n0) * static_cast<double>(n1) * (mu1 - mu0) * (mu1 - mu0);
    if (between > best) {
      best = between;
      best_k = k;
    }
  }
  if (best_k < 0) {
    res.degenerate = true;
    return res;
  }
  res.threshold = (best_k + 1) / 256.0;
  return res;
}

MaskGrid binarize(const GridF& g, double threshold) {
  MaskGrid m(g.width, g.height);
#pragma omp parallel for schedule(static)
  for (int r = 0; r < g.height; ++r)
    for (int c = 0; c < g.width; ++c) m.at(r, c) = g.at(r, c) >= threshold ? 1 : 0;
  return m;
}

namespace {

// Separable binary morphology via run-length aware passes: rows then columns.
// Out-of-grid counts as 0 for erosion and contributes nothing to dilation.
MaskGrid erode1d_rows(const MaskGrid& m, int radius) {
  MaskGrid out(m.width, m.height, 0);
#pragma omp parallel for schedule(static)
  for (int r = 0; r < m.height; ++r)
    for (int c = 0; c < m.width; ++c) {
      std::uint8_t all = 1;
      for (int j = -radius; j <= radius; ++j) {
        int cc = c + j;
        if (cc < 0 || cc >= m.width || m.at(r, cc) == 0) {
          all = 0;
          break;
        }
      }
      out.at(r, c) = all;
    }
  return out;
}

MaskGrid erode1d_cols(const MaskGrid& m, int radius) {
  MaskGrid out(m.width, m.height, 0);
#pragma omp parallel for schedule(static)
  for (int r = 0; r < m.height; ++r)
    for (int c = 0; c < m.width; ++c) {
      std::uint8_t all = 1;
      for (int i = -radius; i <= radius; ++i) {
        int rr = r + i;
        if (rr < 0 || rr >= m.height || m.at(rr, c) == 0) {
          all = 0;
          break;
        }
      }
      out.at(r, c) = all;
    }
  return out;
}

MaskGrid dilate1d_rows(const MaskGrid& m, int radius) {
  MaskGrid out(m.width, m.height, 0);
#pragma omp parallel for schedule(static)
  for (int r = 0; r < m.height; ++r)
    for (int c = 0; c < m.width; ++c) {
      std::uint8_t any = 0;
      for (int j = -radius; j <= radius; ++j) {
        int cc = c + j;
        if (cc >= 0 && cc < m.width && m.at(r, cc)) {
          any = 1;
          break;
        }
      }
      out.at(r, c) = any;
    }
  return out;
}

MaskGrid dilate1d_cols(const MaskGrid& m, int radius) {
  MaskGrid out(m.width, m.height, 0);
#pragma omp parallel for schedule(static)
  for (int r = 0; r < m.height; ++r)
    for (int c = 0; c < m.width; ++c) {
      std::uint8_t any = 0;
      for (int i = -radius; i <= radius; ++i) {
        int rr = r + i;
        if (rr >= 0 && rr < m.height && m.at(rr, c)) {
          any = 1;
          break;
        }
      }
      out.at(r, c) = any;
    }
  return out;
}

}  // namespace

MaskGrid erode(const MaskGrid& m, int radius) {
  if (radius <= 0) return m;
  return erode1d_cols(erode1d_rows(m, radius), radius);
}

MaskGrid dilate(const MaskGrid& m, int radius) {
  if (radius <= 0) return m;
  return dilate1d_cols(dilate1d_rows(m, radius), radius);
}

MaskGrid morphological_open(const MaskGrid& m, int radius) {
  return dilate(erode(m, radius), radius);
}

MaskArtifact generate_mask(const std::string& triplet_id, const ImageU8& real,
                           const ImageU8& edited, const MaskConfig& cfg) {
  MaskArtifact art;
  art.triplet_id = triplet_id;
  for (Signal s : cfg.stack) art.signal_stack.push_back(to_string(s));

  AlignResult aligned = align_pair(real, edited, cfg.max_aspect_dev);
  if (!aligned.ok) {
    art.scope = Scope::alignment_failed;
    art.flags.push_back("alignment_failed");
    return art;
  }
  if (aligned.resized) art.flags.push_back("resized_edited");

  std::unique_ptr<PerceptualBackend> proxy;
  std::vector<GridF> normalized;
  for (Signal s : cfg.stack) {
    GridF raw;
    std::string key;
    switch (s) {
      case Signal::lab:
        raw = lab_distance_map(aligned.real, aligned.edited);
        key = "lab";
        break;
      case Signal::ssim:
        raw = dssim_from_ssim(ssim_map_local(luma(aligned.real), luma(aligned.edited)));
        key = "ssim";
        break;
      case Signal::perceptual: {
        PerceptualBackend* backend = cfg.backend;
        if (!backend) {
          proxy = make_proxy_backend();
          backend = proxy.get();
        }
        raw = backend->diff_map(aligned.real, aligned.edited);
        key = "perceptual:" + backend->identity();
        break;
      }
    }
    NormalizeResult norm = normalize_p99(raw);
    art.per_signal_means[key] = grid_mean(norm.map);
    normalized.push_back(std::move(norm.map));
  }

  std::vector<const GridF*> ptrs;
  for (const GridF& g : normalized) ptrs.push_back(&g);
  GridF combined = combine_max(ptrs);
  art.combined_diff_mean = grid_mean(combined);

  if (art.combined_diff_mean > cfg.tau) {
    art.routing_path = 1;
    art.scope = Scope::global;
    art.mask = MaskGrid(combined.width, combined.height, 1);
    art.mask_area_frac = 1.0;
    art.mask_path = store::mask_png_rel_path(triplet_id);
    return art;
  }

  art.routing_path = 2;
  OtsuResult otsu = otsu_threshold(combined);
  if (otsu.degenerate) {
    art.scope = Scope::ambiguous;
    art.flags.push_back("degenerate_otsu");
    art.mask = MaskGrid(combined.width, combined.height, 0);
    art.mask_area_frac = 0.0;
    art.mask_path = store::mask_png_rel_path(triplet_id);
    return art;
  }
  art.otsu_threshold_used = otsu.threshold;
  MaskGrid mask = morphological_open(binarize(combined, *otsu.threshold),
                                     cfg.opening_radius);
  art.mask_area_frac = mask.area_frac();
  if (art.mask_area_frac > cfg.global_area_frac)
    art.scope = Scope::global;
  else if (art.mask_area_frac < cfg.ambiguous_area_frac)
    art.scope = Scope::ambiguous;
  else
    art.scope = Scope::local;
  art.mask = std::move(mask);
  art.mask_path = store::mask_png_rel_path(triplet_id);
  return art;
}

}  // namespace editforge::diffmask
