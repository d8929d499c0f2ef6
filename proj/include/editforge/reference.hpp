#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include "editforge/image.hpp"

// Serial reference implementations, kept deliberately independent of the
// production kernels: different algorithmic routes, brute force where the
// production code uses recurrences or separable passes. Used by the test
// suite as oracles and by bench_kernels as the baseline.
namespace editforge::ref {

// Full-sort percentile with linear interpolation between closest ranks.
double quantile(std::vector<double> values, double q);

// Exhaustive 256-split scan: recomputes both class weights and class means
// from scratch for every candidate split and maximizes between-class
// variance. Ties resolve to the lowest split. Returns the boundary value
// (k+1)/256, or nullopt when fewer than two bins are occupied.
std::optional<double> otsu_from_histogram(const std::array<std::uint64_t, 256>& h);

// Direct-formula local SSIM: per-pixel 11x11 Gaussian window (sigma 1.5),
// symmetric reflection at borders, covariance computed from the definition
// sum w*(x-mu_x)*(y-mu_y) in a second pass over the window.
GridF ssim_map(const GridF& ya, const GridF& yb);

// Brute-force morphology on 0/1 masks, square structuring element of side
// 2r+1, out-of-grid treated as 0.
MaskGrid erode(const MaskGrid& m, int radius);
MaskGrid dilate(const MaskGrid& m, int radius);
MaskGrid open(const MaskGrid& m, int radius);

// BFS connected components, 8-connectivity. Returns per-component pixel
// counts (unordered).
std::vector<size_t> component_sizes(const MaskGrid& m);

// sqrt( (|M|/|bbox|) * (|largest component|/|M|) ); 0 for an empty mask.
double compactness(const MaskGrid& m);

// Two-pass Pearson correlation (means first, then centered moments).
std::optional<double> pearson(const std::vector<double>& x,
                              const std::vector<double>& y);

// Plain serial CIELAB delta-E map (same color math, straight-line loop).
GridF lab_distance_map(const ImageU8& a, const ImageU8& b);

double grid_mean(const GridF& g);

}  // namespace editforge::ref
