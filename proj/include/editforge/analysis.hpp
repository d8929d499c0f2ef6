#pragma once

#include <array>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "editforge/common.hpp"
#include "editforge/difficulty.hpp"
#include "editforge/records.hpp"

namespace editforge::analysis {

// --- routing-threshold sweep -------------------------------------------------
// For each candidate t: the fraction of pairs whose combined diff mean
// exceeds t (exactly count/n). This counts only the mean-vs-threshold
// shortcut — masks that still reach global scope through thresholding and
// area are not simulated — so the rate is a lower bound on global routing.
struct SweepRow {
  double threshold = 0.0;
  double path1_global_rate = 0.0;
  size_t n_total = 0;
};

std::vector<SweepRow> sweep_thresholds(const std::vector<double>& diff_means,
                                       const std::vector<double>& candidates);

// Header "threshold,path1_global_rate,n_total", one row per candidate,
// shortest round-trip float formatting.
std::string sweep_csv(const std::vector<SweepRow>& rows);

// Candidate whose rate lands closest to target; ties pick the lower threshold.
double calibrate_tau(const std::vector<double>& diff_means,
                     std::vector<double> candidates, double target_rate = 0.30);

// Consecutive deltas over an ordered list of signal stacks, e.g.
// "(dtau=+0.04, dcdm=+0.036)". Verifies threshold drift tracks mean drift.
struct StackCalibration {
  std::string stack_name;
  double cdm_mean = 0.0;
  double tau = 0.0;
};
std::vector<std::string> calibration_drift_lines(
    const std::vector<StackCalibration>& stacks);

// --- component correlation ---------------------------------------------------
// Single-pass accumulation; the reference library recomputes two-pass.
std::optional<double> pearson(const std::vector<double>& x,
                              const std::vector<double>& y);

struct ComponentSample {
  double s_struct = 0.0;
  double s_perc = 0.0;
  double s_loc = 0.0;
  double s_instr = 0.0;
  std::optional<double> s_compact;
};

struct CorrelationReport {
  // Order: s_struct, s_perc, s_loc, s_instr.
  std::array<std::array<std::optional<double>, 4>, 4> matrix;
  // All pairwise |r| among the magnitude trio (struct, perc, loc) >= 0.6.
  bool magnitude_collapse = false;
  std::optional<double> r_struct_compact;
};

CorrelationReport correlation_analysis(const std::vector<ComponentSample>& samples);

// --- scorer ablation ----------------------------------------------------------
struct AblationReport {
  double sigma_v1 = 0.0;
  double sigma_v2 = 0.0;
  double widening_pct = 0.0;  // (sigma_v2 - sigma_v1) / sigma_v1 * 100
  std::vector<double> scores_v1;
  std::vector<double> scores_v2;
};

// Both scorers on identical component inputs (v1 inputs clamped to [0,1]).
AblationReport ablation_report(const std::vector<ComponentSample>& samples,
                               const difficulty::WeightsV1& w1 = {},
                               const difficulty::WeightsV2& w2 = {});

double population_sigma(const std::vector<double>& values);

// --- distributions ------------------------------------------------------------
struct DistributionStats {
  size_t n = 0;
  double mean = 0.0;
  double sigma = 0.0;  // population
  double min = 0.0;
  double max = 0.0;
  double p33 = 0.0;
  double p66 = 0.0;
  std::array<size_t, 50> histogram{};  // 50 bins over [0,1]
};

DistributionStats distribution_stats(const std::vector<double>& values);
std::string distribution_csv(const DistributionStats& s);

// --- category x difficulty crosstab -------------------------------------------
struct CrosstabRow {
  Category category = Category::other;
  size_t n = 0;
  std::array<size_t, 3> counts{};   // easy, medium, hard
  std::array<double, 3> percents{};  // row percentages (sum to 100)
};

// One row per category in enum order, joined on triplet_id. Categories with
// no rows keep n = 0 and render as "---".
std::vector<CrosstabRow> crosstab(const std::vector<CategoryRecord>& cats,
                                  const std::vector<DifficultyRecord>& diffs);

std::string crosstab_csv(const std::vector<CrosstabRow>& rows);
std::string crosstab_text(const std::vector<CrosstabRow>& rows);

// Shortest round-trip decimal rendering (std::to_chars).
std::string format_shortest(double v);

}  // namespace editforge::analysis
