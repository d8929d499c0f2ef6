#include "editforge/analysis.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <map>

namespace editforge::analysis {

std::string format_shortest(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

std::vector<SweepRow> sweep_thresholds(const std::vector<double>& diff_means,
                                       const std::vector<double>& candidates) {
  if (diff_means.empty()) throw DataError("sweep: no diff means");
  std::vector<SweepRow> rows;
  rows.reserve(candidates.size());
  for (double t : candidates) {
    size_t over = 0;
    for (double v : diff_means)
      if (v > t) ++over;
    rows.push_back({t, static_cast<double>(over) /
                           static_cast<double>(diff_means.size()),
                    diff_means.size()});
  }
  return rows;
}

std::string sweep_csv(const std::vector<SweepRow>& rows) {
  std::string out = "threshold,path1_global_rate,n_total\n";
  for (const SweepRow& r : rows)
    out += format_shortest(r.threshold) + "," +
           format_shortest(r.path1_global_rate) + "," +
           std::to_string(r.n_total) + "\n";
  return out;
}

double calibrate_tau(const std::vector<double>& diff_means,
                     std::vector<double> candidates, double target_rate) {
  if (candidates.empty()) throw ConfigError("calibrate_tau: no candidates");
  std::sort(candidates.begin(), candidates.end());
  auto rows = sweep_thresholds(diff_means, candidates);
  double best_t = rows.front().threshold;
  double best_err = std::abs(rows.front().path1_global_rate - target_rate);
  for (const SweepRow& r : rows) {
    double err = std::abs(r.path1_global_rate - target_rate);
    if (err < best_err) {  // strict: ties keep the earlier (lower) threshold
      best_err = err;
      best_t = r.threshold;
    }
  }
  return best_t;
}

std::vector<std::string> calibration_drift_lines(
    const std::vector<StackCalibration>& stacks) {
  std::vector<std::string> out;
  for (size_t i = 1; i < stacks.size(); ++i) {
    char buf[96];
    std::snprintf(buf, sizeof buf, "%s -> %s: (dtau=%+.2f, dcdm=%+.3f)",
                  stacks[i - 1].stack_name.c_str(), stacks[i].stack_name.c_str(),
                  stacks[i].tau - stacks[i - 1].tau,
                  stacks[i].cdm_mean - stacks[i - 1].cdm_mean);
    out.push_back(buf);
  }
  return out;
}

std::optional<double> pearson(const std::vector<double>& x,
                              const std::vector<double>& y) {
  const size_t n = x.size();
  if (n == 0 || n != y.size()) return std::nullopt;
  double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
  for (size_t i = 0; i < n; ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    syy += y[i] * y[i];
    sxy += x[i] * y[i];
  }
  double nn = static_cast<double>(n);
  double cov = sxy - sx * sy / nn;
  double vx = sxx - sx * sx / nn;
  double vy = syy - sy * sy / nn;
  if (vx <= 0.0 || vy <= 0.0) return std::nullopt;
  return cov / std::sqrt(vx * vy);
}

CorrelationReport correlation_analysis(const std::vector<ComponentSample>& samples) {
  if (samples.size() < 30)
    throw DataError("correlation_analysis: need at least 30 samples, got " +
                    std::to_string(samples.size()));
  CorrelationReport rep;
  std::array<std::vector<double>, 4> cols;
  std::vector<double> compact;
  bool have_compact = !samples.empty();
  for (const ComponentSample& s : samples) {
    cols[0].push_back(s.s_struct);
    cols[1].push_back(s.s_perc);
    cols[2].push_back(s.s_loc);
    cols[3].push_back(s.s_instr);
    if (s.s_compact)
      compact.push_back(*s.s_compact);
    else
      have_compact = false;
  }
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j)
      rep.matrix[i][j] = i == j ? std::optional<double>(1.0)
                                : pearson(cols[i], cols[j]);
  bool collapse = true;
  for (int i = 0; i < 3 && collapse; ++i)
    for (int j = i + 1; j < 3 && collapse; ++j) {
      auto r = rep.matrix[i][j];
      if (!r || std::abs(*r) < 0.6) collapse = false;
    }
  rep.magnitude_collapse = collapse && !samples.empty();
  if (have_compact) rep.r_struct_compact = pearson(cols[0], compact);
  return rep;
}

double population_sigma(const std::vector<double>& values) {
  if (values.empty()) return 0.0;
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(values.size());
  double var = 0.0;
  for (double v : values) var += (v - mean) * (v - mean);
  return std::sqrt(var / static_cast<double>(values.size()));
}

AblationReport ablation_report(const std::vector<ComponentSample>& samples,
                               const difficulty::WeightsV1& w1,
                               const difficulty::WeightsV2& w2) {
  if (samples.empty()) throw DataError("ablation: no samples");
  AblationReport rep;
  auto clamp01 = [](double v) { return std::clamp(v, 0.0, 1.0); };
  for (const ComponentSample& s : samples) {
    rep.scores_v1.push_back(difficulty::score_v1(
        clamp01(s.s_struct), clamp01(s.s_perc), clamp01(s.s_loc),
        clamp01(s.s_instr), w1));
    double compact = s.s_compact.value_or(1.0 - s.s_loc);
    rep.scores_v2.push_back(difficulty::score_v2(
        clamp01(s.s_struct), clamp01(compact), clamp01(s.s_instr), w2));
  }
  rep.sigma_v1 = population_sigma(rep.scores_v1);
  rep.sigma_v2 = population_sigma(rep.scores_v2);
  if (rep.sigma_v1 > 0.0)
    rep.widening_pct = (rep.sigma_v2 - rep.sigma_v1) / rep.sigma_v1 * 100.0;
  return rep;
}

DistributionStats distribution_stats(const std::vector<double>& values) {
  if (values.size() < 3)
    throw DataError("distribution_stats: need at least 3 values, got " +
                    std::to_string(values.size()));
  DistributionStats s;
  s.n = values.size();
  s.min = *std::min_element(values.begin(), values.end());
  s.max = *std::max_element(values.begin(), values.end());
  double sum = 0.0;
  for (double v : values) sum += v;
  s.mean = sum / static_cast<double>(s.n);
  s.sigma = population_sigma(values);
  s.p33 = quantile(values, 1.0 / 3.0);
  s.p66 = quantile(values, 2.0 / 3.0);
  for (double v : values) {
    int bin = static_cast<int>(v * 50.0);
    s.histogram[std::clamp(bin, 0, 49)] += 1;
  }
  return s;
}

std::string distribution_csv(const DistributionStats& s) {
  std::string out = "bin_lo,bin_hi,count\n";
  for (int b = 0; b < 50; ++b) {
    out += format_shortest(b / 50.0) + "," + format_shortest((b + 1) / 50.0) +
           "," + std::to_string(s.histogram[b]) + "\n";
  }
  return out;
}

std::vector<CrosstabRow> crosstab(const std::vector<CategoryRecord>& cats,
                                  const std::vector<DifficultyRecord>& diffs) {
  std::map<std::string, Bin> bin_by_id;
  for (const DifficultyRecord& d : diffs) bin_by_id[d.triplet_id] = d.bin;

  std::map<Category, std::array<size_t, 3>> counts;
  for (const CategoryRecord& c : cats) {
    auto it = bin_by_id.find(c.triplet_id);
    if (it == bin_by_id.end()) continue;
    counts[c.category][static_cast<int>(it->second)] += 1;
  }

  std::vector<CrosstabRow> rows;
  for (Category cat : all_categories()) {
    CrosstabRow row;
    row.category = cat;
    auto it = counts.find(cat);
    if (it != counts.end()) {
      row.counts = it->second;
      row.n = row.counts[0] + row.counts[1] + row.counts[2];
      if (row.n > 0)
        for (int b = 0; b < 3; ++b)
          row.percents[b] = 100.0 * static_cast<double>(row.counts[b]) /
                            static_cast<double>(row.n);
    }
    rows.push_back(row);
  }
  return rows;
}

std::string crosstab_csv(const std::vector<CrosstabRow>& rows) {
  std::string out = "category,n,easy_pct,medium_pct,hard_pct\n";
  for (const CrosstabRow& r : rows) {
    out += to_string(r.category) + "," + std::to_string(r.n);
    if (r.n == 0) {
      out += ",---,---,---\n";
      continue;
    }
    for (int b = 0; b < 3; ++b) {
      char buf[16];
      std::snprintf(buf, sizeof buf, ",%.1f", r.percents[b]);
      out += buf;
    }
    out += "\n";
  }
  return out;
}

std::string crosstab_text(const std::vector<CrosstabRow>& rows) {
  std::string out;
  char buf[128];
  std::snprintf(buf, sizeof buf, "%-22s %8s %8s %8s %8s\n", "category", "n",
                "easy%", "med%", "hard%");
  out += buf;
  for (const CrosstabRow& r : rows) {
    if (r.n == 0) {
      std::snprintf(buf, sizeof buf, "%-22s %8zu %8s %8s %8s\n",
                    to_string(r.category).c_str(), r.n, "---", "---", "---");
    } else {
      std::snprintf(buf, sizeof buf, "%-22s %8zu %8.1f %8.1f %8.1f\n",
                    to_string(r.category).c_str(), r.n, r.percents[0],
                    r.percents[1], r.percents[2]);
    }
    out += buf;
  }
  return out;
}

}  // namespace editforge::analysis
