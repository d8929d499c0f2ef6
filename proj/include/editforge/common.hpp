#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace editforge {

// Configuration problems (bad flags, malformed config files). CLI exit code 1.
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& m) : std::runtime_error("config: " + m) {}
};

// Data problems (missing upstream stage, duplicate IDs, unreadable inputs).
// CLI exit code 2.
struct DataError : std::runtime_error {
  explicit DataError(const std::string& m) : std::runtime_error("data: " + m) {}
};

enum class SourceDataset { pico_banana, magicbrush, synthetic };

enum class Scope { local, global, ambiguous, alignment_failed };

enum class Signal { lab, ssim, perceptual };

enum class ScorerVersion { v1, v2 };

enum class Bin { easy, medium, hard };

enum class Category {
  object_addition,
  object_removal,
  object_replacement,
  attribute_change,
  style_transfer,
  photometric,
  scene_transformation,
  background_change,
  text_edit,
  geometric,
  human_centric,
  other,
};

enum class ClassSource { dataset_label, rule_based, fallback };

enum class SpatialDescriptor {
  whole_image,
  upper_left,
  upper_right,
  lower_left,
  lower_right,
  centered,
  scattered,
  alignment_failed,
};

inline constexpr int kNumCategories = 12;

const std::vector<Category>& all_categories();
const std::vector<SpatialDescriptor>& all_descriptors();
const std::vector<Bin>& all_bins();

std::string to_string(SourceDataset v);
std::string to_string(Scope v);
std::string to_string(Signal v);
std::string to_string(ScorerVersion v);
std::string to_string(Bin v);
std::string to_string(Category v);
std::string to_string(ClassSource v);
std::string to_string(SpatialDescriptor v);

std::optional<SourceDataset> parse_source_dataset(const std::string& s);
std::optional<Scope> parse_scope(const std::string& s);
std::optional<Signal> parse_signal(const std::string& s);
std::optional<ScorerVersion> parse_scorer_version(const std::string& s);
std::optional<Bin> parse_bin(const std::string& s);
std::optional<Category> parse_category(const std::string& s);
std::optional<ClassSource> parse_class_source(const std::string& s);
std::optional<SpatialDescriptor> parse_spatial(const std::string& s);

std::string lower(std::string s);
std::string trim(const std::string& s);
std::vector<std::string> split(const std::string& s, char sep);

// printf-style "%.2f", used anywhere a score is rendered into prose.
std::string format2(double v);

// FNV-1a 64-bit over a byte string; stable across runs and platforms.
std::uint64_t fnv1a64(const std::string& bytes);
std::string fnv1a64_hex(const std::string& bytes);

// Linear-interpolation quantile (q in [0,1]) over unsorted values.
// Single shared convention for p99 normalization and tertile cutoffs.
double quantile(std::vector<double> values, double q);

}  // namespace editforge
