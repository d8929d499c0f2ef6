#include "editforge/common.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>

namespace editforge {

const std::vector<Category>& all_categories() {
  static const std::vector<Category> v = {
      Category::object_addition,  Category::object_removal,
      Category::object_replacement, Category::attribute_change,
      Category::style_transfer,  Category::photometric,
      Category::scene_transformation, Category::background_change,
      Category::text_edit,       Category::geometric,
      Category::human_centric,   Category::other,
  };
  return v;
}

const std::vector<SpatialDescriptor>& all_descriptors() {
  static const std::vector<SpatialDescriptor> v = {
      SpatialDescriptor::whole_image, SpatialDescriptor::upper_left,
      SpatialDescriptor::upper_right, SpatialDescriptor::lower_left,
      SpatialDescriptor::lower_right, SpatialDescriptor::centered,
      SpatialDescriptor::scattered,   SpatialDescriptor::alignment_failed,
  };
  return v;
}

const std::vector<Bin>& all_bins() {
  static const std::vector<Bin> v = {Bin::easy, Bin::medium, Bin::hard};
  return v;
}

std::string to_string(SourceDataset v) {
  switch (v) {
    case SourceDataset::pico_banana: return "pico_banana";
    case SourceDataset::magicbrush: return "magicbrush";
    case SourceDataset::synthetic: return "synthetic";
  }
  return "?";
}

std::string to_string(Scope v) {
  switch (v) {
    case Scope::local: return "local";
    case Scope::global: return "global";
    case Scope::ambiguous: return "ambiguous";
    case Scope::alignment_failed: return "alignment_failed";
  }
  return "?";
}

std::string to_string(Signal v) {
  switch (v) {
    case Signal::lab: return "lab";
    case Signal::ssim: return "ssim";
    case Signal::perceptual: return "perceptual";
  }
  return "?";
}

std::string to_string(ScorerVersion v) {
  return v == ScorerVersion::v1 ? "v1" : "v2";
}

std::string to_string(Bin v) {
  switch (v) {
    case Bin::easy: return "easy";
    case Bin::medium: return "medium";
    case Bin::hard: return "hard";
  }
  return "?";
}

std::string to_string(Category v) {
  switch (v) {
    case Category::object_addition: return "object_addition";
    case Category::object_removal: return "object_removal";
    case Category::object_replacement: return "object_replacement";
    case Category::attribute_change: return "attribute_change";
    case Category::style_transfer: return "style_transfer";
    case Category::photometric: return "photometric";
    case Category::scene_transformation: return "scene_transformation";
    case Category::background_change: return "background_change";
    case Category::text_edit: return "text_edit";
    case Category::geometric: return "geometric";
    case Category::human_centric: return "human_centric";
    case Category::other: return "other";
  }
  return "?";
}

std::string to_string(ClassSource v) {
  switch (v) {
    case ClassSource::dataset_label: return "dataset_label";
    case ClassSource::rule_based: return "rule_based";
    case ClassSource::fallback: return "fallback";
  }
  return "?";
}

std::string to_string(SpatialDescriptor v) {
  switch (v) {
    case SpatialDescriptor::whole_image: return "whole_image";
    case SpatialDescriptor::upper_left: return "upper_left";
    case SpatialDescriptor::upper_right: return "upper_right";
    case SpatialDescriptor::lower_left: return "lower_left";
    case SpatialDescriptor::lower_right: return "lower_right";
    case SpatialDescriptor::centered: return "centered";
    case SpatialDescriptor::scattered: return "scattered";
    case SpatialDescriptor::alignment_failed: return "alignment_failed";
  }
  return "?";
}

namespace {
template <typename T>
std::optional<T> parse_enum(const std::string& s, const std::vector<T>& values) {
  for (T v : values)
    if (to_string(v) == s) return v;
  return std::nullopt;
}
}  // namespace

std::optional<SourceDataset> parse_source_dataset(const std::string& s) {
  return parse_enum<SourceDataset>(
      s, {SourceDataset::pico_banana, SourceDataset::magicbrush,
          SourceDataset::synthetic});
}

std::optional<Scope> parse_scope(const std::string& s) {
  return parse_enum<Scope>(s, {Scope::local, Scope::global, Scope::ambiguous,
                               Scope::alignment_failed});
}

std::optional<Signal> parse_signal(const std::string& s) {
  return parse_enum<Signal>(s, {Signal::lab, Signal::ssim, Signal::perceptual});
}

std::optional<ScorerVersion> parse_scorer_version(const std::string& s) {
  return parse_enum<ScorerVersion>(s, {ScorerVersion::v1, ScorerVersion::v2});
}

std::optional<Bin> parse_bin(const std::string& s) {
  return parse_enum<Bin>(s, all_bins());
}

std::optional<Category> parse_category(const std::string& s) {
  return parse_enum<Category>(s, all_categories());
}

std::optional<ClassSource> parse_class_source(const std::string& s) {
  return parse_enum<ClassSource>(
      s, {ClassSource::dataset_label, ClassSource::rule_based,
          ClassSource::fallback});
}

std::optional<SpatialDescriptor> parse_spatial(const std::string& s) {
  return parse_enum<SpatialDescriptor>(s, all_descriptors());
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return s;
}

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  size_t start = 0;
  while (true) {
    size_t p = s.find(sep, start);
    if (p == std::string::npos) {
      out.push_back(s.substr(start));
      break;
    }
    out.push_back(s.substr(start, p - start));
    start = p + 1;
  }
  return out;
}

std::string format2(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::string fnv1a64_hex(const std::string& bytes) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(fnv1a64(bytes)));
  return buf;
}

double quantile(std::vector<double> values, double q) {
  if (values.empty()) throw DataError("quantile of empty vector");
  std::sort(values.begin(), values.end());
  if (q <= 0.0) return values.front();
  if (q >= 1.0) return values.back();
  double h = q * static_cast<double>(values.size() - 1);
  size_t lo = static_cast<size_t>(std::floor(h));
  size_t hi = lo + 1 < values.size() ? lo + 1 : lo;
  return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

}  // namespace editforge
