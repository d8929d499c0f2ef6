#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

namespace editforge {

// Minimal line-oriented config format shared by the wordlist, rule, label-map
// and template files:
//
//   # comment
//   version = "v1.0"
//   key = value
//   [section name]
//   <raw item line>
//
// Top-level `key = value` pairs land in top_kv (quotes stripped). Lines inside
// sections are kept verbatim for the owning module to interpret. A `version`
// key is mandatory.
struct CfgLine {
  int lineno = 0;
  std::string text;
};

struct CfgSection {
  std::string name;
  std::vector<CfgLine> items;
};

struct CfgFile {
  std::string version;
  std::map<std::string, std::string> top_kv;
  std::vector<CfgSection> sections;

  const CfgSection* find(const std::string& name) const;
};

CfgFile parse_cfg(const std::string& content, const std::string& what);
CfgFile load_cfg(const std::string& path);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& content);

// Default config directory: EDITFORGE_CONFIG_DIR env var if set, else the
// config/ directory next to the source tree.
std::string default_config_dir();

}  // namespace editforge
