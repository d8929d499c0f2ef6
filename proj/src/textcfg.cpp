#include "editforge/textcfg.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "editforge/common.hpp"

namespace editforge {

const CfgSection* CfgFile::find(const std::string& name) const {
  for (const auto& s : sections)
    if (s.name == name) return &s;
  return nullptr;
}

CfgFile parse_cfg(const std::string& content, const std::string& what) {
  CfgFile out;
  std::istringstream in(content);
  std::string raw;
  int lineno = 0;
  CfgSection* cur = nullptr;
  while (std::getline(in, raw)) {
    ++lineno;
    if (!raw.empty() && raw.back() == '\r') raw.pop_back();
    std::string line = trim(raw);
    if (line.empty() || line[0] == '#') continue;
    if (line.front() == '[' && line.back() == ']') {
      out.sections.push_back({trim(line.substr(1, line.size() - 2)), {}});
      cur = &out.sections.back();
      continue;
    }
    if (cur) {
      cur->items.push_back({lineno, line});
      continue;
    }
    size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(what + ":" + std::to_string(lineno) +
                        ": expected key = value before first section");
    std::string key = trim(line.substr(0, eq));
    std::string val = trim(line.substr(eq + 1));
    if (val.size() >= 2 && val.front() == '"' && val.back() == '"')
      val = val.substr(1, val.size() - 2);
    out.top_kv[key] = val;
  }
  auto it = out.top_kv.find("version");
  if (it == out.top_kv.end() || it->second.empty())
    throw ConfigError(what + ": missing version field");
  out.version = it->second;
  return out;
}

CfgFile load_cfg(const std::string& path) {
  return parse_cfg(read_file(path), path);
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path);
  out << content;
  if (!out) throw DataError("short write to " + path);
}

std::string default_config_dir() {
  if (const char* env = std::getenv("EDITFORGE_CONFIG_DIR"); env && *env)
    return env;
  return std::string(EDITFORGE_SOURCE_DIR) + "/config";
}

}  // namespace editforge
