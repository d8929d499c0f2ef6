#include "editforge/ingest.hpp"

#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "editforge/common.hpp"
#include "json.hpp"

#define CPPHTTPLIB_NO_EXCEPTIONS
#include "httplib.h"

namespace fs = std::filesystem;
using nlohmann::json;

namespace editforge::ingest {

std::string sanitize_stem(const std::string& filename) {
  std::string stem = fs::path(filename).stem().string();
  std::string out;
  out.reserve(stem.size());
  for (char c : stem) {
    if ((c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_' || c == '-')
      out.push_back(c);
    else if (c >= 'A' && c <= 'Z')
      out.push_back(static_cast<char>(c - 'A' + 'a'));
    else
      out.push_back('_');
  }
  if (out.empty()) out = "unnamed";
  return out;
}

namespace {

// Extension of the URL's path component, if it looks like a short one.
std::string url_extension(const std::string& url) {
  auto q = url.find_first_of("?#");
  std::string path = url.substr(0, q);
  auto slash = path.find_last_of('/');
  auto dot = path.find_last_of('.');
  if (dot == std::string::npos || (slash != std::string::npos && dot < slash))
    return ".bin";
  std::string ext = path.substr(dot);
  if (ext.size() < 2 || ext.size() > 6) return ".bin";
  return ext;
}

bool split_url(const std::string& url, std::string& origin, std::string& path) {
  auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) return false;
  auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) {
    origin = url;
    path = "/";
  } else {
    origin = url.substr(0, path_start);
    path = url.substr(path_start);
  }
  return true;
}

json parse_row(const std::string& line) { return json::parse(line); }

std::string get_str(const json& row, const char* key) {
  auto it = row.find(key);
  if (it == row.end() || !it->is_string()) return {};
  return it->get<std::string>();
}

}  // namespace

std::string download_to_cache(const std::string& url,
                              const std::string& cache_dir, int attempts) {
  if (cache_dir.empty())
    throw ConfigError("download requested without a cache directory");
  fs::create_directories(cache_dir);
  fs::path cached =
      fs::path(cache_dir) / (fnv1a64_hex(url) + url_extension(url));
  if (fs::exists(cached) && fs::file_size(cached) > 0) return cached.string();

  std::string origin, path;
  if (!split_url(url, origin, path)) return {};
  for (int attempt = 0; attempt < attempts; ++attempt) {
    httplib::Client client(origin);
    client.set_connection_timeout(10);
    client.set_read_timeout(30);
    client.set_follow_location(true);
    auto res = client.Get(path);
    if (res && res->status == 200 && !res->body.empty()) {
      fs::path tmp = cached;
      tmp += ".part";
      std::ofstream out(tmp, std::ios::binary);
      out.write(res->body.data(),
                static_cast<std::streamsize>(res->body.size()));
      out.close();
      fs::rename(tmp, cached);
      return cached.string();
    }
  }
  return {};
}

IngestResult ingest_picobanana(const std::string& manifest_path,
                               const AdapterConfig& cfg) {
  std::ifstream in(manifest_path);
  if (!in) throw DataError("cannot open manifest: " + manifest_path);
  fs::path root =
      cfg.dataset_root.empty() ? fs::path(manifest_path).parent_path()
                               : fs::path(cfg.dataset_root);

  IngestResult result;
  // stem -> first lineno that claimed it
  std::map<std::string, int> seen_stems;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    if (cfg.max_rows >= 0 &&
        static_cast<int>(result.triplets.size()) >= cfg.max_rows)
      break;

    json row;
    try {
      row = parse_row(line);
    } catch (const json::exception& e) {
      result.issues.push_back({lineno, std::string("bad json: ") + e.what()});
      continue;
    }
    std::string text = get_str(row, "text");
    std::string output_image = get_str(row, "output_image");
    if (text.empty() || output_image.empty()) {
      result.issues.push_back({lineno, "missing text or output_image"});
      continue;
    }

    std::string stem = sanitize_stem(output_image);
    auto prev = seen_stems.find(stem);
    if (prev != seen_stems.end()) {
      std::ostringstream msg;
      msg << "duplicate output stem '" << stem << "' in " << manifest_path
          << ": rows " << prev->second << " and " << lineno;
      throw DataError(msg.str());
    }

    fs::path edited = root / output_image;
    if (!fs::exists(edited)) {
      result.issues.push_back({lineno, "edited image not found: " + edited.string()});
      continue;
    }

    std::string real_path;
    std::string local_input = get_str(row, "local_input_image");
    if (!local_input.empty()) {
      fs::path p = root / local_input;
      if (fs::exists(p)) real_path = p.string();
    }
    if (real_path.empty()) {
      std::string url = get_str(row, "open_image_input_url");
      if (url.empty()) {
        result.issues.push_back({lineno, "no usable input image"});
        continue;
      }
      if (!cfg.download_missing) {
        result.issues.push_back(
            {lineno, "input missing locally and downloads are disabled"});
        continue;
      }
      real_path = download_to_cache(url, cfg.cache_dir);
      if (real_path.empty()) {
        result.issues.push_back({lineno, "download failed: " + url});
        continue;
      }
    }

    seen_stems.emplace(stem, lineno);
    EditTriplet t;
    t.triplet_id = "picobanana_" + stem;
    t.source_dataset = SourceDataset::pico_banana;
    t.instruction = text;
    t.real_path = real_path;
    t.edited_path = edited.string();
    std::string edit_type = get_str(row, "edit_type");
    if (!edit_type.empty()) t.metadata["source_edit_type"] = edit_type;
    result.triplets.push_back(std::move(t));
  }
  return result;
}

DecodedMask decode_magicbrush_mask(const ImageU8& mask_image,
                                   const ImageU8& target_image) {
  if (mask_image.width != target_image.width ||
      mask_image.height != target_image.height)
    throw DataError("mask dimensions do not match target image");
  const int n = mask_image.width * mask_image.height;
  int black = 0;
  for (int i = 0; i < n; ++i) {
    const unsigned char* p = &mask_image.rgb[3 * static_cast<size_t>(i)];
    if (p[0] == 0 && p[1] == 0 && p[2] == 0) ++black;
  }
  DecodedMask out;
  out.inverted = black * 2 > n;
  out.mask.width = mask_image.width;
  out.mask.height = mask_image.height;
  out.mask.v.assign(static_cast<size_t>(n), 0);
  for (int i = 0; i < n; ++i) {
    const unsigned char* p = &mask_image.rgb[3 * static_cast<size_t>(i)];
    bool is_black = p[0] == 0 && p[1] == 0 && p[2] == 0;
    if (out.inverted) {
      out.mask.v[static_cast<size_t>(i)] = is_black ? 0 : 1;
    } else {
      const unsigned char* t = &target_image.rgb[3 * static_cast<size_t>(i)];
      bool target_black = t[0] == 0 && t[1] == 0 && t[2] == 0;
      out.mask.v[static_cast<size_t>(i)] = (is_black && !target_black) ? 1 : 0;
    }
  }
  out.warned_empty = out.mask.count() == 0;
  return out;
}

IngestResult ingest_magicbrush(const std::string& root, const std::string& split,
                               const std::string& output_root,
                               const AdapterConfig& cfg) {
  fs::path split_dir = fs::path(root) / split;
  fs::path rows_path = split_dir / "rows.jsonl";
  std::ifstream in(rows_path);
  if (!in) throw DataError("cannot open manifest: " + rows_path.string());

  fs::path image_dir = fs::path(output_root) / "images" / "magicbrush";
  fs::path mask_dir = fs::path(output_root) / "masks_gt";
  fs::create_directories(image_dir);
  fs::create_directories(mask_dir);

  IngestResult result;
  std::map<std::string, int> seen_ids;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    if (cfg.max_rows >= 0 &&
        static_cast<int>(result.triplets.size()) >= cfg.max_rows)
      break;

    json row;
    try {
      row = parse_row(line);
    } catch (const json::exception& e) {
      result.issues.push_back({lineno, std::string("bad json: ") + e.what()});
      continue;
    }
    std::string img_id = get_str(row, "img_id");
    std::string instruction = get_str(row, "instruction");
    std::string source_img = get_str(row, "source_img");
    std::string target_img = get_str(row, "target_img");
    std::string mask_img = get_str(row, "mask_img");
    int turn = row.value("turn_index", 0);
    if (img_id.empty() || instruction.empty() || source_img.empty() ||
        target_img.empty() || mask_img.empty() || turn <= 0) {
      result.issues.push_back({lineno, "missing required fields"});
      continue;
    }
    if (cfg.single_turn_only && turn != 1) continue;

    char turn_tag[8];
    std::snprintf(turn_tag, sizeof(turn_tag), "_t%02d", turn);
    std::string id = "magicbrush_" + split + "_" + sanitize_stem(img_id) + turn_tag;
    auto prev = seen_ids.find(id);
    if (prev != seen_ids.end()) {
      std::ostringstream msg;
      msg << "duplicate triplet id '" << id << "': rows " << prev->second
          << " and " << lineno;
      result.issues.push_back({lineno, msg.str()});
      continue;
    }

    try {
      ImageU8 source = read_png_rgb((split_dir / source_img).string());
      ImageU8 target = read_png_rgb((split_dir / target_img).string());
      ImageU8 mask_rgb = read_png_rgb((split_dir / mask_img).string());
      DecodedMask decoded = decode_magicbrush_mask(mask_rgb, target);

      fs::path real_out = image_dir / (id + "_real.png");
      fs::path edited_out = image_dir / (id + "_edited.png");
      fs::path mask_out = mask_dir / (id + ".png");
      write_png_rgb(real_out.string(), source);
      write_png_rgb(edited_out.string(), target);
      write_png_mask(mask_out.string(), decoded.mask);

      EditTriplet t;
      t.triplet_id = id;
      t.source_dataset = SourceDataset::magicbrush;
      t.instruction = instruction;
      t.real_path = real_out.string();
      t.edited_path = edited_out.string();
      t.provided_mask_path = mask_out.string();
      t.metadata["split"] = split;
      t.metadata["turn_index"] = std::to_string(turn);
      t.metadata["source_is_authentic"] = turn == 1 ? "true" : "false";
      if (decoded.inverted) t.metadata["mask_inverted"] = "true";
      if (decoded.warned_empty) {
        t.metadata["mask_empty"] = "true";
        result.issues.push_back({lineno, "decoded mask is empty for " + id});
      }
      seen_ids.emplace(id, lineno);
      result.triplets.push_back(std::move(t));
    } catch (const DataError& e) {
      result.issues.push_back({lineno, e.what()});
      continue;
    }
  }
  return result;
}

IngestResult ingest_synthetic(const std::string& manifest_path,
                              const AdapterConfig& cfg) {
  std::ifstream in(manifest_path);
  if (!in) throw DataError("cannot open manifest: " + manifest_path);
  fs::path root = fs::path(manifest_path).parent_path();

  IngestResult result;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    if (cfg.max_rows >= 0 &&
        static_cast<int>(result.triplets.size()) >= cfg.max_rows)
      break;
    json row;
    try {
      row = parse_row(line);
    } catch (const json::exception& e) {
      result.issues.push_back({lineno, std::string("bad json: ") + e.what()});
      continue;
    }
    std::string id = get_str(row, "triplet_id");
    std::string real_image = get_str(row, "real_image");
    std::string edited_image = get_str(row, "edited_image");
    std::string instruction = get_str(row, "instruction");
    if (id.empty() || real_image.empty() || edited_image.empty() ||
        instruction.empty()) {
      result.issues.push_back({lineno, "missing required fields"});
      continue;
    }
    EditTriplet t;
    t.triplet_id = id;
    t.source_dataset = SourceDataset::synthetic;
    t.instruction = instruction;
    t.real_path = (root / real_image).string();
    t.edited_path = (root / edited_image).string();
    std::string gt_mask = get_str(row, "gt_mask");
    if (!gt_mask.empty()) t.provided_mask_path = (root / gt_mask).string();
    for (const char* key : {"kind", "gt_scope"}) {
      std::string v = get_str(row, key);
      if (!v.empty()) t.metadata[key] = v;
    }
    if (row.contains("magnitude") && row["magnitude"].is_number())
      t.metadata["magnitude"] = format2(row["magnitude"].get<double>());
    result.triplets.push_back(std::move(t));
  }
  return result;
}

}  // namespace editforge::ingest
