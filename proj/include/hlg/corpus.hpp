#pragma once

// Corpus ingestion and the content-addressed store.
//
// Manifest: JSON lines, one composition per line:
//   {"id": "c1", "split": "test", "canvas": {"width": W, "height": H},
//    "elements": [{"id": "bg", "asset": "assets/bg.png", "x": 0, "y": 0,
//                  "w": W, "h": H, "hierarchy": 0, "category": "background"}]}
// Asset paths are relative to the manifest's directory.
//
// Store layout:
//   objects/<aa>/<sha256>.png   asset bytes, named by digest
//   records/<id>.json           record with assets replaced by digests
//   index.json                  sorted record list with per-record digests

#include <algorithm>
#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"

#include "hlg/digest.hpp"
#include "hlg/draft.hpp"
#include "hlg/error.hpp"
#include "hlg/png_io.hpp"
#include "hlg/raster.hpp"
#include "hlg/roles.hpp"

namespace hlg {

inline constexpr std::string_view kStoreFormat = "hlg-corpus/1";
inline constexpr std::array<std::string_view, 3> kSplits = {"train", "val", "test"};

struct CorpusElement {
  std::string asset;  // manifest: relative path; store: sha256 hex
  Placement placement;
  std::optional<std::string> category;

  friend bool operator==(const CorpusElement&, const CorpusElement&) = default;
};

struct CorpusRecord {
  std::string id;
  std::string split = "test";
  CanvasSpec canvas;
  std::vector<CorpusElement> elements;

  DraftProtocol truth() const {
    DraftProtocol d;
    d.canvas = canvas;
    for (const auto& e : elements) d.placements.push_back(e.placement);
    return d;
  }

  // Roles for elements whose category names a known role.
  RoleMap category_roles() const {
    RoleMap m;
    for (const auto& e : elements)
      if (e.category)
        if (auto r = role_from_string(*e.category)) m[e.placement.element_id] = *r;
    return m;
  }

  friend bool operator==(const CorpusRecord&, const CorpusRecord&) = default;
};

struct SplitCounts {
  long long train = 0, val = 0, test = 0;

  long long& operator[](std::string_view split) {
    if (split == "train") return train;
    if (split == "val") return val;
    return test;
  }
  long long total() const { return train + val + test; }
  friend bool operator==(const SplitCounts&, const SplitCounts&) = default;
};

inline nlohmann::ordered_json to_json(const SplitCounts& c) {
  return {{"train", c.train}, {"val", c.val}, {"test", c.test}};
}

// Ids double as file names inside the store.
inline bool safe_record_id(std::string_view id) {
  if (id.empty() || id.size() > 200 || id == "." || id == "..") return false;
  return std::all_of(id.begin(), id.end(), [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.';
  });
}

// Schema and invariant check of one record; errors carry the JSON path.
inline CorpusRecord record_from_json(const nlohmann::json& j) {
  detail::require_keys(j, "$", {"id", "canvas", "elements"}, {"split"});
  CorpusRecord r;
  if (!j.at("id").is_string()) throw SchemaError("$.id", "expected string");
  r.id = j.at("id").get<std::string>();
  if (!safe_record_id(r.id)) throw SchemaError("$.id", "id must match [A-Za-z0-9._-]+");
  if (j.contains("split")) {
    if (!j.at("split").is_string()) throw SchemaError("$.split", "expected string");
    r.split = j.at("split").get<std::string>();
    if (std::find(kSplits.begin(), kSplits.end(), r.split) == kSplits.end())
      throw SchemaError("$.split", "must be one of train, val, test");
  }
  const auto& canvas = j.at("canvas");
  detail::require_keys(canvas, "$.canvas", {"width", "height"});
  r.canvas.width = detail::require_int(canvas.at("width"), "$.canvas.width");
  r.canvas.height = detail::require_int(canvas.at("height"), "$.canvas.height");
  const auto& els = j.at("elements");
  if (!els.is_array()) throw SchemaError("$.elements", "expected array");
  for (std::size_t i = 0; i < els.size(); ++i) {
    const std::string at = "$.elements[" + std::to_string(i) + "]";
    const auto& e = els[i];
    detail::require_keys(e, at, {"id", "asset", "x", "y", "w", "h", "hierarchy"}, {"category"});
    if (!e.at("id").is_string()) throw SchemaError(at + ".id", "expected string");
    if (!e.at("asset").is_string()) throw SchemaError(at + ".asset", "expected string");
    CorpusElement ce;
    ce.asset = e.at("asset").get<std::string>();
    ce.placement.element_id = e.at("id").get<std::string>();
    ce.placement.x = detail::require_int(e.at("x"), at + ".x");
    ce.placement.y = detail::require_int(e.at("y"), at + ".y");
    ce.placement.w = detail::require_int(e.at("w"), at + ".w");
    ce.placement.h = detail::require_int(e.at("h"), at + ".h");
    ce.placement.hierarchy = detail::require_int(e.at("hierarchy"), at + ".hierarchy");
    if (e.contains("category")) {
      if (!e.at("category").is_string()) throw SchemaError(at + ".category", "expected string");
      ce.category = e.at("category").get<std::string>();
    }
    r.elements.push_back(std::move(ce));
  }
  try {
    validate(r.truth());
  } catch (const InvariantError& e) {
    // report element paths rather than draft layer paths
    std::string path = e.path();
    if (path.rfind("$.layers", 0) == 0) path.replace(0, 8, "$.elements");
    throw InvariantError(path, std::string(e.what()).substr(e.path().size() + 2));
  }
  return r;
}

inline nlohmann::ordered_json to_json(const CorpusRecord& r) {
  nlohmann::ordered_json j;
  j["id"] = r.id;
  j["split"] = r.split;
  j["canvas"] = {{"width", r.canvas.width}, {"height", r.canvas.height}};
  j["elements"] = nlohmann::ordered_json::array();
  for (const auto& e : r.elements) {
    nlohmann::ordered_json el;
    el["id"] = e.placement.element_id;
    el["asset"] = e.asset;
    el["x"] = e.placement.x;
    el["y"] = e.placement.y;
    el["w"] = e.placement.w;
    el["h"] = e.placement.h;
    el["hierarchy"] = e.placement.hierarchy;
    if (e.category) el["category"] = *e.category;
    j["elements"].push_back(std::move(el));
  }
  return j;
}

struct IndexEntry {
  std::string id;
  std::string split;
  std::string digest;  // sha256 of the record file
};

struct IngestSummary {
  SplitCounts counts;
  std::size_t objects = 0;
  std::string store_hash;
};

namespace detail {

inline std::filesystem::path object_path(const std::filesystem::path& store, std::string_view hex) {
  return store / "objects" / std::string(hex.substr(0, 2)) / (std::string(hex) + ".png");
}

inline std::string dump_canonical(const nlohmann::ordered_json& j) { return j.dump(2) + "\n"; }

}  // namespace detail

// Validates every line before writing anything. The store directory must
// not already hold an index.
inline IngestSummary ingest(const std::filesystem::path& manifest, const std::filesystem::path& store) {
  namespace fs = std::filesystem;
  const std::string text = read_file(manifest);
  const fs::path base = manifest.parent_path();

  std::vector<CorpusRecord> records;
  std::map<std::string, std::size_t, std::less<>> first_line;
  std::map<std::string, std::string, std::less<>> blobs;  // digest -> bytes
  std::size_t line_no = 0, pos = 0;
  while (pos < text.size()) {
    auto nl = text.find('\n', pos);
    if (nl == std::string::npos) nl = text.size();
    std::string_view line(text.data() + pos, nl - pos);
    pos = nl + 1;
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
    CorpusRecord rec;
    try {
      rec = record_from_json(nlohmann::json::parse(line));
    } catch (const nlohmann::json::parse_error& e) {
      throw ManifestError(line_no, std::string("malformed JSON: ") + e.what());
    } catch (const PathError& e) {
      throw ManifestError(line_no, std::string(e.kind()) + " " + e.what());
    }
    if (auto [it, fresh] = first_line.emplace(rec.id, line_no); !fresh)
      throw ManifestError(line_no, "duplicate composition id '" + rec.id + "' (first seen on line " +
                                       std::to_string(it->second) + ")");
    for (auto& e : rec.elements) {
      const fs::path asset = base / e.asset;
      std::string bytes;
      try {
        bytes = read_file(asset);
        (void)decode_png(as_bytes(bytes));
      } catch (const IoError&) {
        throw ManifestError(line_no, "missing asset '" + e.asset + "' for element '" + e.placement.element_id + "'");
      } catch (const DecodeError& err) {
        throw ManifestError(line_no, "asset '" + e.asset + "' is not a readable PNG: " + err.what());
      }
      e.asset = sha256_hex(bytes);
      blobs.emplace(e.asset, std::move(bytes));
    }
    records.push_back(std::move(rec));
  }
  if (records.empty()) throw EmptyCorpus("manifest '" + manifest.string() + "' holds no records");

  if (fs::exists(store / "index.json")) throw IoError("store '" + store.string() + "' already has an index");
  for (const auto& [hex, bytes] : blobs) {
    const auto p = detail::object_path(store, hex);
    if (!fs::exists(p)) write_file(p, bytes);
  }
  std::sort(records.begin(), records.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
  IngestSummary summary;
  nlohmann::ordered_json index;
  index["format"] = kStoreFormat;
  index["records"] = nlohmann::ordered_json::array();
  for (const auto& r : records) {
    const std::string body = detail::dump_canonical(to_json(r));
    write_file(store / "records" / (r.id + ".json"), body);
    index["records"].push_back({{"id", r.id}, {"split", r.split}, {"sha256", sha256_hex(body)}});
    ++summary.counts[r.split];
  }
  index["counts"] = to_json(summary.counts);
  const std::string index_body = detail::dump_canonical(index);
  write_file(store / "index.json", index_body);
  summary.objects = blobs.size();
  summary.store_hash = sha256_hex(index_body);
  return summary;
}

class CorpusStore {
 public:
  static CorpusStore open(const std::filesystem::path& dir) {
    CorpusStore s;
    s.dir_ = dir;
    const std::string body = read_file(dir / "index.json");
    s.hash_ = sha256_hex(body);
    nlohmann::json index;
    try {
      index = nlohmann::json::parse(body);
      if (index.at("format").get<std::string>() != kStoreFormat) throw IoError("unsupported store format");
      for (const auto& r : index.at("records")) {
        IndexEntry e{r.at("id").get<std::string>(), r.at("split").get<std::string>(),
                     r.at("sha256").get<std::string>()};
        if (!safe_record_id(e.id)) throw IoError("bad record id in index");
        s.counts_[e.split] += 1;
        s.entries_.push_back(std::move(e));
      }
    } catch (const nlohmann::json::exception& e) {
      throw IoError("corrupt store index '" + (dir / "index.json").string() + "': " + e.what());
    }
    return s;
  }

  const std::filesystem::path& dir() const { return dir_; }
  // sha256 of index.json; the index pins every record digest, and records
  // pin every asset digest.
  const std::string& hash() const { return hash_; }
  const std::vector<IndexEntry>& entries() const { return entries_; }
  const SplitCounts& counts() const { return counts_; }

  CorpusRecord load(std::string_view id) const {
    auto it = std::find_if(entries_.begin(), entries_.end(), [&](const IndexEntry& e) { return e.id == id; });
    if (it == entries_.end()) throw IdMismatch("no record '" + std::string(id) + "' in store");
    const std::string body = read_file(dir_ / "records" / (it->id + ".json"));
    if (sha256_hex(body) != it->digest) throw IoError("record '" + it->id + "' does not match its digest");
    try {
      return record_from_json(nlohmann::json::parse(body));
    } catch (const nlohmann::json::exception& e) {
      throw IoError("corrupt record '" + it->id + "': " + e.what());
    }
  }

  AssetMap assets(const CorpusRecord& r) const {
    AssetMap m;
    for (const auto& e : r.elements) {
      const std::string bytes = read_file(detail::object_path(dir_, e.asset));
      if (sha256_hex(bytes) != e.asset) throw IoError("object " + e.asset + " does not match its digest");
      m.emplace(e.placement.element_id, decode_png(as_bytes(bytes)));
    }
    return m;
  }

 private:
  std::filesystem::path dir_;
  std::string hash_;
  std::vector<IndexEntry> entries_;
  SplitCounts counts_;
};

// One id per line; blank lines and '#' comments ignored.
inline std::set<std::string> parse_include_list(std::string_view text) {
  std::set<std::string> ids;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    std::string_view line = text.substr(pos, nl - pos);
    pos = nl + 1;
    if (auto h = line.find('#'); h != std::string_view::npos) line = line.substr(0, h);
    const auto b = line.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) continue;
    const auto e = line.find_last_not_of(" \t\r");
    ids.emplace(line.substr(b, e - b + 1));
  }
  return ids;
}

}  // namespace hlg
