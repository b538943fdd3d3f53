#pragma once

// JSON draft protocol: the machine-readable description of a layered
// composition (canvas size plus one placement quintuple per element).
// Canonical text form and the schema are documented in PROTOCOL.md.

#include <algorithm>
#include <cstdint>
#include <limits>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "hlg/error.hpp"

namespace hlg {

struct CanvasSpec {
  int width = 1;
  int height = 1;

  friend bool operator==(const CanvasSpec&, const CanvasSpec&) = default;
};

// (x, y, w, h, hierarchy) for one element. Pixel units, top-left origin,
// y grows downward. x/y may be negative and boxes may extend past the canvas.
struct Placement {
  std::string element_id;
  int x = 0;
  int y = 0;
  int w = 1;
  int h = 1;
  int hierarchy = 0;  // 0 = bottom layer

  long long area() const { return static_cast<long long>(w) * h; }

  friend bool operator==(const Placement&, const Placement&) = default;
};

struct DraftProtocol {
  CanvasSpec canvas;
  std::vector<Placement> placements;
  // Free-form provenance (e.g. the solver's effective config). Null when absent.
  nlohmann::json metadata;

  friend bool operator==(const DraftProtocol&, const DraftProtocol&) = default;
};

// Throws InvariantError naming the offending path when any type invariant
// fails. Paths use the JSON spelling ("$.layers[2].hierarchy").
inline void validate(const DraftProtocol& d) {
  if (d.canvas.width < 1) throw InvariantError("$.canvas.width", "must be >= 1");
  if (d.canvas.height < 1) throw InvariantError("$.canvas.height", "must be >= 1");
  if (d.placements.empty()) throw InvariantError("$.layers", "must contain at least one layer");
  const auto n = d.placements.size();
  std::vector<int> seen_rank(n, -1);
  std::set<std::string_view> ids;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& p = d.placements[i];
    const std::string at = "$.layers[" + std::to_string(i) + "]";
    if (p.element_id.empty()) throw InvariantError(at + ".id", "must be non-empty");
    if (!ids.insert(p.element_id).second)
      throw InvariantError(at + ".id", "duplicate id '" + p.element_id + "'");
    if (p.w < 1) throw InvariantError(at + ".w", "must be >= 1");
    if (p.h < 1) throw InvariantError(at + ".h", "must be >= 1");
    if (p.hierarchy < 0 || static_cast<std::size_t>(p.hierarchy) >= n)
      throw InvariantError(at + ".hierarchy", "ranks must be a permutation of 0.." +
                                                  std::to_string(n - 1));
    if (seen_rank[p.hierarchy] >= 0)
      throw InvariantError(at + ".hierarchy", "duplicate hierarchy " + std::to_string(p.hierarchy) +
                                                  " (also at layers[" +
                                                  std::to_string(seen_rank[p.hierarchy]) + "])");
    seen_rank[p.hierarchy] = static_cast<int>(i);
  }
  if (!d.metadata.is_null() && !d.metadata.is_object())
    throw InvariantError("$.metadata", "must be an object");
}

namespace detail {

inline int require_int(const nlohmann::json& v, const std::string& path) {
  if (!v.is_number_integer()) throw SchemaError(path, "expected integer");
  if (v.is_number_unsigned()) {
    const auto u = v.get<std::uint64_t>();
    if (u > static_cast<std::uint64_t>(std::numeric_limits<int>::max()))
      throw SchemaError(path, "integer out of range");
    return static_cast<int>(u);
  }
  const auto s = v.get<std::int64_t>();
  if (s < std::numeric_limits<int>::min() || s > std::numeric_limits<int>::max())
    throw SchemaError(path, "integer out of range");
  return static_cast<int>(s);
}

inline void require_keys(const nlohmann::json& obj, const std::string& path,
                         std::initializer_list<std::string_view> required,
                         std::initializer_list<std::string_view> optional = {}) {
  if (!obj.is_object()) throw SchemaError(path, "expected object");
  for (auto key : required)
    if (!obj.contains(key)) throw SchemaError(path + "." + std::string(key), "missing required field");
  for (const auto& [key, _] : obj.items()) {
    const bool known = std::find(required.begin(), required.end(), key) != required.end() ||
                       std::find(optional.begin(), optional.end(), key) != optional.end();
    if (!known) throw SchemaError(path + "." + key, "unknown field");
  }
}

}  // namespace detail

// Schema-checks an already-parsed JSON value and validates invariants.
inline DraftProtocol draft_from_json(const nlohmann::json& root) {
  detail::require_keys(root, "$", {"canvas", "layers"}, {"metadata"});
  DraftProtocol d;
  const auto& canvas = root.at("canvas");
  detail::require_keys(canvas, "$.canvas", {"width", "height"});
  d.canvas.width = detail::require_int(canvas.at("width"), "$.canvas.width");
  d.canvas.height = detail::require_int(canvas.at("height"), "$.canvas.height");

  const auto& layers = root.at("layers");
  if (!layers.is_array()) throw SchemaError("$.layers", "expected array");
  d.placements.reserve(layers.size());
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const std::string at = "$.layers[" + std::to_string(i) + "]";
    const auto& l = layers[i];
    detail::require_keys(l, at, {"id", "x", "y", "w", "h", "hierarchy"});
    if (!l.at("id").is_string()) throw SchemaError(at + ".id", "expected string");
    Placement p;
    p.element_id = l.at("id").get<std::string>();
    p.x = detail::require_int(l.at("x"), at + ".x");
    p.y = detail::require_int(l.at("y"), at + ".y");
    p.w = detail::require_int(l.at("w"), at + ".w");
    p.h = detail::require_int(l.at("h"), at + ".h");
    p.hierarchy = detail::require_int(l.at("hierarchy"), at + ".hierarchy");
    d.placements.push_back(std::move(p));
  }
  if (root.contains("metadata")) {
    if (!root.at("metadata").is_object()) throw SchemaError("$.metadata", "expected object");
    d.metadata = root.at("metadata");
  }
  validate(d);
  return d;
}

// Parses UTF-8 JSON text. Throws SyntaxError, SchemaError or InvariantError.
inline DraftProtocol parse_draft(std::string_view bytes) {
  nlohmann::json root;
  try {
    root = nlohmann::json::parse(bytes.begin(), bytes.end());
  } catch (const nlohmann::json::parse_error& e) {
    throw SyntaxError("$", e.what());
  }
  return draft_from_json(root);
}

// Placements sorted by ascending hierarchy. Idempotent.
inline DraftProtocol canonicalize(DraftProtocol d) {
  std::stable_sort(d.placements.begin(), d.placements.end(),
                   [](const Placement& a, const Placement& b) { return a.hierarchy < b.hierarchy; });
  return d;
}

inline nlohmann::ordered_json to_ordered_json(const DraftProtocol& draft) {
  const DraftProtocol d = canonicalize(draft);
  nlohmann::ordered_json root;
  root["canvas"] = {{"width", d.canvas.width}, {"height", d.canvas.height}};
  auto layers = nlohmann::ordered_json::array();
  for (const auto& p : d.placements) {
    nlohmann::ordered_json l;
    l["id"] = p.element_id;
    l["x"] = p.x;
    l["y"] = p.y;
    l["w"] = p.w;
    l["h"] = p.h;
    l["hierarchy"] = p.hierarchy;
    layers.push_back(std::move(l));
  }
  root["layers"] = std::move(layers);
  // nlohmann::json keeps object keys sorted, so the metadata dump is stable.
  if (!d.metadata.is_null()) root["metadata"] = nlohmann::ordered_json::parse(d.metadata.dump());
  return root;
}

// Canonical text: 2-space indent, schema key order, LF endings, trailing LF.
inline std::string serialize_draft(const DraftProtocol& d) {
  return to_ordered_json(d).dump(2) + "\n";
}

// element_id -> hierarchy rank.
inline std::map<std::string, int, std::less<>> ranks_of(const DraftProtocol& d) {
  std::map<std::string, int, std::less<>> out;
  for (const auto& p : d.placements) out.emplace(p.element_id, p.hierarchy);
  return out;
}

inline const Placement* find_placement(const DraftProtocol& d, std::string_view id) {
  for (const auto& p : d.placements)
    if (p.element_id == id) return &p;
  return nullptr;
}

}  // namespace hlg
