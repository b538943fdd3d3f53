#pragma once

// Run configuration: a small TOML subset ([section] / [a.b] headers,
// `key = value` with strings, integers, reals and booleans, # comments),
// merged with `section.key=value` command-line overrides.

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "hlg/error.hpp"
#include "hlg/metrics.hpp"
#include "hlg/raster.hpp"
#include "hlg/solver.hpp"

namespace hlg {

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline bool valid_key(std::string_view k) {
  if (k.empty()) return false;
  for (char c : k)
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-')) return false;
  return true;
}

// Parses a scalar. Bare words are accepted only when `allow_bare` is set
// (command-line overrides).
inline nlohmann::json parse_scalar(std::string_view v, bool allow_bare, const std::string& where) {
  v = trim(v);
  if (v.empty()) throw ConfigError(where + ": missing value");
  if (v.front() == '"') {
    if (v.size() < 2 || v.back() != '"') throw ConfigError(where + ": unterminated string");
    try {
      return nlohmann::json::parse(v);
    } catch (const nlohmann::json::parse_error&) {
      throw ConfigError(where + ": bad string literal");
    }
  }
  if (v == "true") return true;
  if (v == "false") return false;
  {
    std::int64_t i = 0;
    auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), i);
    if (ec == std::errc{} && p == v.data() + v.size()) return i;
    std::uint64_t u = 0;
    auto [pu, ecu] = std::from_chars(v.data(), v.data() + v.size(), u);
    if (ecu == std::errc{} && pu == v.data() + v.size()) return u;
  }
  {
    double d = 0;
    auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), d);
    if (ec == std::errc{} && p == v.data() + v.size()) return d;
  }
  if (allow_bare) return std::string(v);
  throw ConfigError(where + ": cannot parse value '" + std::string(v) + "'");
}

inline nlohmann::json& at_path(nlohmann::json& root, std::string_view dotted, const std::string& where) {
  nlohmann::json* node = &root;
  while (!dotted.empty()) {
    const auto dot = dotted.find('.');
    const auto part = dotted.substr(0, dot);
    if (!valid_key(part)) throw ConfigError(where + ": bad key '" + std::string(part) + "'");
    if (!node->is_object() && !node->is_null()) throw ConfigError(where + ": '" + std::string(part) + "' is not a table");
    node = &(*node)[std::string(part)];
    dotted = dot == std::string_view::npos ? std::string_view{} : dotted.substr(dot + 1);
  }
  return *node;
}

}  // namespace detail

inline nlohmann::json parse_config_text(std::string_view text) {
  nlohmann::json root = nlohmann::json::object();
  std::string section;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    std::string_view line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    const std::string where = "config line " + std::to_string(line_no);
    // strip comments outside strings
    bool in_str = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
      if (line[i] == '"' && (i == 0 || line[i - 1] != '\\')) in_str = !in_str;
      if (line[i] == '#' && !in_str) {
        line = line.substr(0, i);
        break;
      }
    }
    line = detail::trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(where + ": unterminated section header");
      section = std::string(detail::trim(line.substr(1, line.size() - 2)));
      auto& node = detail::at_path(root, section, where);
      if (node.is_null()) node = nlohmann::json::object();
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ConfigError(where + ": expected key = value");
    const auto key = detail::trim(line.substr(0, eq));
    if (!detail::valid_key(key)) throw ConfigError(where + ": bad key '" + std::string(key) + "'");
    const std::string full = section.empty() ? std::string(key) : section + "." + std::string(key);
    auto& slot = detail::at_path(root, full, where);
    if (!slot.is_null()) throw ConfigError(where + ": duplicate key '" + full + "'");
    slot = detail::parse_scalar(line.substr(eq + 1), false, where);
  }
  return root;
}

// "section.key=value"
inline void apply_override(nlohmann::json& root, std::string_view assignment) {
  const std::string where = "override '" + std::string(assignment) + "'";
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos) throw ConfigError(where + ": expected key=value");
  detail::at_path(root, detail::trim(assignment.substr(0, eq)), where) =
      detail::parse_scalar(assignment.substr(eq + 1), true, where);
}

struct EvalSettings {
  std::uint64_t seed = 0;
  int workers = 0;                    // 0 = hardware concurrency
  double shuffle_probability = 1.0;   // input shuffle before the HLG solver
  std::string split = "test";

  friend bool operator==(const EvalSettings&, const EvalSettings&) = default;
};

struct JudgeSettings {
  std::string endpoint;
  std::string model = "gpt-4-vision-preview";
  std::string api_key_env = "HLG_JUDGE_API_KEY";
  std::string prompt_dir;  // empty = built-in rubric text
  int max_attempts = 5;
  int backoff_ms = 500;
  int max_in_flight = 2;
  int timeout_s = 60;

  friend bool operator==(const JudgeSettings&, const JudgeSettings&) = default;
};

struct RunConfig {
  SolverConfig solver;
  OverlapPredicateConfig overlap;
  int coverage_threshold = kDefaultCoverageThreshold;
  EvalSettings eval;
  JudgeSettings judge;
};

namespace detail {

template <typename T>
void read_field(const nlohmann::json& table, const char* key, T& out, const std::string& section) {
  if (!table.contains(key)) return;
  try {
    out = table.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError("config " + section + "." + key + ": wrong value type");
  }
}

inline void reject_unknown(const nlohmann::json& table, const std::string& section,
                           std::initializer_list<std::string_view> known) {
  if (!table.is_object()) throw ConfigError("config " + section + ": expected a table");
  for (const auto& [k, _] : table.items())
    if (std::find(known.begin(), known.end(), k) == known.end())
      throw ConfigError("config " + section + ": unknown key '" + k + "'");
}

inline const nlohmann::json& table_or_empty(const nlohmann::json& root, const char* key) {
  static const nlohmann::json empty = nlohmann::json::object();
  return root.contains(key) ? root.at(key) : empty;
}

}  // namespace detail

inline RunConfig run_config_from_json(const nlohmann::json& root) {
  using namespace detail;
  RunConfig c;
  reject_unknown(root, "(root)", {"solver", "metrics", "eval", "judge"});

  const auto& s = table_or_empty(root, "solver");
  reject_unknown(s, "solver",
                 {"weights", "schedule", "seed", "moves_per_temp", "translate_sigma", "rescale_range"});
  read_field(s, "seed", c.solver.seed, "solver");
  read_field(s, "moves_per_temp", c.solver.moves_per_temp, "solver");
  read_field(s, "translate_sigma", c.solver.translate_sigma, "solver");
  read_field(s, "rescale_range", c.solver.rescale_range, "solver");
  const auto& w = table_or_empty(s, "weights");
  reject_unknown(w, "solver.weights", {"overlap", "misalign", "occlusion", "imbalance", "offcanvas"});
  read_field(w, "overlap", c.solver.weights.overlap, "solver.weights");
  read_field(w, "misalign", c.solver.weights.misalign, "solver.weights");
  read_field(w, "occlusion", c.solver.weights.occlusion, "solver.weights");
  read_field(w, "imbalance", c.solver.weights.imbalance, "solver.weights");
  read_field(w, "offcanvas", c.solver.weights.offcanvas, "solver.weights");
  const auto& sch = table_or_empty(s, "schedule");
  reject_unknown(sch, "solver.schedule", {"t_initial", "cooling", "steps"});
  read_field(sch, "t_initial", c.solver.schedule.t_initial, "solver.schedule");
  read_field(sch, "cooling", c.solver.schedule.cooling, "solver.schedule");
  read_field(sch, "steps", c.solver.schedule.steps, "solver.schedule");
  c.solver.validate();

  const auto& m = table_or_empty(root, "metrics");
  reject_unknown(m, "metrics", {"overlap_mode", "alpha_threshold", "min_intersection_px", "coverage_threshold"});
  std::string mode = "bbox";
  read_field(m, "overlap_mode", mode, "metrics");
  if (mode == "bbox")
    c.overlap.mode = OverlapMode::bbox;
  else if (mode == "alpha")
    c.overlap.mode = OverlapMode::alpha;
  else
    throw ConfigError("config metrics.overlap_mode must be \"bbox\" or \"alpha\"");
  read_field(m, "alpha_threshold", c.overlap.alpha_threshold, "metrics");
  read_field(m, "min_intersection_px", c.overlap.min_intersection_px, "metrics");
  read_field(m, "coverage_threshold", c.coverage_threshold, "metrics");
  if (!(c.overlap.alpha_threshold >= 0.0 && c.overlap.alpha_threshold <= 1.0))
    throw ConfigError("config metrics.alpha_threshold must lie in [0, 1]");
  if (c.overlap.min_intersection_px < 0) throw ConfigError("config metrics.min_intersection_px must be >= 0");
  if (c.coverage_threshold < 0 || c.coverage_threshold > 255)
    throw ConfigError("config metrics.coverage_threshold must lie in [0, 255]");

  const auto& e = table_or_empty(root, "eval");
  reject_unknown(e, "eval", {"seed", "workers", "shuffle_probability", "split"});
  read_field(e, "seed", c.eval.seed, "eval");
  read_field(e, "workers", c.eval.workers, "eval");
  read_field(e, "shuffle_probability", c.eval.shuffle_probability, "eval");
  read_field(e, "split", c.eval.split, "eval");
  if (c.eval.workers < 0) throw ConfigError("config eval.workers must be >= 0");
  if (!(c.eval.shuffle_probability >= 0.0 && c.eval.shuffle_probability <= 1.0))
    throw ConfigError("config eval.shuffle_probability must lie in [0, 1]");

  const auto& j = table_or_empty(root, "judge");
  reject_unknown(j, "judge",
                 {"endpoint", "model", "api_key_env", "prompt_dir", "max_attempts", "backoff_ms", "max_in_flight",
                  "timeout_s"});
  read_field(j, "endpoint", c.judge.endpoint, "judge");
  read_field(j, "model", c.judge.model, "judge");
  read_field(j, "api_key_env", c.judge.api_key_env, "judge");
  read_field(j, "prompt_dir", c.judge.prompt_dir, "judge");
  read_field(j, "max_attempts", c.judge.max_attempts, "judge");
  read_field(j, "backoff_ms", c.judge.backoff_ms, "judge");
  read_field(j, "max_in_flight", c.judge.max_in_flight, "judge");
  read_field(j, "timeout_s", c.judge.timeout_s, "judge");
  if (c.judge.max_attempts < 1) throw ConfigError("config judge.max_attempts must be >= 1");
  if (c.judge.max_in_flight < 1) throw ConfigError("config judge.max_in_flight must be >= 1");
  if (c.judge.backoff_ms < 0) throw ConfigError("config judge.backoff_ms must be >= 0");
  return c;
}

// Full effective configuration. Run snapshots (full = false) leave out the
// worker count and judge settings: neither changes an eval run's results.
inline nlohmann::ordered_json to_json(const RunConfig& c, bool full = true) {
  nlohmann::ordered_json j;
  j["solver"] = to_json(c.solver);
  j["metrics"] = {{"overlap_mode", c.overlap.mode == OverlapMode::bbox ? "bbox" : "alpha"},
                  {"alpha_threshold", c.overlap.alpha_threshold},
                  {"min_intersection_px", c.overlap.min_intersection_px},
                  {"coverage_threshold", c.coverage_threshold}};
  j["eval"] = {{"seed", c.eval.seed}};
  if (full) j["eval"]["workers"] = c.eval.workers;
  j["eval"]["shuffle_probability"] = c.eval.shuffle_probability;
  j["eval"]["split"] = c.eval.split;
  if (full)
    j["judge"] = {{"endpoint", c.judge.endpoint},       {"model", c.judge.model},
                  {"api_key_env", c.judge.api_key_env}, {"prompt_dir", c.judge.prompt_dir},
                  {"max_attempts", c.judge.max_attempts}, {"backoff_ms", c.judge.backoff_ms},
                  {"max_in_flight", c.judge.max_in_flight}, {"timeout_s", c.judge.timeout_s}};
  return j;
}

inline RunConfig load_run_config(std::string_view config_text, const std::vector<std::string>& overrides) {
  nlohmann::json root = parse_config_text(config_text);
  for (const auto& o : overrides) apply_override(root, o);
  return run_config_from_json(root);
}

}  // namespace hlg
