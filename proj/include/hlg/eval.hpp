#pragma once

// Corpus evaluation: generate a draft per test case, render it, score it
// against the ground truth and aggregate. Outputs land in
// <runs_root>/<run_id>/ and contain no timestamps, so a run is
// reproducible byte-for-byte from (store, config, seed).

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"

#include "hlg/config.hpp"
#include "hlg/corpus.hpp"
#include "hlg/digest.hpp"
#include "hlg/draft.hpp"
#include "hlg/error.hpp"
#include "hlg/metrics.hpp"
#include "hlg/png_io.hpp"
#include "hlg/raster.hpp"
#include "hlg/rng.hpp"
#include "hlg/seqcodec.hpp"
#include "hlg/solver.hpp"

namespace hlg {

// Roles: category labels where they name a role, inferred from pixels
// otherwise.
inline RoleMap resolve_roles(const DraftProtocol& truth, const AssetMap& assets, const RoleMap& given = {}) {
  RoleMap roles;
  for (const auto& p : truth.placements) {
    if (auto it = given.find(p.element_id); it != given.end()) {
      roles[p.element_id] = it->second;
      continue;
    }
    auto a = assets.find(p.element_id);
    if (a == assets.end()) throw MissingAsset(p.element_id);
    roles[p.element_id] = infer_role(make_element(p.element_id, a->second), truth.canvas);
  }
  return roles;
}

struct ScoredCase {
  MetricReport report;
  RgbaImage render;
};

// The one scoring path shared by the eval runner and `hlg score`.
inline ScoredCase score_case_full(const DraftProtocol& predicted, const DraftProtocol& truth, const AssetMap& assets,
                                  const RoleMap& roles, const RunConfig& cfg = {}) {
  if (predicted.canvas != truth.canvas)
    throw DimensionMismatch("predicted canvas " + std::to_string(predicted.canvas.width) + "x" +
                            std::to_string(predicted.canvas.height) + " differs from truth canvas " +
                            std::to_string(truth.canvas.width) + "x" + std::to_string(truth.canvas.height));
  ScoredCase out;
  MetricReport& r = out.report;
  r.iopr = iopr(predicted, truth, cfg.overlap, &assets);
  r.r_ove = r_ove(predicted, &roles);
  r.r_ali = r_ali(predicted);
  r.r_und = r_und(predicted, roles);
  r.element_count = static_cast<long long>(predicted.placements.size());

  auto full = composite(predicted, assets, cfg.coverage_threshold);

  DraftProtocol backdrop{predicted.canvas, {}, {}};
  DraftProtocol no_text{predicted.canvas, {}, {}};
  for (const auto& p : predicted.placements) {
    const Role role = role_of(&roles, p.element_id);
    if (role == Role::background) backdrop.placements.push_back(p);
    if (role != Role::text_like) no_text.placements.push_back(p);
  }
  const GrayMap saliency = backdrop.placements.empty()
                               ? GrayMap(predicted.canvas.width, predicted.canvas.height, 0.0)
                               : saliency_proxy(composite(backdrop, assets, cfg.coverage_threshold).image);
  r.r_occ = r_occ(predicted, saliency, full.mask, &roles);
  r.r_com = r_com(composite(no_text, assets, cfg.coverage_threshold).image, predicted, roles);
  out.render = std::move(full.image);
  return out;
}

inline MetricReport score_case(const DraftProtocol& predicted, const DraftProtocol& truth, const AssetMap& assets,
                               const RoleMap& roles, const RunConfig& cfg = {}) {
  return score_case_full(predicted, truth, assets, roles, cfg).report;
}

// Reads <dir>/<id>.png for every placement of `d`.
inline AssetMap load_asset_dir(const std::filesystem::path& dir, const DraftProtocol& d) {
  AssetMap m;
  for (const auto& p : d.placements) {
    const auto path = dir / (p.element_id + ".png");
    if (!std::filesystem::exists(path)) throw MissingAsset(p.element_id);
    m.emplace(p.element_id, load_png(path));
  }
  return m;
}

// {"id": "role", ...}
inline RoleMap parse_role_map(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw SyntaxError("$", e.what());
  }
  if (!j.is_object()) throw SchemaError("$", "expected object mapping element id to role");
  RoleMap m;
  for (const auto& [id, v] : j.items()) {
    if (!v.is_string()) throw SchemaError("$." + id, "expected role string");
    auto r = role_from_string(v.get<std::string>());
    if (!r) throw SchemaError("$." + id, "unknown role '" + v.get<std::string>() + "'");
    m[id] = *r;
  }
  return m;
}

enum class GeneratorKind { solver_hlg, solver_glg, external };

struct GeneratorSpec {
  GeneratorKind kind = GeneratorKind::solver_hlg;
  std::filesystem::path drafts_dir;  // external only

  std::string label() const {
    switch (kind) {
      case GeneratorKind::solver_hlg: return "solver-hlg";
      case GeneratorKind::solver_glg: return "solver-glg";
      case GeneratorKind::external: return "external";
    }
    return "?";
  }
};

inline GeneratorSpec parse_generator(std::string_view name, const std::filesystem::path& drafts_dir = {}) {
  GeneratorSpec g;
  if (name == "solver-hlg") {
    g.kind = GeneratorKind::solver_hlg;
  } else if (name == "solver-glg") {
    g.kind = GeneratorKind::solver_glg;
  } else if (name == "external") {
    if (drafts_dir.empty()) throw ConfigError("generator 'external' needs a drafts directory");
    g.kind = GeneratorKind::external;
    g.drafts_dir = drafts_dir;
  } else {
    throw ConfigError("unknown generator '" + std::string(name) + "' (solver-hlg, solver-glg, external)");
  }
  return g;
}

inline std::vector<Element> record_elements(const CorpusRecord& rec, const AssetMap& assets) {
  std::vector<Element> out;
  for (const auto& e : rec.elements) out.push_back(make_element(e.placement.element_id, assets.at(e.placement.element_id)));
  return out;
}

inline std::uint64_t case_seed(std::uint64_t run_seed, std::size_t case_index) {
  return run_seed ^ static_cast<std::uint64_t>(case_index);
}

// Produces the predicted draft for one case. Failures surface as
// GeneratorError.
inline DraftProtocol generate_case(const GeneratorSpec& gen, const CorpusRecord& rec, const AssetMap& assets,
                                   const RunConfig& cfg, std::size_t case_index) {
  try {
    switch (gen.kind) {
      case GeneratorKind::solver_hlg: {
        const std::uint64_t seed = case_seed(cfg.eval.seed, case_index);
        auto shuffled = shuffle_inputs(record_elements(rec, assets), cfg.eval.shuffle_probability, seed);
        SolverConfig sc = cfg.solver;
        sc.seed = seed;
        return anneal(shuffled.items, rec.canvas, sc);
      }
      case GeneratorKind::solver_glg: {
        auto elements = record_elements(rec, assets);
        const auto ranks = ranks_of(rec.truth());
        std::sort(elements.begin(), elements.end(),
                  [&](const Element& a, const Element& b) { return ranks.at(a.id) < ranks.at(b.id); });
        SolverConfig sc = cfg.solver;
        sc.seed = case_seed(cfg.eval.seed, case_index);
        return solve_glg(elements, rec.canvas, sc);
      }
      case GeneratorKind::external: {
        const auto path = gen.drafts_dir / (rec.id + ".json");
        if (!std::filesystem::exists(path)) throw GeneratorError("no external draft at '" + path.string() + "'");
        return parse_draft(read_file(path));
      }
    }
  } catch (const GeneratorError&) {
    throw;
  } catch (const Error& e) {
    throw GeneratorError(std::string(e.kind()) + ": " + e.what());
  }
  throw GeneratorError("unknown generator");
}

struct CaseResult {
  std::string id;
  MetricReport report;
};

struct SkippedCase {
  std::string id;
  std::string reason;
};

struct EvalRun {
  std::string run_id;
  std::string store_hash;
  std::string generator;
  nlohmann::ordered_json config;
  std::vector<CaseResult> cases;  // sorted by id
  std::vector<SkippedCase> skips;
  std::optional<CorpusSummary> summary;
  std::filesystem::path dir;  // empty when nothing was written
};

inline nlohmann::ordered_json to_json(const EvalRun& run) {
  nlohmann::ordered_json j;
  j["run_id"] = run.run_id;
  j["store_hash"] = run.store_hash;
  j["generator"] = run.generator;
  j["config"] = run.config;
  j["summary"] = run.summary ? to_json(*run.summary) : nlohmann::ordered_json();
  j["cases"] = nlohmann::ordered_json::array();
  for (const auto& c : run.cases) j["cases"].push_back({{"id", c.id}, {"metrics", to_json(c.report)}});
  j["skips"] = nlohmann::ordered_json::array();
  for (const auto& s : run.skips) j["skips"].push_back({{"id", s.id}, {"reason", s.reason}});
  return j;
}

struct EvalOptions {
  GeneratorSpec generator;
  RunConfig config;
  std::filesystem::path runs_root = "runs";
  std::string run_id;                       // empty = derived from inputs
  std::optional<std::set<std::string>> include;
  bool write_outputs = true;
};

inline bool safe_run_id(std::string_view id) { return safe_record_id(id); }

inline std::string derive_run_id(const std::string& store_hash, const GeneratorSpec& gen,
                                 const nlohmann::ordered_json& config, const std::optional<std::set<std::string>>& include) {
  std::string key = store_hash + "\n" + gen.label() + "\n" + gen.drafts_dir.generic_string() + "\n" + config.dump();
  if (include)
    for (const auto& id : *include) key += "\n" + id;
  return gen.label() + "-" + sha256_hex(key).substr(0, 12);
}

// Cases selected for evaluation, sorted by id. The position in this list
// is the case index used for seeding.
inline std::vector<std::string> select_cases(const CorpusStore& store, const std::string& split,
                                             const std::optional<std::set<std::string>>& include) {
  std::vector<std::string> ids;
  std::set<std::string> known;
  for (const auto& e : store.entries()) {
    known.insert(e.id);
    if (e.split == split && (!include || include->count(e.id))) ids.push_back(e.id);
  }
  if (include)
    for (const auto& id : *include)
      if (!known.count(id)) throw IdMismatch("include list names unknown composition '" + id + "'");
  std::sort(ids.begin(), ids.end());
  if (ids.empty()) throw EmptyCorpus("no '" + split + "' compositions selected for evaluation");
  return ids;
}

inline EvalRun eval_corpus(const CorpusStore& store, const EvalOptions& opt) {
  namespace fs = std::filesystem;
  const RunConfig& cfg = opt.config;
  cfg.solver.validate();
  const auto ids = select_cases(store, cfg.eval.split, opt.include);

  EvalRun run;
  run.store_hash = store.hash();
  run.generator = opt.generator.label();
  run.config = to_json(cfg, /*full=*/false);
  run.run_id = opt.run_id.empty() ? derive_run_id(run.store_hash, opt.generator, run.config, opt.include) : opt.run_id;
  if (!safe_run_id(run.run_id)) throw ConfigError("run id must match [A-Za-z0-9._-]+");

  if (opt.write_outputs) {
    run.dir = opt.runs_root / run.run_id;
    fs::remove_all(run.dir);
    fs::create_directories(run.dir / "renders");
    fs::create_directories(run.dir / "drafts");
  }

  struct Slot {
    std::optional<MetricReport> report;
    std::string skip_reason;
  };
  std::vector<Slot> slots(ids.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < ids.size(); i = next++) {
      Slot& slot = slots[i];
      try {
        const CorpusRecord rec = store.load(ids[i]);
        const AssetMap assets = store.assets(rec);
        const DraftProtocol truth = rec.truth();
        const DraftProtocol pred = generate_case(opt.generator, rec, assets, cfg, i);
        const RoleMap roles = resolve_roles(truth, assets, rec.category_roles());
        auto scored = score_case_full(pred, truth, assets, roles, cfg);
        if (opt.write_outputs) {
          write_file(run.dir / "renders" / (ids[i] + ".png"), encode_png(scored.render));
          write_file(run.dir / "drafts" / (ids[i] + ".json"), serialize_draft(pred));
        }
        slot.report = scored.report;
      } catch (const Error& e) {
        slot.skip_reason = std::string(e.kind()) + ": " + e.what();
      }
    }
  };
  int workers = cfg.eval.workers > 0 ? cfg.eval.workers : static_cast<int>(std::thread::hardware_concurrency());
  workers = std::clamp<int>(workers, 1, static_cast<int>(ids.size()));
  {
    std::vector<std::jthread> pool;
    for (int w = 1; w < workers; ++w) pool.emplace_back(worker);
    worker();
  }

  std::vector<MetricReport> reports;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (slots[i].report) {
      run.cases.push_back({ids[i], *slots[i].report});
      reports.push_back(*slots[i].report);
    } else {
      run.skips.push_back({ids[i], slots[i].skip_reason});
    }
  }
  if (!reports.empty()) run.summary = corpus_summary(reports);

  if (opt.write_outputs) {
    nlohmann::ordered_json snapshot;
    snapshot["store_hash"] = run.store_hash;
    snapshot["generator"] = run.generator;
    if (opt.generator.kind == GeneratorKind::external) snapshot["drafts_dir"] = opt.generator.drafts_dir.generic_string();
    snapshot["config"] = run.config;
    if (opt.include) snapshot["include"] = *opt.include;
    write_file(run.dir / "config.json", snapshot.dump(2) + "\n");
    write_file(run.dir / "report.json", to_json(run).dump(2) + "\n");
    std::string tsv = "id\t" + metric_tsv_header() + "\n";
    for (const auto& c : run.cases) tsv += c.id + "\t" + to_tsv(c.report) + "\n";
    write_file(run.dir / "reports.tsv", tsv);
    if (run.summary) write_file(run.dir / "summary.tsv", corpus_tsv_header() + "\n" + to_tsv(*run.summary) + "\n");
  }
  return run;
}

}  // namespace hlg
