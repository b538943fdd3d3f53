// hlg: command-line front end.
//
// Exit status: 0 success, 1 domain error, 2 usage error.

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "hlg/config.hpp"
#include "hlg/corpus.hpp"
#include "hlg/draft.hpp"
#include "hlg/error.hpp"
#include "hlg/eval.hpp"
#include "hlg/judge.hpp"
#include "hlg/metrics.hpp"
#include "hlg/png_io.hpp"
#include "hlg/raster.hpp"
#include "hlg/solver.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

struct Globals {
  bool json = false;
  std::string config_path;
  std::vector<std::string> overrides;

  hlg::RunConfig config() const {
    const std::string text = config_path.empty() ? std::string() : hlg::read_file(config_path);
    return hlg::load_run_config(text, overrides);
  }
};

void emit(const Globals& g, const ordered_json& j, const std::string& human) {
  if (g.json)
    std::cout << j.dump(2) << "\n";
  else
    std::cout << human;
}

hlg::CanvasSpec parse_canvas(const std::string& s) {
  const auto x = s.find('x');
  try {
    if (x == std::string::npos) throw std::invalid_argument(s);
    std::size_t used = 0;
    hlg::CanvasSpec c{std::stoi(s.substr(0, x), &used), 0};
    if (used != x) throw std::invalid_argument(s);
    c.height = std::stoi(s.substr(x + 1), &used);
    if (used != s.size() - x - 1 || c.width < 1 || c.height < 1) throw std::invalid_argument(s);
    return c;
  } catch (const std::logic_error&) {
    throw hlg::ConfigError("canvas must look like WIDTHxHEIGHT, got '" + s + "'");
  }
}

// ---------------------------------------------------------------------------

int cmd_validate(const Globals& g, const std::string& path) {
  const auto d = hlg::parse_draft(hlg::read_file(path));
  emit(g, {{"ok", true}, {"placements", d.placements.size()}},
       "ok: " + std::to_string(d.placements.size()) + " placements\n");
  return 0;
}

int cmd_render(const Globals& g, const std::string& draft_path, const std::string& assets_dir, const std::string& out,
               const std::string& mask_out) {
  const auto cfg = g.config();
  const auto d = hlg::parse_draft(hlg::read_file(draft_path));
  const auto assets = hlg::load_asset_dir(assets_dir, d);
  const auto result = hlg::composite(d, assets, cfg.coverage_threshold);
  hlg::write_file(out, hlg::encode_png(result.image));
  if (!mask_out.empty()) hlg::write_file(mask_out, hlg::encode_mask_png(result.mask));
  emit(g, {{"ok", true}, {"render", out}, {"width", d.canvas.width}, {"height", d.canvas.height}},
       "wrote " + out + "\n");
  return 0;
}

// Output is exactly to_json(MetricReport).dump(2) plus a newline, with or
// without --json.
int cmd_score(const Globals& g, const std::string& draft_path, const std::string& truth_path,
              const std::string& assets_dir, const std::string& roles_path) {
  const auto cfg = g.config();
  const auto pred = hlg::parse_draft(hlg::read_file(draft_path));
  const auto truth = hlg::parse_draft(hlg::read_file(truth_path));
  const auto assets = hlg::load_asset_dir(assets_dir, truth);
  const hlg::RoleMap given = roles_path.empty() ? hlg::RoleMap{} : hlg::parse_role_map(hlg::read_file(roles_path));
  const auto roles = hlg::resolve_roles(truth, assets, given);
  const auto report = hlg::score_case(pred, truth, assets, roles, cfg);
  std::cout << hlg::to_json(report).dump(2) << "\n";
  return 0;
}

int cmd_generate(const Globals& g, const std::string& assets_dir, std::vector<std::string> ids,
                 const std::string& canvas_s, const std::string& mode, std::optional<std::uint64_t> seed,
                 const std::string& out) {
  auto cfg = g.config();
  if (seed) cfg.solver.seed = *seed;
  const auto canvas = parse_canvas(canvas_s);
  if (ids.empty()) {
    if (!fs::is_directory(assets_dir)) throw hlg::IoError("'" + assets_dir + "' is not a directory");
    for (const auto& entry : fs::directory_iterator(assets_dir))
      if (entry.is_regular_file() && entry.path().extension() == ".png") ids.push_back(entry.path().stem().string());
    std::sort(ids.begin(), ids.end());
  }
  std::vector<hlg::Element> elements;
  for (const auto& id : ids) {
    const auto path = fs::path(assets_dir) / (id + ".png");
    if (!fs::exists(path)) throw hlg::MissingAsset(id);
    elements.push_back(hlg::make_element(id, hlg::load_png(path)));
  }
  hlg::SolveTrace trace;
  const auto d = mode == "glg" ? hlg::solve_glg(elements, canvas, cfg.solver, &trace)
                               : hlg::anneal(elements, canvas, cfg.solver, &trace);
  const std::string body = hlg::serialize_draft(d);
  if (out.empty() || out == "-") {
    std::cout << body;
    return 0;
  }
  hlg::write_file(out, body);
  emit(g,
       {{"ok", true},
        {"draft", out},
        {"placements", d.placements.size()},
        {"initial_score", trace.initial_score},
        {"best_score", trace.best_score}},
       "wrote " + out + " (score " + hlg::format_real(trace.initial_score) + " -> " +
           hlg::format_real(trace.best_score) + ")\n");
  return 0;
}

int cmd_ingest(const Globals& g, const std::string& manifest, const std::string& store) {
  const auto s = hlg::ingest(manifest, store);
  emit(g, {{"ok", true}, {"store", store}, {"store_hash", s.store_hash}, {"objects", s.objects}, {"counts", hlg::to_json(s.counts)}},
       "ingested " + std::to_string(s.counts.total()) + " compositions (train " + std::to_string(s.counts.train) +
           ", val " + std::to_string(s.counts.val) + ", test " + std::to_string(s.counts.test) + ") into " + store +
           "\n");
  return 0;
}

struct EvalArgs {
  std::string store, generator = "solver-hlg", drafts, runs = "runs", run_id, include;
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
};

int cmd_eval(const Globals& g, const EvalArgs& a) {
  hlg::EvalOptions opt;
  opt.config = g.config();
  if (a.seed) opt.config.eval.seed = *a.seed;
  if (a.workers) opt.config.eval.workers = *a.workers;
  opt.generator = hlg::parse_generator(a.generator, a.drafts);
  opt.runs_root = a.runs;
  opt.run_id = a.run_id;
  if (!a.include.empty()) opt.include = hlg::parse_include_list(hlg::read_file(a.include));
  const auto store = hlg::CorpusStore::open(a.store);
  const auto run = hlg::eval_corpus(store, opt);

  ordered_json j{{"ok", true},
                 {"run_id", run.run_id},
                 {"dir", run.dir.generic_string()},
                 {"cases", run.cases.size()},
                 {"skips", run.skips.size()},
                 {"summary", run.summary ? hlg::to_json(*run.summary) : ordered_json()}};
  std::string human = "run " + run.run_id + ": " + std::to_string(run.cases.size()) + " scored, " +
                      std::to_string(run.skips.size()) + " skipped\n";
  if (run.summary) human += hlg::corpus_tsv_header() + "\n" + hlg::to_tsv(*run.summary) + "\n";
  for (const auto& s : run.skips) human += "skip " + s.id + ": " + s.reason + "\n";
  human += "outputs in " + run.dir.generic_string() + "\n";
  emit(g, j, human);
  return 0;
}

int cmd_judge(const Globals& g, const std::string& run, const std::string& against, const std::string& mode_s,
              const std::string& endpoint) {
  auto cfg = g.config();
  if (!endpoint.empty()) cfg.judge.endpoint = endpoint;
  const auto mode = hlg::judge_mode_from_string(mode_s);
  const auto agg = hlg::judge_run(run, mode, cfg.judge, hlg::http_transport_factory(cfg.judge), against);
  const auto j = hlg::to_json(agg);
  std::string human = std::to_string(agg.judged) + " judged, " + std::to_string(agg.skipped) + " skipped\n";
  if (agg.mean)
    human += "S_DL " + hlg::format_real(agg.mean->dl) + "  S_GI " + hlg::format_real(agg.mean->gi) + "  S_IO " +
             hlg::format_real(agg.mean->io) + "  S_TV " + hlg::format_real(agg.mean->tv) + "\n";
  if (mode == hlg::JudgeMode::voting)
    human += "first " + std::to_string(agg.first) + "  second " + std::to_string(agg.second) + "\n";
  emit(g, j, human);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hierarchical layout toolkit: drafts, rendering, metrics, solver and corpus evaluation"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_flag("--json", g.json, "Machine-readable JSON on stdout");
  app.add_option("--config", g.config_path, "TOML-style config file")->check(CLI::ExistingFile);
  app.add_option("--set", g.overrides, "Config override section.key=value (repeatable)")->take_all();

  std::string draft, truth, assets, out, mask_out, roles, canvas = "512x512", gen_mode = "hlg", manifest, store,
                                                             run, against, judge_mode = "rating", endpoint;
  std::vector<std::string> element_ids;
  std::optional<std::uint64_t> gen_seed;
  EvalArgs ea;

  auto* validate = app.add_subcommand("validate", "Parse and validate a draft document");
  validate->add_option("draft", draft, "Draft JSON file")->required();

  auto* render = app.add_subcommand("render", "Composite a draft to PNG");
  render->add_option("--draft", draft)->required();
  render->add_option("--assets", assets, "Directory holding <element_id>.png")->required();
  render->add_option("--out", out, "Output PNG")->required();
  render->add_option("--mask", mask_out, "Optional 16-bit coverage mask PNG (value = top layer index + 1)");

  auto* score = app.add_subcommand("score", "Score a draft against a ground-truth draft");
  score->add_option("--draft", draft)->required();
  score->add_option("--truth", truth)->required();
  score->add_option("--assets", assets, "Directory holding <element_id>.png")->required();
  score->add_option("--roles", roles, "JSON object mapping element id to role; unmapped ids are inferred");

  auto* generate = app.add_subcommand("generate", "Lay out a set of element PNGs");
  generate->add_option("--assets", assets, "Directory holding <element_id>.png")->required();
  generate->add_option("--element", element_ids, "Element ids, in stacking order for glg (default: every PNG)");
  generate->add_option("--canvas", canvas, "WIDTHxHEIGHT")->capture_default_str();
  generate->add_option("--mode", gen_mode, "hlg decides z-order; glg keeps the given order")
      ->check(CLI::IsMember({"hlg", "glg"}))
      ->capture_default_str();
  generate->add_option("--seed", gen_seed);
  generate->add_option("--out", out, "Output draft (default stdout)");

  auto* ingest = app.add_subcommand("ingest", "Ingest a JSON-lines manifest into a corpus store");
  ingest->add_option("manifest", manifest)->required();
  ingest->add_option("--store", store)->required();

  auto* eval = app.add_subcommand("eval", "Evaluate a generator over a corpus store");
  eval->add_option("--store", ea.store)->required();
  eval->add_option("--generator", ea.generator, "solver-hlg | solver-glg | external")
      ->check(CLI::IsMember({"solver-hlg", "solver-glg", "external"}))
      ->capture_default_str();
  eval->add_option("--drafts", ea.drafts, "External drafts directory (<id>.json)");
  eval->add_option("--runs", ea.runs, "Root directory for run outputs")->capture_default_str();
  eval->add_option("--run-id", ea.run_id, "Run id (default: derived from store, generator and config)");
  eval->add_option("--include", ea.include, "File listing composition ids to evaluate");
  eval->add_option("--seed", ea.seed, "Shorthand for --set eval.seed=N");
  eval->add_option("--workers", ea.workers, "Shorthand for --set eval.workers=N");

  auto* judge = app.add_subcommand("judge", "Rate or compare the renders of eval runs with a vision-LLM judge");
  judge->add_option("--run", run, "Run directory")->required();
  judge->add_option("--against", against, "Second run directory (voting)");
  judge->add_option("--mode", judge_mode)->check(CLI::IsMember({"rating", "voting"}))->capture_default_str();
  judge->add_option("--endpoint", endpoint, "Chat-completions URL (overrides judge.endpoint)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n";
    const auto parsed = app.get_subcommands();
    std::cerr << (parsed.empty() ? app.help() : parsed.front()->help());
    return 2;
  }

  try {
    if (*validate) return cmd_validate(g, draft);
    if (*render) return cmd_render(g, draft, assets, out, mask_out);
    if (*score) return cmd_score(g, draft, truth, assets, roles);
    if (*generate) return cmd_generate(g, assets, element_ids, canvas, gen_mode, gen_seed, out);
    if (*ingest) return cmd_ingest(g, manifest, store);
    if (*eval) return cmd_eval(g, ea);
    if (*judge) return cmd_judge(g, run, against, judge_mode, endpoint);
  } catch (const hlg::Error& e) {
    ordered_json err{{"kind", e.kind()}, {"message", e.what()}};
    if (const auto* pe = dynamic_cast<const hlg::PathError*>(&e)) err["path"] = pe->path();
    if (g.json) std::cout << ordered_json{{"ok", false}, {"error", err}}.dump(2) << "\n";
    std::cerr << e.kind() << ": " << e.what() << "\n";
    return 1;
  } catch (const std::filesystem::filesystem_error& e) {
    if (g.json) std::cout << ordered_json{{"ok", false}, {"error", {{"kind", "IoError"}, {"message", e.what()}}}}.dump(2) << "\n";
    std::cerr << "IoError: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
