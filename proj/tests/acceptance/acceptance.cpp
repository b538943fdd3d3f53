// Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any
// criterion fails. Tolerances and sizes are fixed here, not configurable.

#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "corpus_fixture.hpp"
#include "fixtures.hpp"
#include "hlg/corpus.hpp"
#include "hlg/draft.hpp"
#include "hlg/eval.hpp"
#include "hlg/judge.hpp"
#include "hlg/metrics.hpp"
#include "hlg/raster.hpp"
#include "hlg/seqcodec.hpp"
#include "hlg/solver.hpp"
#include "oracles.hpp"
#include "stub_server.hpp"

namespace fs = std::filesystem;

namespace {

// A criterion reports failures through `fail`; the first message is kept.
struct Check {
  std::string failure;
  std::string detail;
  void fail(const std::string& why) {
    if (failure.empty()) failure = why;
  }
  void expect(bool ok, const std::string& why) {
    if (!ok) fail(why);
  }
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

// ---------------------------------------------------------------------------

void iopr_oracle_equivalence(Check& c) {
  const auto t0 = Clock::now();
  hlg::Rng rng(20240501);
  long long overlapping_total = 0;
  for (int inst = 0; inst < 500; ++inst) {
    const int n = fixture::uniform_int(rng, 1, 8);
    hlg::DraftProtocol d;
    d.canvas = {64, 64};
    std::vector<oracle::Box> boxes;
    const auto pred = fixture::random_permutation(rng, n);
    const auto ref = fixture::random_permutation(rng, n);
    hlg::RankMap ref_map;
    for (int i = 0; i < n; ++i) {
      const std::string id = "e" + std::to_string(i);
      const oracle::Box b{fixture::uniform_int(rng, -8, 56), fixture::uniform_int(rng, -8, 56),
                          fixture::uniform_int(rng, 1, 32), fixture::uniform_int(rng, 1, 32)};
      boxes.push_back(b);
      d.placements.push_back({id, static_cast<int>(b.x), static_cast<int>(b.y), static_cast<int>(b.w),
                              static_cast<int>(b.h), pred[i]});
      ref_map[id] = ref[i];
    }
    const auto lib = hlg::iopr(d, ref_map);
    const auto want = oracle::iopr(boxes, pred, ref);
    overlapping_total += want.den;
    if (lib.inverted != want.num || lib.overlapping != want.den) {
      c.fail("instance " + std::to_string(inst) + ": library " + std::to_string(lib.inverted) + "/" +
             std::to_string(lib.overlapping) + " vs oracle " + std::to_string(want.num) + "/" + std::to_string(want.den));
      return;
    }
    // zero-denominator convention and the exact ratio
    const double want_value = want.den == 0 ? 0.0 : static_cast<double>(want.num) / static_cast<double>(want.den);
    c.expect(lib.value() == want_value, "ratio mismatch at instance " + std::to_string(inst));
  }
  const double s = seconds_since(t0);
  c.expect(s < 5.0, "runtime " + fmt(s) + " s >= 5 s");
  c.detail = "500 instances, " + std::to_string(overlapping_total) + " overlapping pairs, " + fmt(s) + " s";
}

void iopr_boundaries(Check& c) {
  hlg::DraftProtocol single{{10, 10}, {{"a", 0, 0, 5, 5, 0}}, {}};
  c.expect(hlg::iopr(single, single).value() == 0.0, "single element is not 0");

  hlg::DraftProtocol ref{{10, 10}, {}, {}}, rev{{10, 10}, {}, {}};
  const int n = 6;
  for (int i = 0; i < n; ++i) {
    ref.placements.push_back({"e" + std::to_string(i), 1, 1, 8, 8, i});
    rev.placements.push_back({"e" + std::to_string(i), 1, 1, 8, 8, n - 1 - i});
  }
  const auto r = hlg::iopr(rev, ref);
  c.expect(r.value() == 1.0 && r.overlapping == n * (n - 1) / 2, "fully reversed complete overlap is not 1.0");

  hlg::DraftProtocol apart{{30, 10}, {{"a", 0, 0, 10, 10, 1}, {"b", 10, 0, 10, 10, 0}, {"c", 20, 0, 10, 10, 2}}, {}};
  hlg::DraftProtocol apart_ref = apart;
  apart_ref.placements[0].hierarchy = 0;
  apart_ref.placements[1].hierarchy = 2;
  apart_ref.placements[2].hierarchy = 1;
  const auto z = hlg::iopr(apart, apart_ref);
  c.expect(z.overlapping == 0 && z.value() == 0.0, "no-overlap instance is not 0");
  c.detail = "single 0, reversed " + fmt(r.value()) + ", disjoint " + fmt(z.value());
}

// Independent compositing: every layer drawn to a full-canvas premultiplied
// buffer (assets are sized to their boxes, so no resampling), then combined
// by recursive halving instead of a left fold.
struct Premul {
  double r, g, b, a;
};
using Layer = std::vector<Premul>;

Layer over_layers(const Layer& src, const Layer& dst) {
  Layer out(src.size());
  for (std::size_t k = 0; k < src.size(); ++k) {
    const double keep = 1.0 - src[k].a;
    out[k] = {src[k].r + dst[k].r * keep, src[k].g + dst[k].g * keep, src[k].b + dst[k].b * keep,
              src[k].a + dst[k].a * keep};
  }
  return out;
}

// layers[0] is the bottom.
Layer grouped(const std::vector<Layer>& layers, std::size_t lo, std::size_t hi) {
  if (hi - lo == 1) return layers[lo];
  const std::size_t mid = lo + (hi - lo) / 2;
  return over_layers(grouped(layers, mid, hi), grouped(layers, lo, mid));
}

void compositing_algebra(Check& c) {
  const auto t0 = Clock::now();
  hlg::Rng rng(777);
  const int W = 32, H = 32;
  int max_diff = 0;
  long long dominance_pixels = 0;
  for (int stack = 0; stack < 100; ++stack) {
    const int n = fixture::uniform_int(rng, 3, 6);
    hlg::DraftProtocol d{{W, H}, {}, {}};
    hlg::AssetMap assets;
    std::vector<Layer> layers;
    layers.push_back(Layer(W * H, Premul{255, 255, 255, 1}));  // white backdrop
    const auto ranks = fixture::random_permutation(rng, n);
    std::vector<hlg::Placement> by_rank(n);
    for (int i = 0; i < n; ++i) {
      const std::string id = "l" + std::to_string(i);
      hlg::Placement p{id, fixture::uniform_int(rng, -6, 28), fixture::uniform_int(rng, -6, 28),
                       fixture::uniform_int(rng, 1, 24), fixture::uniform_int(rng, 1, 24), ranks[i]};
      assets[id] = fixture::random_image(rng, p.w, p.h);
      d.placements.push_back(p);
      by_rank[ranks[i]] = p;
    }
    for (const auto& p : by_rank) {
      Layer l(W * H, Premul{0, 0, 0, 0});
      const auto& img = assets.at(p.element_id);
      for (int y = 0; y < p.h; ++y)
        for (int x = 0; x < p.w; ++x) {
          const int cx = p.x + x, cy = p.y + y;
          if (cx < 0 || cy < 0 || cx >= W || cy >= H) continue;
          const auto* px = img.pixel(x, y);
          const double a = px[3] / 255.0;
          l[cy * W + cx] = {px[0] * a, px[1] * a, px[2] * a, a};
        }
      layers.push_back(std::move(l));
    }
    const Layer want = grouped(layers, 0, layers.size());
    const auto got = hlg::composite(d, assets).image;
    for (int k = 0; k < W * H; ++k) {
      const auto* px = got.pixel(k % W, k / W);
      const double a = want[k].a;
      const double straight[4] = {want[k].r / a, want[k].g / a, want[k].b / a, a * 255.0};
      for (int ch = 0; ch < 4; ++ch) {
        const int expect = static_cast<int>(std::floor(straight[ch] + 0.5));
        max_diff = std::max(max_diff, std::abs(expect - static_cast<int>(px[ch])));
      }
    }

    // opaque top layer over part of the canvas
    hlg::RgbaImage top = fixture::random_image(rng, 12, 10);
    for (std::size_t k = 3; k < top.bytes().size(); k += 4) top.bytes()[k] = 255;
    hlg::Placement tp{"top", fixture::uniform_int(rng, -4, 24), fixture::uniform_int(rng, -4, 26), 12, 10, n};
    d.placements.push_back(tp);
    assets["top"] = top;
    const auto with_top = hlg::composite(d, assets).image;
    for (int y = 0; y < 10; ++y)
      for (int x = 0; x < 12; ++x) {
        const int cx = tp.x + x, cy = tp.y + y;
        if (cx < 0 || cy < 0 || cx >= W || cy >= H) continue;
        ++dominance_pixels;
        if (!std::equal(top.pixel(x, y), top.pixel(x, y) + 4, with_top.pixel(cx, cy))) {
          c.fail("opaque top does not dominate at stack " + std::to_string(stack));
          return;
        }
      }
  }
  const double s = seconds_since(t0);
  c.expect(max_diff <= 1, "fold-left vs grouped differ by " + std::to_string(max_diff));
  c.expect(s < 10.0, "runtime " + fmt(s) + " s >= 10 s");
  c.detail = "100 stacks, max channel diff " + std::to_string(max_diff) + ", " + std::to_string(dominance_pixels) +
             " dominated pixels exact, " + fmt(s) + " s";
}

hlg::FeatureGrid random_grid(hlg::Rng& rng, int d) {
  hlg::FeatureGrid g(16, 16, d);
  for (auto& v : g.cells) v = rng.uniform() * 2 - 1;
  for (auto& v : g.cls) v = rng.uniform() * 2 - 1;
  return g;
}

void visual_shrinker(Check& c) {
  hlg::Rng rng(1616);
  double worst = 0.0;
  for (int t = 0; t < 20; ++t) {
    const int D = fixture::uniform_int(rng, 1, 16);
    const auto g = random_grid(rng, D);
    const auto out = hlg::visual_shrink(g, 2);
    c.expect(out.rows == 5 && out.cols == D, "token count is " + std::to_string(out.rows) + ", expected 5");
    const auto want = oracle::block_means(g.cells, 16, 16, D, 2);
    for (int r = 0; r < 4; ++r)
      for (int k = 0; k < D; ++k) worst = std::max(worst, std::abs(out(r, k) - want[r][k]));
    for (int k = 0; k < D; ++k) worst = std::max(worst, std::abs(out(4, k) - g.cls[k]));
  }
  c.expect(worst <= 1e-9, "block mean error " + fmt(worst));
  double lin = 0.0;
  for (int t = 0; t < 100; ++t) {
    const auto g1 = random_grid(rng, 6), g2 = random_grid(rng, 6);
    const double a = rng.uniform() * 4 - 2, b = rng.uniform() * 4 - 2;
    hlg::FeatureGrid mix(16, 16, 6);
    for (std::size_t i = 0; i < mix.cells.size(); ++i) mix.cells[i] = a * g1.cells[i] + b * g2.cells[i];
    for (std::size_t i = 0; i < mix.cls.size(); ++i) mix.cls[i] = a * g1.cls[i] + b * g2.cls[i];
    const auto m = hlg::visual_shrink(mix), s1 = hlg::visual_shrink(g1), s2 = hlg::visual_shrink(g2);
    for (std::size_t i = 0; i < m.data.size(); ++i) lin = std::max(lin, std::abs(m.data[i] - (a * s1.data[i] + b * s2.data[i])));
  }
  c.expect(lin <= 1e-9, "linearity error " + fmt(lin));
  c.detail = "5 tokens, oracle error " + fmt(worst) + ", linearity error " + fmt(lin) + " over 100 pairs";
}

void quantization(Check& c) {
  hlg::Rng rng(4096);
  double worst_ratio = 0.0;
  for (int t = 0; t < 10000; ++t) {
    const double extent = 1.0 + rng.uniform() * 4095.0;
    const int bins = t % 4 == 0 ? 1000 : fixture::uniform_int(rng, 2, 2048);
    const hlg::QuantSpec q{bins};
    double x = rng.uniform() * extent;
    if (t % 97 == 0) x = 0.0;
    if (t % 89 == 0) x = std::nextafter(extent, 0.0);
    const double err = std::abs(hlg::dequantize(hlg::quantize(x, extent, q), extent, q) - x);
    const double bound = extent / (2.0 * bins) + extent * 1e-12;
    worst_ratio = std::max(worst_ratio, err / bound);
    if (err > bound) {
      c.fail("x=" + fmt(x) + " extent=" + fmt(extent) + " bins=" + std::to_string(bins) + " error " + fmt(err));
      return;
    }
  }
  c.detail = "10000 samples, worst error / bound " + fmt(worst_ratio);
}

void shuffle_rate(Check& c) {
  hlg::Rng rng(75);
  int taken = 0;
  for (int t = 0; t < 10000; ++t) {
    std::vector<int> items(fixture::uniform_int(rng, 0, 12));
    for (auto& v : items) v = fixture::uniform_int(rng, 0, 5);  // repeats allowed
    auto sorted = items;
    std::sort(sorted.begin(), sorted.end());
    auto r = hlg::shuffle_inputs(items, 0.75, rng);
    taken += r.shuffled ? 1 : 0;
    std::sort(r.items.begin(), r.items.end());
    if (r.items != sorted) {
      c.fail("multiset changed at trial " + std::to_string(t));
      return;
    }
  }
  c.expect(taken >= 7400 && taken <= 7600, "shuffle branch taken " + std::to_string(taken) + " times");
  c.detail = std::to_string(taken) + " / 10000 shuffled, multiset preserved";
}

// Invalid draft text of a known error class.
std::pair<std::string, std::string> invalid_draft(hlg::Rng& rng, int k) {
  const auto d = fixture::random_draft(rng, fixture::uniform_int(rng, 2, 6), 200);
  nlohmann::ordered_json j = hlg::to_ordered_json(d);
  auto& layers = j["layers"];
  const std::size_t i = rng.below(layers.size());
  switch (k % 12) {
    case 0: {  // truncated text
      const auto text = j.dump();
      return {text.substr(0, rng.below(text.size() - 1)), "SyntaxError"};
    }
    case 1: return {j.dump() + " trailing", "SyntaxError"};
    case 2: {
      const char* keys[] = {"id", "x", "y", "w", "h", "hierarchy"};
      layers[i].erase(keys[rng.below(6)]);
      return {j.dump(), "SchemaError"};
    }
    case 3: layers[i]["x"] = 1.5; return {j.dump(), "SchemaError"};
    case 4: layers[i]["id"] = 12; return {j.dump(), "SchemaError"};
    case 5: layers[i]["depth"] = 0; return {j.dump(), "SchemaError"};
    case 6: j.erase("canvas"); return {j.dump(), "SchemaError"};
    case 7: layers[i]["hierarchy"] = layers[(i + 1) % layers.size()]["hierarchy"]; return {j.dump(), "InvariantError"};
    case 8: layers[i][rng.below(2) ? "w" : "h"] = -static_cast<int>(rng.below(5)); return {j.dump(), "InvariantError"};
    case 9: layers[i]["id"] = layers[(i + 1) % layers.size()]["id"]; return {j.dump(), "InvariantError"};
    case 10: layers[i]["hierarchy"] = static_cast<int>(layers.size() + rng.below(5)); return {j.dump(), "InvariantError"};
    default: j["layers"] = nlohmann::ordered_json::array(); return {j.dump(), "InvariantError"};
  }
}

void protocol_round_trip(Check& c) {
  hlg::Rng rng(1000);
  for (int t = 0; t < 1000; ++t) {
    auto d = fixture::random_draft(rng, fixture::uniform_int(rng, 1, 10));
    if (t % 3 == 0) d.metadata = {{"seed", t}};
    try {
      if (hlg::parse_draft(hlg::serialize_draft(d)) != hlg::canonicalize(d)) {
        c.fail("round trip differs at draft " + std::to_string(t));
        return;
      }
    } catch (const hlg::Error& e) {
      c.fail(std::string("valid draft rejected: ") + e.what());
      return;
    }
  }
  std::map<std::string, int> classes;
  for (int t = 0; t < 1000; ++t) {
    const auto [text, want] = invalid_draft(rng, t);
    try {
      hlg::parse_draft(text);
      c.fail("invalid draft " + std::to_string(t) + " accepted (expected " + want + ")");
      return;
    } catch (const hlg::Error& e) {
      if (want != e.kind()) {
        c.fail("invalid draft " + std::to_string(t) + ": got " + e.kind() + ", expected " + want + " (" + e.what() + ")");
        return;
      }
      ++classes[want];
    }
  }
  c.detail = "1000 valid round trips; 1000 rejections (";
  for (const auto& [k, v] : classes) c.detail += k + " " + std::to_string(v) + (k == classes.rbegin()->first ? ")" : ", ");
}

struct PlantedStore {
  fixture::TempDir dir;
  std::vector<fixture::ManifestCase> cases;
  std::optional<hlg::CorpusStore> store;

  PlantedStore(std::uint64_t seed, int n) : cases(fixture::planted_cases(seed, n)) {
    hlg::ingest(fixture::write_manifest(dir.path(), cases), dir / "store");
    store = hlg::CorpusStore::open(dir / "store");
  }
};

void planted_solver(Check& c) {
  const auto t0 = Clock::now();
  PlantedStore ps(5050, 50);
  hlg::EvalOptions opt;  // default config
  opt.runs_root = ps.dir / "runs";
  const auto run = hlg::eval_corpus(*ps.store, opt);
  c.expect(run.skips.empty(), std::to_string(run.skips.size()) + " cases skipped");
  if (!run.summary) return c.fail("no summary");

  double baseline = 0.0;
  for (const auto& mc : ps.cases) {
    std::vector<oracle::Box> boxes;
    std::vector<int> ref;
    for (const auto& p : mc.planted.truth.placements) {
      boxes.push_back({p.x, p.y, p.w, p.h});
      ref.push_back(p.hierarchy);
    }
    baseline += oracle::random_permutation_iopr(boxes, ref);
  }
  baseline /= static_cast<double>(ps.cases.size());
  const double s = seconds_since(t0);
  c.expect(run.summary->iopr_avg < baseline,
           "iopr_avg " + fmt(run.summary->iopr_avg) + " not below baseline " + fmt(baseline));
  c.expect(run.summary->r_ove <= 0.05, "r_ove mean " + fmt(run.summary->r_ove) + " > 0.05");
  c.expect(s < 120.0, "runtime " + fmt(s) + " s >= 120 s");
  c.detail = "50 cases, iopr_avg " + fmt(run.summary->iopr_avg) + " vs baseline " + fmt(baseline) + ", r_ove " +
             fmt(run.summary->r_ove) + ", " + fmt(s) + " s";
}

void glg_rank_freeze(Check& c) {
  hlg::Rng rng(100);
  for (int t = 0; t < 100; ++t) {
    const int n = fixture::uniform_int(rng, 1, 6);
    std::vector<hlg::Element> elements;
    for (int i = 0; i < n; ++i) {
      const int w = fixture::uniform_int(rng, 4, 60), h = fixture::uniform_int(rng, 4, 60);
      auto img = t % 2 ? fixture::random_image(rng, w, h) : fixture::striped(w, h, static_cast<std::uint8_t>(rng.below(200)));
      elements.push_back(hlg::make_element("g" + std::to_string(t) + "_" + std::to_string(i), img));
    }
    hlg::SolverConfig cfg;
    cfg.seed = static_cast<std::uint64_t>(t);
    cfg.schedule.steps = 20;
    const auto d = hlg::solve_glg(elements, {96, 64}, cfg);
    const auto ranks = hlg::ranks_of(d);
    for (int i = 0; i < n; ++i)
      if (ranks.at(elements[i].id) != i) {
        c.fail("run " + std::to_string(t) + ": element " + std::to_string(i) + " got rank " +
               std::to_string(ranks.at(elements[i].id)));
        return;
      }
  }
  c.detail = "100 runs, hierarchy equals input order";
}

int open_socket_count() {
  int n = 0;
  for (const auto& e : fs::directory_iterator("/proc/self/fd")) {
    std::error_code ec;
    const auto target = fs::read_symlink(e.path(), ec);
    if (!ec && target.string().rfind("socket:", 0) == 0) ++n;
  }
  return n;
}

void judge_contract(Check& c) {
  using namespace stub;
  auto settings = [](const StubServer& s) {
    hlg::JudgeSettings js;
    js.endpoint = s.endpoint();
    js.backoff_ms = 0;
    js.timeout_s = 5;
    js.api_key_env = "HLG_ACCEPTANCE_UNSET_KEY";
    return js;
  };
  std::vector<hlg::JudgeCase> cases;
  for (int i = 0; i < 4; ++i) cases.push_back({"c" + std::to_string(i), {hlg::JudgeMode::rating, "img" + std::to_string(i), {}}});

  {  // fixed scores
    StubServer s([](const nlohmann::json&) { return std::pair{200, chat_reply(rating_content(5, 5, 5, 5))}; });
    const auto agg = hlg::judge_cases(cases, hlg::JudgeMode::rating, settings(s), hlg::http_transport_factory(settings(s)));
    c.expect(agg.mean && *agg.mean == hlg::RatingScores{5, 5, 5, 5}, "fixed (5,5,5,5) not reproduced");
  }
  {  // scripted per-case scores
    const std::map<std::string, std::array<double, 4>> script = {{data_url("img0"), {1, 2, 3, 4}},
                                                                 {data_url("img1"), {2, 4, 6, 8}},
                                                                 {data_url("img2"), {9, 0, 1.5, 10}},
                                                                 {data_url("img3"), {4, 6, 5.5, 2}}};
    StubServer s([&](const nlohmann::json& req) {
      const auto& v = script.at(first_image(req));
      return std::pair{200, chat_reply("Verdict follows. " + rating_content(v[0], v[1], v[2], v[3]))};
    });
    const auto agg = hlg::judge_cases(cases, hlg::JudgeMode::rating, settings(s), hlg::http_transport_factory(settings(s)));
    // (1+2+9+4)/4, (2+4+0+6)/4, (3+6+1.5+5.5)/4, (4+8+10+2)/4
    c.expect(agg.mean && *agg.mean == hlg::RatingScores{4, 3, 4, 6}, "scripted means differ from hand-computed values");
  }
  {  // malformed five times
    StubServer s([](const nlohmann::json&) { return std::pair{200, chat_reply("lovely colours")}; });
    const auto agg = hlg::judge_cases({cases[0]}, hlg::JudgeMode::rating, settings(s), hlg::http_transport_factory(settings(s)));
    c.expect(agg.skipped == 1 && agg.outcomes[0].attempts == 5 && s.request_count() == 5,
             "malformed replies were not retried 5 times then skipped");
  }
  {  // judging disabled: an eval run opens no sockets and makes no attempts
    const long long before = hlg::judge_network_attempts().load();
    const int sockets = open_socket_count();
    PlantedStore ps(8, 2);
    hlg::EvalOptions opt;
    opt.runs_root = ps.dir / "runs";
    opt.config.solver.schedule.steps = 10;
    hlg::eval_corpus(*ps.store, opt);
    c.expect(hlg::judge_network_attempts().load() == before && open_socket_count() == sockets,
             "network activity with judging disabled");
  }
  c.detail = "fixed, scripted, retry-then-skip and disabled cases";
}

void determinism(Check& c) {
  PlantedStore ps(99, 6);
  hlg::EvalOptions a, b;
  a.runs_root = ps.dir / "runs-a";
  b.runs_root = ps.dir / "runs-b";
  a.config.eval.seed = b.config.eval.seed = 12345;
  a.config.eval.workers = 1;
  b.config.eval.workers = 4;
  const auto ra = hlg::eval_corpus(*ps.store, a);
  const auto rb = hlg::eval_corpus(*ps.store, b);
  c.expect(ra.run_id == rb.run_id, "run ids differ");
  int files = 0;
  for (const char* f : {"report.json", "reports.tsv", "summary.tsv", "config.json"}) {
    c.expect(hlg::read_file(ra.dir / f) == hlg::read_file(rb.dir / f), std::string(f) + " differs");
    ++files;
  }
  for (const auto& mc : ps.cases) {
    c.expect(hlg::read_file(ra.dir / "renders" / (mc.id + ".png")) == hlg::read_file(rb.dir / "renders" / (mc.id + ".png")),
             "render " + mc.id + " differs");
    ++files;
  }
  c.detail = std::to_string(files) + " files byte-identical across two runs";
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<void(Check&)>>> criteria = {
      {"iopr-oracle-equivalence", iopr_oracle_equivalence},
      {"iopr-boundary-suite", iopr_boundaries},
      {"compositing-algebra", compositing_algebra},
      {"visual-shrinker", visual_shrinker},
      {"quantization-round-trip", quantization},
      {"shuffle-rate", shuffle_rate},
      {"protocol-round-trip", protocol_round_trip},
      {"planted-corpus-solver", planted_solver},
      {"glg-rank-freeze", glg_rank_freeze},
      {"judge-client-contract", judge_contract},
      {"determinism", determinism},
  };
  int failed = 0;
  for (const auto& [name, fn] : criteria) {
    Check c;
    try {
      fn(c);
    } catch (const std::exception& e) {
      c.fail(std::string("exception: ") + e.what());
    }
    if (c.failure.empty()) {
      std::cout << "PASS " << name << "  " << c.detail << "\n";
    } else {
      ++failed;
      std::cout << "FAIL " << name << "  " << c.failure << "\n";
    }
    std::cout.flush();
  }
  std::cout << (criteria.size() - failed) << "/" << criteria.size() << " criteria passed\n";
  return failed == 0 ? 0 : 1;
}
