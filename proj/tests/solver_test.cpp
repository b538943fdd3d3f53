#include <gtest/gtest.h>

#include <algorithm>

#include "fixtures.hpp"
#include "hlg/solver.hpp"
#include "oracles.hpp"

namespace {

using hlg::Element;
using hlg::Role;

const hlg::CanvasSpec kCanvas{200, 200};

Element sticker() {
  hlg::RgbaImage img(10, 10);
  for (int i = 0; i < 10; ++i) img.pixel(i, i)[3] = 255;  // 10% alpha
  return hlg::make_element("sticker", img);
}

Element text_strip() {
  hlg::RgbaImage img(100, 20);
  for (int y = 6; y < 14; ++y)
    for (int x = 0; x < 100; ++x) img.pixel(x, y)[3] = 255;  // 40% alpha, aspect 5
  return hlg::make_element("text", img);
}

std::vector<Element> planted_six() {
  hlg::Rng rng(1);
  std::vector<Element> out;
  out.push_back(hlg::make_element("bg", hlg::RgbaImage::filled(220, 200, 250, 245, 240, 255)));
  out.push_back(hlg::make_element("panel", hlg::RgbaImage::filled(100, 60, 30, 60, 120, 255)));
  out.push_back(hlg::make_element("photo", fixture::striped(60, 40, 90)));
  out.push_back(text_strip());
  out.push_back(sticker());
  auto noisy = fixture::random_image(rng, 45, 30);
  for (std::size_t k = 3; k < noisy.bytes().size(); k += 4) noisy.bytes()[k] = 255;
  out.push_back(hlg::make_element("noise", noisy));
  return out;
}

TEST(InferRoles, RuleTable) {
  const auto roles = hlg::infer_roles(planted_six(), kCanvas);
  EXPECT_EQ(roles.at("bg"), Role::background);
  EXPECT_EQ(roles.at("panel"), Role::underlay);
  EXPECT_EQ(roles.at("photo"), Role::image);
  EXPECT_EQ(roles.at("text"), Role::text_like);
  EXPECT_EQ(roles.at("sticker"), Role::decoration);
  EXPECT_EQ(roles.at("noise"), Role::image);
  EXPECT_THROW(hlg::infer_roles({}, kCanvas), hlg::EmptyInput);
}

TEST(InitialOrder, Rules) {
  const auto two = hlg::initial_order({{"t", Role::text_like}, {"b", Role::background}}, {});
  EXPECT_EQ(two.at("b"), 0);
  EXPECT_EQ(two.at("t"), 1);

  const auto images = hlg::initial_order({{"small", Role::image}, {"big", Role::image}}, {{"small", 50}, {"big", 100}});
  EXPECT_EQ(images.at("big"), 0);

  // class order, then area desc, then id
  const hlg::RoleMap roles = {{"t1", Role::text_like}, {"d", Role::decoration}, {"i2", Role::image},
                              {"i1", Role::image}, {"u", Role::underlay}};
  const auto r = hlg::initial_order(roles, {{"i1", 10}, {"i2", 10}, {"t1", 5}, {"d", 1}, {"u", 3}});
  EXPECT_EQ(r.at("u"), 0);
  EXPECT_EQ(r.at("i1"), 1);
  EXPECT_EQ(r.at("i2"), 2);
  EXPECT_EQ(r.at("d"), 3);
  EXPECT_EQ(r.at("t1"), 4);
}

TEST(Score, CenteredSingleElementIsZero) {
  hlg::DraftProtocol d;
  d.canvas = {100, 100};
  d.placements = {{"a", 40, 30, 20, 40, 0}};
  const hlg::RoleMap roles = {{"a", Role::image}};
  const auto s = hlg::score(d, roles, hlg::GrayMap(100, 100, 0.0));
  EXPECT_EQ(s.total, 0.0);
}

TEST(Score, DuplicateBoxAddsOverlapTerm) {
  hlg::DraftProtocol d;
  d.canvas = {100, 100};
  d.placements = {{"a", 10, 10, 20, 20, 0}, {"b", 70, 10, 20, 20, 1}, {"c", 40, 70, 20, 20, 2}};
  hlg::RoleMap roles = {{"a", Role::image}, {"b", Role::image}, {"c", Role::image}};
  const hlg::GrayMap sal(100, 100, 0.0);
  const auto before = hlg::score(d, roles, sal);
  d.placements.push_back({"a2", 10, 10, 20, 20, 3});
  roles["a2"] = Role::image;
  const auto after = hlg::score(d, roles, sal);
  const double d_ove = after.r_ove - before.r_ove;
  EXPECT_GT(d_ove, 0.0);
  // the duplicate also aligns perfectly with its twin, changing r_ali
  const double expect = before.total + 1.0 * d_ove + 0.5 * (after.r_ali - before.r_ali) +
                        0.5 * (after.balance - before.balance) + 2.0 * (before.r_occ - after.r_occ);
  EXPECT_NEAR(after.total, expect, 1e-12);
}

TEST(Score, HandSumOfTermsViaMetrics) {
  hlg::DraftProtocol d;
  d.canvas = {40, 40};
  d.placements = {{"bg", 0, 0, 40, 40, 0}, {"a", 2, 2, 10, 10, 1}, {"b", 8, 8, 10, 10, 2}, {"c", 35, 30, 10, 6, 3}};
  const hlg::RoleMap roles = {{"bg", Role::background}, {"a", Role::image}, {"b", Role::text_like}, {"c", Role::image}};
  hlg::GrayMap sal(40, 40);
  for (int y = 0; y < 40; ++y)
    for (int x = 0; x < 40; ++x) sal.at(x, y) = ((x * 7 + y * 3) % 11) / 10.0;
  hlg::ScoreWeights unit{1, 1, 1, 1, 1};
  const auto s = hlg::score(d, roles, sal, unit);

  const double ove = hlg::r_ove(d, &roles);
  const double ali = hlg::r_ali(d);
  const double occ = hlg::r_occ(d, sal, hlg::box_coverage_mask(d), &roles);
  // foreground centroid: areas 100, 100, 60 at (7,7), (13,13), (40,33)
  const double cx = (100 * 7.0 + 100 * 13.0 + 60 * 40.0) / 260.0, cy = (100 * 7.0 + 100 * 13.0 + 60 * 33.0) / 260.0;
  const double balance = std::hypot(cx - 20.0, cy - 20.0) / (std::hypot(40.0, 40.0) / 2.0);
  // c spans x 35..45 and y 30..36: 5 of 10 columns off canvas -> 0.5
  const double offcanvas = (0.0 + 0.0 + 0.5) / 3.0;
  EXPECT_NEAR(s.r_occ, occ, 1e-12);
  EXPECT_NEAR(s.balance, balance, 1e-12);
  EXPECT_NEAR(s.offcanvas, offcanvas, 1e-12);
  EXPECT_NEAR(s.total, ove + ali + (1 - occ) + balance + offcanvas, 1e-12);
}

TEST(Score, BoxOcclusionFastPathMatchesRasterMask) {
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    hlg::Rng rng(seed);
    auto d = fixture::random_draft(rng, 1 + static_cast<int>(rng.below(6)), 60);
    hlg::RoleMap roles;
    for (const auto& p : d.placements) roles[p.element_id] = hlg::kAllRoles[rng.below(5)];
    hlg::GrayMap sal(d.canvas.width, d.canvas.height);
    for (double& v : sal.values) v = rng.uniform();
    const double slow = hlg::r_occ(d, sal, hlg::box_coverage_mask(d), &roles);
    const double fast = hlg::box_occlusion_score(d, hlg::SaliencyIntegral(sal), &roles);
    ASSERT_NEAR(fast, slow, 1e-9) << seed;
  }
}

TEST(Anneal, BackgroundOnlyIsTemplateFixedPoint) {
  const std::vector<Element> els = {hlg::make_element("bg", hlg::RgbaImage::filled(50, 50, 1, 2, 3, 255))};
  const auto d = hlg::anneal(els, kCanvas);
  ASSERT_EQ(d.placements.size(), 1u);
  EXPECT_EQ(d.placements[0], (hlg::Placement{"bg", 0, 0, 200, 200, 0}));
  EXPECT_EQ(d.metadata["generator"], "solver-hlg");
}

TEST(Anneal, SingleForegroundIsCentered) {
  const std::vector<Element> els = {hlg::make_element("photo", fixture::striped(60, 30, 10))};
  const auto d = hlg::anneal(els, kCanvas);
  const auto& p = d.placements[0];
  EXPECT_NEAR(p.x + p.w / 2.0, 100.0, 1.0);
  EXPECT_NEAR(p.y + p.h / 2.0, 100.0, 1.0);
  EXPECT_NEAR(static_cast<double>(p.w) / p.h, 2.0, 0.05);
}

TEST(Anneal, EmptyAndDuplicateInput) {
  EXPECT_THROW(hlg::anneal({}, kCanvas), hlg::EmptyInput);
  EXPECT_THROW(hlg::solve_glg({}, kCanvas), hlg::EmptyInput);
  const auto e = sticker();
  EXPECT_THROW(hlg::anneal({e, e}, kCanvas), hlg::InvariantError);
}

TEST(Anneal, DeterministicPerSeed) {
  hlg::SolverConfig cfg;
  cfg.seed = 99;
  cfg.schedule.steps = 50;
  const auto els = planted_six();
  const auto a = hlg::serialize_draft(hlg::anneal(els, kCanvas, cfg));
  EXPECT_EQ(a, hlg::serialize_draft(hlg::anneal(els, kCanvas, cfg)));
  auto shuffled = els;
  std::reverse(shuffled.begin(), shuffled.end());
  EXPECT_EQ(a, hlg::serialize_draft(hlg::anneal(shuffled, kCanvas, cfg)));
  cfg.seed = 100;
  EXPECT_NE(a, hlg::serialize_draft(hlg::anneal(els, kCanvas, cfg)));
}

TEST(Anneal, BestEverNeverWorseThanTemplate) {
  hlg::SolverConfig cfg;
  cfg.schedule.steps = 2000;
  cfg.moves_per_temp = 1;
  hlg::SolveTrace trace;
  const auto els = planted_six();
  const auto d = hlg::anneal(els, kCanvas, cfg, &trace);
  EXPECT_NO_THROW(hlg::validate(d));
  EXPECT_LE(trace.best_score, trace.initial_score);
  ASSERT_EQ(trace.best_per_level.size(), 2000u);
  for (std::size_t i = 1; i < trace.best_per_level.size(); ++i)
    ASSERT_LE(trace.best_per_level[i], trace.best_per_level[i - 1]);

  const auto roles = hlg::infer_roles(els, kCanvas);
  const auto tmpl = hlg::template_layout(els, kCanvas, roles, hlg::initial_order(roles, hlg::native_areas(els)));
  const auto sal = hlg::saliency_proxy(hlg::composite(
      hlg::DraftProtocol{kCanvas, {{"bg", 0, 0, 200, 200, 0}}, {}}, {{"bg", els[0].image}}).image);
  EXPECT_NEAR(hlg::score(tmpl, roles, sal).total, trace.initial_score, 1e-12);
  EXPECT_LE(hlg::score(d, roles, sal).total, hlg::score(tmpl, roles, sal).total);
  EXPECT_NEAR(hlg::score(d, roles, sal).total, trace.best_score, 1e-12);
}

TEST(Anneal, RejectsBadConfig) {
  hlg::SolverConfig cfg;
  cfg.schedule.cooling = 1.0;
  EXPECT_THROW(hlg::anneal(planted_six(), kCanvas, cfg), hlg::ConfigError);
  cfg = {};
  cfg.weights.overlap = -1;
  EXPECT_THROW(cfg.validate(), hlg::ConfigError);
}

TEST(SolveGlg, KeepsGivenOrderEvenWhenAdversarial) {
  auto els = planted_six();
  // text at the bottom, background on top
  std::reverse(els.begin(), els.end());
  hlg::SolverConfig cfg;
  cfg.schedule.steps = 1000;
  cfg.moves_per_temp = 1;
  hlg::SolveTrace trace;
  const auto d = hlg::solve_glg(els, kCanvas, cfg, &trace);
  for (std::size_t i = 0; i < els.size(); ++i) EXPECT_EQ(hlg::find_placement(d, els[i].id)->hierarchy, static_cast<int>(i));
  EXPECT_GT(trace.accepted, 0);
  EXPECT_EQ(d.metadata["generator"], "solver-glg");
}

TEST(SolveGlg, SingleElement) {
  const auto d = hlg::solve_glg({hlg::make_element("bg", hlg::RgbaImage::filled(20, 20, 0, 0, 0, 255))}, kCanvas);
  EXPECT_EQ(d.placements[0], (hlg::Placement{"bg", 0, 0, 200, 200, 0}));
}

TEST(AnnealProperty, PlantedOrderBeatsRandomBaseline) {
  double solver_sum = 0.0, baseline_sum = 0.0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    hlg::Rng rng(seed);
    const auto planted = fixture::planted_composition(rng, 3 + static_cast<int>(seed % 3));
    hlg::SolverConfig cfg;
    cfg.seed = seed;
    cfg.schedule.steps = 60;
    const auto d = hlg::anneal(planted.elements, planted.canvas, cfg);
    solver_sum += hlg::iopr(d, planted.truth).value();
    std::vector<oracle::Box> boxes;
    std::vector<int> ref;
    for (const auto& p : planted.truth.placements) {
      boxes.push_back({p.x, p.y, p.w, p.h});
      ref.push_back(p.hierarchy);
    }
    baseline_sum += oracle::random_permutation_iopr(boxes, ref);
  }
  EXPECT_LT(solver_sum, baseline_sum);
}

}  // namespace
