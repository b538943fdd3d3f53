#pragma once

// Heuristic layout generator: infers a role per element, seeds a stacking
// order and a template arrangement, then refines geometry (and, in
// hierarchical mode, same-role stacking) by simulated annealing on a
// weighted sum of layout measures.

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstdint>
#include <map>
#include <numbers>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"

#include "hlg/draft.hpp"
#include "hlg/error.hpp"
#include "hlg/metrics.hpp"
#include "hlg/raster.hpp"
#include "hlg/rng.hpp"
#include "hlg/roles.hpp"

namespace hlg {

struct Element {
  std::string id;
  RgbaImage image;
  ElementStats stats;
};

inline Element make_element(std::string id, RgbaImage image) {
  ElementStats stats = element_stats(image);
  return {std::move(id), std::move(image), stats};
}

struct ScoreWeights {
  double overlap = 1.0;
  double misalign = 0.5;
  double occlusion = 2.0;
  double imbalance = 0.5;
  double offcanvas = 1.0;

  friend bool operator==(const ScoreWeights&, const ScoreWeights&) = default;
};

struct AnnealSchedule {
  double t_initial = 1.0;
  double cooling = 0.97;
  int steps = 200;  // temperature levels

  friend bool operator==(const AnnealSchedule&, const AnnealSchedule&) = default;
};

struct SolverConfig {
  ScoreWeights weights;
  AnnealSchedule schedule;
  std::uint64_t seed = 0;
  int moves_per_temp = 16;
  double translate_sigma = 0.05;  // Gaussian step, fraction of the canvas side
  double rescale_range = 0.10;    // rescale factor drawn from [1 - r, 1 + r]

  void validate() const {
    for (double w : {weights.overlap, weights.misalign, weights.occlusion, weights.imbalance, weights.offcanvas})
      if (!(w >= 0.0) || !std::isfinite(w)) throw ConfigError("solver weights must be finite and non-negative");
    if (!(schedule.t_initial > 0.0)) throw ConfigError("schedule.t_initial must be > 0");
    if (!(schedule.cooling > 0.0 && schedule.cooling < 1.0)) throw ConfigError("schedule.cooling must lie in (0, 1)");
    if (schedule.steps < 1) throw ConfigError("schedule.steps must be >= 1");
    if (moves_per_temp < 1) throw ConfigError("moves_per_temp must be >= 1");
    if (!(translate_sigma >= 0.0)) throw ConfigError("translate_sigma must be >= 0");
    if (!(rescale_range >= 0.0 && rescale_range < 1.0)) throw ConfigError("rescale_range must lie in [0, 1)");
  }

  friend bool operator==(const SolverConfig&, const SolverConfig&) = default;
};

inline nlohmann::ordered_json to_json(const SolverConfig& c) {
  nlohmann::ordered_json j;
  j["weights"] = {{"overlap", c.weights.overlap},
                  {"misalign", c.weights.misalign},
                  {"occlusion", c.weights.occlusion},
                  {"imbalance", c.weights.imbalance},
                  {"offcanvas", c.weights.offcanvas}};
  j["schedule"] = {{"t_initial", c.schedule.t_initial},
                   {"cooling", c.schedule.cooling},
                   {"steps", c.schedule.steps}};
  j["seed"] = c.seed;
  j["moves_per_temp"] = c.moves_per_temp;
  j["translate_sigma"] = c.translate_sigma;
  j["rescale_range"] = c.rescale_range;
  return j;
}

// ---------------------------------------------------------------------------
// Role inference

struct RoleRules {
  double background_coverage = 0.98;
  double background_aspect_tolerance = 0.25;
  double underlay_coverage = 0.9;
  double underlay_max_saliency = 0.1;
  double underlay_min_area = 0.10;  // fraction of canvas area
  double text_min_aspect = 3.0;
  double text_max_coverage = 0.6;
  double decoration_max_coverage = 0.3;
  double decoration_max_area = 0.05;  // fraction of canvas area
};

inline double mean_value(const GrayMap& g) {
  if (g.values.empty()) return 0.0;
  double s = 0.0;
  for (double v : g.values) s += v;
  return s / static_cast<double>(g.values.size());
}

// First matching rule wins:
//   1. nearly opaque with the canvas aspect (within tolerance)   -> background
//   2. large, nearly opaque, visually flat                        -> underlay
//   3. wide strip with sparse alpha                               -> text_like
//   4. small with sparse alpha                                    -> decoration
//   5. otherwise                                                  -> image
inline Role infer_role(const Element& e, const CanvasSpec& canvas, const RoleRules& rules = {}) {
  const auto& s = e.stats;
  const double canvas_aspect = static_cast<double>(canvas.width) / canvas.height;
  const double canvas_area = static_cast<double>(canvas.width) * canvas.height;
  const double area_fraction = static_cast<double>(e.image.pixel_count()) / canvas_area;
  if (s.alpha_coverage >= rules.background_coverage &&
      std::abs(s.aspect / canvas_aspect - 1.0) <= rules.background_aspect_tolerance)
    return Role::background;
  if (s.alpha_coverage >= rules.underlay_coverage && area_fraction >= rules.underlay_min_area &&
      mean_value(saliency_proxy(e.image)) <= rules.underlay_max_saliency)
    return Role::underlay;
  if (s.aspect > rules.text_min_aspect && s.alpha_coverage < rules.text_max_coverage) return Role::text_like;
  if (s.alpha_coverage < rules.decoration_max_coverage && area_fraction < rules.decoration_max_area)
    return Role::decoration;
  return Role::image;
}

inline RoleMap infer_roles(const std::vector<Element>& elements, const CanvasSpec& canvas,
                           const RoleRules& rules = {}) {
  if (elements.empty()) throw EmptyInput("role inference needs at least one element");
  RoleMap roles;
  for (const auto& e : elements) roles[e.id] = infer_role(e, canvas, rules);
  return roles;
}

// Ranks ascend by role class, then by descending area, then by id.
inline RankMap initial_order(const RoleMap& roles, const std::map<std::string, long long, std::less<>>& areas) {
  std::vector<std::string> ids;
  for (const auto& [id, _] : roles) ids.push_back(id);
  auto area_of = [&](const std::string& id) {
    auto it = areas.find(id);
    return it == areas.end() ? 0ll : it->second;
  };
  std::sort(ids.begin(), ids.end(), [&](const std::string& a, const std::string& b) {
    const Role ra = roles.find(a)->second, rb = roles.find(b)->second;
    if (ra != rb) return static_cast<int>(ra) < static_cast<int>(rb);
    const long long aa = area_of(a), ab = area_of(b);
    if (aa != ab) return aa > ab;
    return a < b;
  });
  RankMap ranks;
  for (std::size_t i = 0; i < ids.size(); ++i) ranks[ids[i]] = static_cast<int>(i);
  return ranks;
}

// ---------------------------------------------------------------------------
// Template arrangement

// Background elements are stretched over the canvas. The rest go, in rank
// order, into a near-square grid filling the centered golden-section box
// (canvas / phi), each fitted into 90% of its cell with its aspect kept.
inline DraftProtocol template_layout(const std::vector<Element>& elements, const CanvasSpec& canvas,
                                     const RoleMap& roles, const RankMap& ranks) {
  DraftProtocol d;
  d.canvas = canvas;
  std::vector<const Element*> by_rank(elements.size());
  for (const auto& e : elements) by_rank.at(static_cast<std::size_t>(ranks.at(e.id))) = &e;

  std::vector<const Element*> grid_items;
  for (const Element* e : by_rank)
    if (roles.at(e->id) != Role::background) grid_items.push_back(e);

  const double region_w = canvas.width / std::numbers::phi, region_h = canvas.height / std::numbers::phi;
  const double region_x = (canvas.width - region_w) / 2.0, region_y = (canvas.height - region_h) / 2.0;
  const int k = static_cast<int>(grid_items.size());
  const int cols = k == 0 ? 1 : static_cast<int>(std::ceil(std::sqrt(static_cast<double>(k))));
  const int rows = k == 0 ? 1 : (k + cols - 1) / cols;
  const double cell_w = region_w / cols, cell_h = region_h / rows;
  std::map<const Element*, Placement> placed;
  for (int i = 0; i < k; ++i) {
    const Element* e = grid_items[i];
    const int row = i / cols, col = i % cols;
    const int in_row = std::min(cols, k - row * cols);
    const double row_offset = (cols - in_row) * cell_w / 2.0;
    const double scale =
        std::min(0.9 * cell_w / e->image.width(), 0.9 * cell_h / e->image.height());
    Placement p;
    p.element_id = e->id;
    p.w = std::max(1, static_cast<int>(std::lround(e->image.width() * scale)));
    p.h = std::max(1, static_cast<int>(std::lround(e->image.height() * scale)));
    const double cx = region_x + row_offset + (col + 0.5) * cell_w;
    const double cy = region_y + (row + 0.5) * cell_h;
    p.x = static_cast<int>(std::lround(cx - p.w / 2.0));
    p.y = static_cast<int>(std::lround(cy - p.h / 2.0));
    placed[e] = p;
  }
  for (const Element* e : by_rank) {
    Placement p;
    if (roles.at(e->id) == Role::background) {
      p = Placement{e->id, 0, 0, canvas.width, canvas.height, 0};
    } else {
      p = placed.at(e);
    }
    p.hierarchy = ranks.at(e->id);
    d.placements.push_back(std::move(p));
  }
  return d;
}

// ---------------------------------------------------------------------------
// Objective

struct ScoreBreakdown {
  double r_ove = 0.0;
  double r_ali = 0.0;
  double r_occ = 1.0;
  double balance = 0.0;
  double offcanvas = 0.0;
  double total = 0.0;
};

// Distance from the area-weighted centroid of non-background boxes to the
// canvas center, over half the canvas diagonal. 0 without foreground.
inline double balance_term(const DraftProtocol& d, const RoleMap* roles) {
  double mass = 0.0, cx = 0.0, cy = 0.0;
  for (const auto& p : d.placements) {
    if (role_of(roles, p.element_id) == Role::background) continue;
    const double a = static_cast<double>(p.area());
    mass += a;
    cx += a * (p.x + p.w / 2.0);
    cy += a * (p.y + p.h / 2.0);
  }
  if (mass <= 0.0) return 0.0;
  const double half_diag = std::hypot(d.canvas.width, d.canvas.height) / 2.0;
  return std::hypot(cx / mass - d.canvas.width / 2.0, cy / mass - d.canvas.height / 2.0) / half_diag;
}

// Mean fraction of each non-background box lying outside the canvas.
inline double offcanvas_fraction(const DraftProtocol& d, const RoleMap* roles) {
  const Placement canvas_box{"", 0, 0, d.canvas.width, d.canvas.height, 0};
  double sum = 0.0;
  int count = 0;
  for (const auto& p : d.placements) {
    if (role_of(roles, p.element_id) == Role::background) continue;
    sum += 1.0 - static_cast<double>(intersection_area(p, canvas_box)) / static_cast<double>(p.area());
    ++count;
  }
  return count == 0 ? 0.0 : sum / count;
}

// Rasterized box coverage: per pixel, the highest-ranked placement whose box
// contains it. The box-only counterpart of composite()'s mask.
inline CoverageMask box_coverage_mask(const DraftProtocol& d) {
  CoverageMask m;
  m.width = d.canvas.width;
  m.height = d.canvas.height;
  m.top.assign(static_cast<std::size_t>(m.width) * m.height, CoverageMask::kNone);
  m.alpha.assign(m.top.size(), 0.0);
  std::vector<std::size_t> order(d.placements.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return d.placements[a].hierarchy < d.placements[b].hierarchy; });
  for (std::size_t idx : order) {
    const auto& p = d.placements[idx];
    const int x0 = std::max(0, p.x), x1 = static_cast<int>(std::min<long long>(m.width, 1ll * p.x + p.w));
    const int y0 = std::max(0, p.y), y1 = static_cast<int>(std::min<long long>(m.height, 1ll * p.y + p.h));
    for (int y = y0; y < y1; ++y)
      for (int x = x0; x < x1; ++x) {
        const std::size_t k = static_cast<std::size_t>(y) * m.width + x;
        m.top[k] = static_cast<int>(idx);
        m.alpha[k] = 1.0;
      }
  }
  return m;
}

// Summed-area table over a saliency map; box mass queries in O(1).
class SaliencyIntegral {
 public:
  SaliencyIntegral() = default;
  explicit SaliencyIntegral(const GrayMap& g) : width_(g.width), height_(g.height) {
    sat_.assign(static_cast<std::size_t>(width_ + 1) * (height_ + 1), 0.0);
    for (int y = 0; y < height_; ++y) {
      double row = 0.0;
      for (int x = 0; x < width_; ++x) {
        row += g.at(x, y);
        at(x + 1, y + 1) = at(x + 1, y) + row;
      }
    }
  }

  bool empty() const { return width_ == 0 || height_ == 0; }
  double total() const { return empty() ? 0.0 : at(width_, height_); }

  // Mass in [x0, x1) x [y0, y1), clipped.
  double mass(int x0, int y0, int x1, int y1) const {
    x0 = std::clamp(x0, 0, width_);
    x1 = std::clamp(x1, 0, width_);
    y0 = std::clamp(y0, 0, height_);
    y1 = std::clamp(y1, 0, height_);
    if (x0 >= x1 || y0 >= y1) return 0.0;
    return at(x1, y1) - at(x0, y1) - at(x1, y0) + at(x0, y0);
  }

 private:
  double& at(int x, int y) { return sat_[static_cast<std::size_t>(y) * (width_ + 1) + x]; }
  double at(int x, int y) const { return sat_[static_cast<std::size_t>(y) * (width_ + 1) + x]; }

  int width_ = 0, height_ = 0;
  std::vector<double> sat_;
};

// r_occ under box coverage without rasterizing: the canvas is cut along all
// box edges and each cell takes the top-most box containing it.
inline double box_occlusion_score(const DraftProtocol& d, const SaliencyIntegral& sal, const RoleMap* roles) {
  const double total = sal.total();
  if (total <= 0.0) return 1.0;
  std::vector<int> xs{0, d.canvas.width}, ys{0, d.canvas.height};
  for (const auto& p : d.placements) {
    xs.push_back(std::clamp(p.x, 0, d.canvas.width));
    xs.push_back(static_cast<int>(std::clamp<long long>(1ll * p.x + p.w, 0, d.canvas.width)));
    ys.push_back(std::clamp(p.y, 0, d.canvas.height));
    ys.push_back(static_cast<int>(std::clamp<long long>(1ll * p.y + p.h, 0, d.canvas.height)));
  }
  std::sort(xs.begin(), xs.end());
  xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
  std::sort(ys.begin(), ys.end());
  ys.erase(std::unique(ys.begin(), ys.end()), ys.end());
  double covered = 0.0;
  for (std::size_t yi = 0; yi + 1 < ys.size(); ++yi)
    for (std::size_t xi = 0; xi + 1 < xs.size(); ++xi) {
      const int x0 = xs[xi], y0 = ys[yi];
      const Placement* top = nullptr;
      for (const auto& p : d.placements)
        if (p.x <= x0 && x0 < 1ll * p.x + p.w && p.y <= y0 && y0 < 1ll * p.y + p.h &&
            (top == nullptr || p.hierarchy > top->hierarchy))
          top = &p;
      if (top != nullptr && role_of(roles, top->element_id) != Role::background)
        covered += sal.mass(x0, y0, xs[xi + 1], ys[yi + 1]);
    }
  return std::clamp(1.0 - covered / total, 0.0, 1.0);
}

// Weighted objective (lower is better):
//   overlap*r_ove + misalign*r_ali + occlusion*(1 - r_occ)
//   + imbalance*balance + offcanvas*offcanvas_fraction
// Occlusion is measured with box coverage against `saliency`.
inline ScoreBreakdown score(const DraftProtocol& d, const RoleMap& roles, const SaliencyIntegral& saliency,
                            const ScoreWeights& w = {}) {
  ScoreBreakdown s;
  s.r_ove = r_ove(d, &roles);
  s.r_ali = r_ali(d);
  s.r_occ = box_occlusion_score(d, saliency, &roles);
  s.balance = balance_term(d, &roles);
  s.offcanvas = offcanvas_fraction(d, &roles);
  s.total = w.overlap * s.r_ove + w.misalign * s.r_ali + w.occlusion * (1.0 - s.r_occ) +
            w.imbalance * s.balance + w.offcanvas * s.offcanvas;
  return s;
}

inline ScoreBreakdown score(const DraftProtocol& d, const RoleMap& roles, const GrayMap& saliency,
                            const ScoreWeights& w = {}) {
  return score(d, roles, SaliencyIntegral(saliency), w);
}

// ---------------------------------------------------------------------------
// Annealing

struct SolveTrace {
  double initial_score = 0.0;
  double best_score = 0.0;
  long long proposals = 0;
  long long accepted = 0;
  std::vector<double> best_per_level;  // best-ever score after each temperature level
};

namespace detail {

inline AssetMap asset_map(const std::vector<Element>& elements) {
  AssetMap m;
  for (const auto& e : elements) m.emplace(e.id, e.image);
  return m;
}

// Saliency of the fixed backdrop: background-role layers as placed.
inline GrayMap backdrop_saliency(const DraftProtocol& d, const std::vector<Element>& elements, const RoleMap& roles) {
  DraftProtocol bg;
  bg.canvas = d.canvas;
  for (const auto& p : d.placements)
    if (roles.at(p.element_id) == Role::background) bg.placements.push_back(p);
  if (bg.placements.empty()) return GrayMap(d.canvas.width, d.canvas.height, 0.0);
  return saliency_proxy(composite(bg, asset_map(elements)).image);
}

inline void check_elements(const std::vector<Element>& elements) {
  if (elements.empty()) throw EmptyInput("solver needs at least one element");
  std::set<std::string_view> ids;
  for (const auto& e : elements)
    if (!ids.insert(e.id).second) throw InvariantError("$.elements", "duplicate element id '" + e.id + "'");
}

inline DraftProtocol run_anneal(DraftProtocol d, const std::vector<Element>& elements, const RoleMap& roles,
                                const SolverConfig& cfg, bool allow_swaps, SolveTrace* trace) {
  cfg.validate();
  const SaliencyIntegral saliency(backdrop_saliency(d, elements, roles));
  const auto eval = [&](const DraftProtocol& x) { return score(x, roles, saliency, cfg.weights).total; };

  double current = eval(d);
  DraftProtocol best = d;
  double best_score = current;
  SolveTrace local;
  local.initial_score = current;

  std::vector<std::size_t> movable;
  for (std::size_t i = 0; i < d.placements.size(); ++i)
    if (roles.at(d.placements[i].element_id) != Role::background) movable.push_back(i);

  if (d.placements.size() > 1 && !movable.empty()) {
    Rng rng(cfg.seed);
    // placement index by rank, for adjacent-rank swaps
    auto by_rank = [&](const DraftProtocol& x) {
      std::vector<std::size_t> r(x.placements.size());
      for (std::size_t i = 0; i < x.placements.size(); ++i) r[x.placements[i].hierarchy] = i;
      return r;
    };
    double t = cfg.schedule.t_initial;
    for (int level = 0; level < cfg.schedule.steps; ++level) {
      for (int m = 0; m < cfg.moves_per_temp; ++m) {
        DraftProtocol cand = d;
        const auto kind = rng.below(allow_swaps ? 3 : 2);
        if (kind == 0) {
          auto& p = cand.placements[movable[rng.below(movable.size())]];
          p.x += static_cast<int>(std::lround(rng.gaussian() * cfg.translate_sigma * d.canvas.width));
          p.y += static_cast<int>(std::lround(rng.gaussian() * cfg.translate_sigma * d.canvas.height));
        } else if (kind == 1) {
          auto& p = cand.placements[movable[rng.below(movable.size())]];
          const double f = 1.0 + (2.0 * rng.uniform() - 1.0) * cfg.rescale_range;
          const double cx = p.x + p.w / 2.0, cy = p.y + p.h / 2.0;
          p.w = std::max(1, static_cast<int>(std::lround(p.w * f)));
          p.h = std::max(1, static_cast<int>(std::lround(p.h * f)));
          p.x = static_cast<int>(std::lround(cx - p.w / 2.0));
          p.y = static_cast<int>(std::lround(cy - p.h / 2.0));
        } else {
          const auto order = by_rank(cand);
          std::vector<int> swappable;
          for (std::size_t r = 0; r + 1 < order.size(); ++r)
            if (roles.at(cand.placements[order[r]].element_id) == roles.at(cand.placements[order[r + 1]].element_id))
              swappable.push_back(static_cast<int>(r));
          if (swappable.empty()) {
            ++local.proposals;
            continue;
          }
          const int r = swappable[rng.below(swappable.size())];
          std::swap(cand.placements[order[r]].hierarchy, cand.placements[order[r + 1]].hierarchy);
        }
        ++local.proposals;
        const double next = eval(cand);
        const double delta = next - current;
        if (delta <= 0.0 || rng.uniform() < std::exp(-delta / t)) {
#ifndef NDEBUG
          validate(cand);
#endif
          d = std::move(cand);
          current = next;
          ++local.accepted;
          if (current < best_score) {
            best_score = current;
            best = d;
          }
        }
      }
      local.best_per_level.push_back(best_score);
      t *= cfg.schedule.cooling;
    }
  }
  local.best_score = best_score;
  if (trace != nullptr) *trace = std::move(local);
  return best;
}

inline nlohmann::json provenance(const char* mode, const SolverConfig& cfg, const RoleMap& roles) {
  nlohmann::json meta;
  meta["generator"] = mode;
  meta["solver"] = nlohmann::json::parse(to_json(cfg).dump());
  for (const auto& [id, r] : roles) meta["roles"][id] = std::string(to_string(r));
  return meta;
}

}  // namespace detail

inline std::map<std::string, long long, std::less<>> native_areas(const std::vector<Element>& elements) {
  std::map<std::string, long long, std::less<>> areas;
  for (const auto& e : elements) areas[e.id] = static_cast<long long>(e.image.pixel_count());
  return areas;
}

// Hierarchical mode: decides z-order and geometry. Deterministic in
// (elements, canvas, cfg); the input order of `elements` does not matter.
inline DraftProtocol anneal(const std::vector<Element>& elements, const CanvasSpec& canvas,
                            const SolverConfig& cfg = {}, SolveTrace* trace = nullptr) {
  detail::check_elements(elements);
  const RoleMap roles = infer_roles(elements, canvas);
  const RankMap ranks = initial_order(roles, native_areas(elements));
  DraftProtocol d = template_layout(elements, canvas, roles, ranks);
  d = detail::run_anneal(std::move(d), elements, roles, cfg, /*allow_swaps=*/true, trace);
  d.metadata = detail::provenance("solver-hlg", cfg, roles);
  return d;
}

// Fixed-order mode: `elements` is the stacking order (first = bottom) and
// is never changed; only geometry is optimized.
inline DraftProtocol solve_glg(const std::vector<Element>& elements, const CanvasSpec& canvas,
                               const SolverConfig& cfg = {}, SolveTrace* trace = nullptr) {
  detail::check_elements(elements);
  const RoleMap roles = infer_roles(elements, canvas);
  RankMap ranks;
  for (std::size_t i = 0; i < elements.size(); ++i) ranks[elements[i].id] = static_cast<int>(i);
  DraftProtocol d = template_layout(elements, canvas, roles, ranks);
  d = detail::run_anneal(std::move(d), elements, roles, cfg, /*allow_swaps=*/false, trace);
  d.metadata = detail::provenance("solver-glg", cfg, roles);
  return d;
}

}  // namespace hlg
