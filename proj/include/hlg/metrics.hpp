#pragma once

// Layer-order and layout-quality measures.
//
//   iopr   fraction of overlapping pairs whose predicted order inverts the
//          reference order (0 when nothing overlaps)
//   r_ove  mean pairwise overlap of content boxes (lower is better)
//   r_ali  mean nearest-axis misalignment, diagonal-normalized (lower)
//   r_und  share of underlays that actually back some content (higher)
//   r_occ  share of saliency mass left uncovered by foreground (higher)
//   r_com  mean luma std-dev under text/underlay boxes (lower)
//
// Formulas for the r_* family are documented in METRICS.md.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <locale>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "hlg/draft.hpp"
#include "hlg/error.hpp"
#include "hlg/raster.hpp"
#include "hlg/roles.hpp"

namespace hlg {

enum class OverlapMode { bbox, alpha };

struct OverlapPredicateConfig {
  OverlapMode mode = OverlapMode::bbox;
  double alpha_threshold = 0.1;       // alpha mode, on [0, 1]
  long long min_intersection_px = 0;  // bbox mode: overlap iff area > this
};

inline long long intersection_area(const Placement& a, const Placement& b) {
  const long long x0 = std::max<long long>(a.x, b.x);
  const long long x1 = std::min<long long>(1ll * a.x + a.w, 1ll * b.x + b.w);
  const long long y0 = std::max<long long>(a.y, b.y);
  const long long y1 = std::min<long long>(1ll * a.y + a.h, 1ll * b.y + b.h);
  if (x1 <= x0 || y1 <= y0) return 0;
  return (x1 - x0) * (y1 - y0);
}

namespace detail {

inline bool alpha_overlap(const Placement& a, const BilinearSampler& sa, const Placement& b,
                          const BilinearSampler& sb, double threshold) {
  const int x0 = std::max(a.x, b.x), x1 = static_cast<int>(std::min(1ll * a.x + a.w, 1ll * b.x + b.w));
  const int y0 = std::max(a.y, b.y), y1 = static_cast<int>(std::min(1ll * a.y + a.h, 1ll * b.y + b.h));
  for (int y = y0; y < y1; ++y)
    for (int x = x0; x < x1; ++x)
      if (sa.at(x - a.x, y - a.y).a > threshold && sb.at(x - b.x, y - b.y).a > threshold) return true;
  return false;
}

inline const RgbaImage& asset_for(const AssetMap* assets, const std::string& id) {
  if (assets == nullptr) throw MissingAsset(id + " (alpha overlap mode requires assets)");
  auto it = assets->find(id);
  if (it == assets->end()) throw MissingAsset(id);
  return it->second;
}

}  // namespace detail

inline bool overlap(const Placement& a, const Placement& b, const OverlapPredicateConfig& cfg = {},
                    const AssetMap* assets = nullptr) {
  if (cfg.mode == OverlapMode::bbox) return intersection_area(a, b) > cfg.min_intersection_px;
  if (intersection_area(a, b) == 0) return false;
  BilinearSampler sa(detail::asset_for(assets, a.element_id), a.w, a.h);
  BilinearSampler sb(detail::asset_for(assets, b.element_id), b.w, b.h);
  return detail::alpha_overlap(a, sa, b, sb, cfg.alpha_threshold);
}

// Symmetric n x n overlap table over d.placements (diagonal false).
inline std::vector<std::vector<bool>> overlap_matrix(const DraftProtocol& d, const OverlapPredicateConfig& cfg = {},
                                                     const AssetMap* assets = nullptr) {
  const auto n = d.placements.size();
  std::vector<std::vector<bool>> m(n, std::vector<bool>(n, false));
  std::vector<std::optional<BilinearSampler>> samplers(n);
  if (cfg.mode == OverlapMode::alpha)
    for (std::size_t i = 0; i < n; ++i) {
      const auto& p = d.placements[i];
      samplers[i].emplace(detail::asset_for(assets, p.element_id), p.w, p.h);
    }
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      const auto& a = d.placements[i];
      const auto& b = d.placements[j];
      bool hit;
      if (cfg.mode == OverlapMode::bbox)
        hit = intersection_area(a, b) > cfg.min_intersection_px;
      else
        hit = intersection_area(a, b) > 0 && detail::alpha_overlap(a, *samplers[i], b, *samplers[j], cfg.alpha_threshold);
      m[i][j] = m[j][i] = hit;
    }
  return m;
}

// Exact ratio; value() applies the zero-denominator convention.
struct IoprResult {
  long long inverted = 0;
  long long overlapping = 0;

  double value() const { return overlapping == 0 ? 0.0 : static_cast<double>(inverted) / overlapping; }
  double correct_pair_ratio() const { return 1.0 - value(); }

  friend bool operator==(const IoprResult&, const IoprResult&) = default;
};

using RankMap = std::map<std::string, int, std::less<>>;

// Overlap is judged on the predicted geometry. Pairs are oriented by the
// reference order; a pair counts as inverted when the prediction stacks
// them the other way round.
inline IoprResult iopr(const DraftProtocol& predicted, const RankMap& reference_order,
                       const OverlapPredicateConfig& cfg = {}, const AssetMap* assets = nullptr) {
  const auto& ps = predicted.placements;
  if (ps.size() != reference_order.size())
    throw IdMismatch("predicted draft has " + std::to_string(ps.size()) + " elements, reference has " +
                     std::to_string(reference_order.size()));
  std::vector<int> ref(ps.size());
  for (std::size_t i = 0; i < ps.size(); ++i) {
    auto it = reference_order.find(ps[i].element_id);
    if (it == reference_order.end()) throw IdMismatch("element '" + ps[i].element_id + "' absent from reference");
    ref[i] = it->second;
  }
  {
    auto sorted = ref;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
      throw IdMismatch("reference ranks must be distinct");
  }
  const auto ov = overlap_matrix(predicted, cfg, assets);
  IoprResult r;
  for (std::size_t i = 0; i < ps.size(); ++i)
    for (std::size_t j = i + 1; j < ps.size(); ++j) {
      if (!ov[i][j]) continue;
      ++r.overlapping;
      const bool ref_i_first = ref[i] < ref[j];
      const bool pred_i_first = ps[i].hierarchy < ps[j].hierarchy;
      if (ref_i_first != pred_i_first) ++r.inverted;
    }
  return r;
}

inline IoprResult iopr(const DraftProtocol& predicted, const DraftProtocol& reference,
                       const OverlapPredicateConfig& cfg = {}, const AssetMap* assets = nullptr) {
  return iopr(predicted, ranks_of(reference), cfg, assets);
}

inline bool is_content(Role r) { return r != Role::background && r != Role::underlay; }

// Mean over unordered content pairs of intersection / smaller box area.
// Background and underlay elements are not content.
inline double r_ove(const DraftProtocol& d, const RoleMap* roles = nullptr) {
  std::vector<const Placement*> eligible;
  for (const auto& p : d.placements)
    if (is_content(role_of(roles, p.element_id))) eligible.push_back(&p);
  if (eligible.size() < 2) return 0.0;
  double sum = 0.0;
  long long pairs = 0;
  for (std::size_t i = 0; i < eligible.size(); ++i)
    for (std::size_t j = i + 1; j < eligible.size(); ++j) {
      const double smaller = static_cast<double>(std::min(eligible[i]->area(), eligible[j]->area()));
      sum += static_cast<double>(intersection_area(*eligible[i], *eligible[j])) / smaller;
      ++pairs;
    }
  return sum / static_cast<double>(pairs);
}

// left, x-center, right, top, y-center, bottom
inline std::array<double, 6> alignment_axes(const Placement& p) {
  return {static_cast<double>(p.x), p.x + p.w / 2.0, static_cast<double>(p.x) + p.w,
          static_cast<double>(p.y), p.y + p.h / 2.0, static_cast<double>(p.y) + p.h};
}

// For every element, the smallest same-axis distance to any other element
// over the six alignment axes, divided by the canvas diagonal; averaged.
inline double r_ali(const DraftProtocol& d) {
  const auto n = d.placements.size();
  if (n < 2) return 0.0;
  const double diag = std::hypot(static_cast<double>(d.canvas.width), static_cast<double>(d.canvas.height));
  std::vector<std::array<double, 6>> axes;
  axes.reserve(n);
  for (const auto& p : d.placements) axes.push_back(alignment_axes(p));
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      for (std::size_t k = 0; k < 6; ++k) best = std::min(best, std::abs(axes[i][k] - axes[j][k]));
    }
    sum += best / diag;
  }
  return sum / static_cast<double>(n);
}

inline constexpr double kUnderlayContainment = 0.9;

// Fraction of underlays holding (>= 90% of its area) at least one content
// element stacked above them. 1.0 when there are no underlays.
inline double r_und(const DraftProtocol& d, const RoleMap& roles) {
  long long underlays = 0, backed = 0;
  for (const auto& u : d.placements) {
    if (role_of(&roles, u.element_id) != Role::underlay) continue;
    ++underlays;
    for (const auto& c : d.placements) {
      if (&c == &u || !is_content(role_of(&roles, c.element_id)) || c.hierarchy <= u.hierarchy) continue;
      if (static_cast<double>(intersection_area(u, c)) >= kUnderlayContainment * static_cast<double>(c.area())) {
        ++backed;
        break;
      }
    }
  }
  return underlays == 0 ? 1.0 : static_cast<double>(backed) / static_cast<double>(underlays);
}

// 1 - (saliency mass under foreground / total mass). A pixel is under
// foreground when its top-most covering layer is not a background.
inline double r_occ(const DraftProtocol& d, const GrayMap& saliency, const CoverageMask& mask,
                    const RoleMap* roles = nullptr) {
  if (saliency.width != d.canvas.width || saliency.height != d.canvas.height)
    throw DimensionMismatch("saliency map is " + std::to_string(saliency.width) + "x" +
                            std::to_string(saliency.height) + ", canvas is " + std::to_string(d.canvas.width) +
                            "x" + std::to_string(d.canvas.height));
  if (mask.width != d.canvas.width || mask.height != d.canvas.height)
    throw DimensionMismatch("coverage mask does not match canvas");
  std::vector<bool> foreground(d.placements.size());
  for (std::size_t i = 0; i < d.placements.size(); ++i)
    foreground[i] = role_of(roles, d.placements[i].element_id) != Role::background;
  double total = 0.0, covered = 0.0;
  for (std::size_t k = 0; k < saliency.values.size(); ++k) {
    const double s = saliency.values[k];
    total += s;
    const int top = mask.top[k];
    if (top != CoverageMask::kNone && foreground[static_cast<std::size_t>(top)]) covered += s;
  }
  if (total <= 0.0) return 1.0;
  return std::clamp(1.0 - covered / total, 0.0, 1.0);
}

// Mean per-region population std-dev of luma (0..255) under text_like and
// underlay boxes, clipped to the canvas. `render` should be the composite
// without text layers.
inline double r_com(const RgbaImage& render, const DraftProtocol& d, const RoleMap& roles) {
  if (render.width() != d.canvas.width || render.height() != d.canvas.height)
    throw DimensionMismatch("render does not match canvas");
  double sum = 0.0;
  int regions = 0;
  for (const auto& p : d.placements) {
    const Role r = role_of(&roles, p.element_id);
    if (r != Role::text_like && r != Role::underlay) continue;
    const int x0 = std::max(0, p.x), x1 = static_cast<int>(std::min<long long>(render.width(), 1ll * p.x + p.w));
    const int y0 = std::max(0, p.y), y1 = static_cast<int>(std::min<long long>(render.height(), 1ll * p.y + p.h));
    if (x0 >= x1 || y0 >= y1) continue;
    // Luma in thousandths is an integer, so the variance is exact and a flat
    // region gives exactly 0.
    __int128 s1 = 0, s2 = 0;
    for (int y = y0; y < y1; ++y)
      for (int x = x0; x < x1; ++x) {
        const auto* px = render.pixel(x, y);
        const long long l = 299ll * px[0] + 587ll * px[1] + 114ll * px[2];
        s1 += l;
        s2 += static_cast<__int128>(l) * l;
      }
    const __int128 n = static_cast<__int128>(x1 - x0) * (y1 - y0);
    const double var = static_cast<double>(n * s2 - s1 * s1) / (static_cast<double>(n) * static_cast<double>(n));
    sum += std::sqrt(var) / 1000.0;
    ++regions;
  }
  return regions == 0 ? 0.0 : sum / regions;
}

struct MetricReport {
  IoprResult iopr;
  double r_com = 0.0;
  double r_occ = 1.0;
  double r_ali = 0.0;
  double r_ove = 0.0;
  double r_und = 1.0;
  long long element_count = 0;

  friend bool operator==(const MetricReport&, const MetricReport&) = default;
};

inline nlohmann::ordered_json to_json(const MetricReport& r) {
  nlohmann::ordered_json j;
  j["iopr"] = r.iopr.value();
  j["correct_pair_ratio"] = r.iopr.correct_pair_ratio();
  j["inverted_pairs"] = r.iopr.inverted;
  j["overlapping_pairs"] = r.iopr.overlapping;
  j["element_count"] = r.element_count;
  j["r_com"] = r.r_com;
  j["r_occ"] = r.r_occ;
  j["r_ali"] = r.r_ali;
  j["r_ove"] = r.r_ove;
  j["r_und"] = r.r_und;
  return j;
}

inline MetricReport metric_report_from_json(const nlohmann::json& j) {
  MetricReport r;
  r.iopr.inverted = j.at("inverted_pairs").get<long long>();
  r.iopr.overlapping = j.at("overlapping_pairs").get<long long>();
  r.element_count = j.at("element_count").get<long long>();
  r.r_com = j.at("r_com").get<double>();
  r.r_occ = j.at("r_occ").get<double>();
  r.r_ali = j.at("r_ali").get<double>();
  r.r_ove = j.at("r_ove").get<double>();
  r.r_und = j.at("r_und").get<double>();
  return r;
}

inline std::string format_real(double v) {
  std::ostringstream os;
  os.imbue(std::locale::classic());
  os.precision(17);
  os << v;
  return os.str();
}

inline std::string metric_tsv_header() {
  return "iopr\tcorrect_pair_ratio\tinverted_pairs\toverlapping_pairs\telement_count\tr_com\tr_occ\tr_ali\tr_ove\tr_und";
}

inline std::string to_tsv(const MetricReport& r) {
  std::string s;
  for (const std::string& f :
       {format_real(r.iopr.value()), format_real(r.iopr.correct_pair_ratio()), std::to_string(r.iopr.inverted),
        std::to_string(r.iopr.overlapping), std::to_string(r.element_count), format_real(r.r_com),
        format_real(r.r_occ), format_real(r.r_ali), format_real(r.r_ove), format_real(r.r_und)}) {
    if (!s.empty()) s += '\t';
    s += f;
  }
  return s;
}

struct CorpusSummary {
  double iopr_min = 0.0;
  double iopr_avg = 0.0;
  double r_com = 0.0;
  double r_occ = 0.0;
  double r_ali = 0.0;
  double r_ove = 0.0;
  double r_und = 0.0;
  long long n_cases = 0;

  friend bool operator==(const CorpusSummary&, const CorpusSummary&) = default;
};

namespace detail {

// Summation over sorted values keeps the result independent of arrival order.
inline double order_free_mean(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

}  // namespace detail

inline CorpusSummary corpus_summary(const std::vector<MetricReport>& reports) {
  if (reports.empty()) throw EmptyCorpus("corpus summary needs at least one case");
  auto column = [&](auto getter) {
    std::vector<double> v;
    v.reserve(reports.size());
    for (const auto& r : reports) v.push_back(getter(r));
    return v;
  };
  const auto ioprs = column([](const MetricReport& r) { return r.iopr.value(); });
  CorpusSummary s;
  s.n_cases = static_cast<long long>(reports.size());
  s.iopr_min = *std::min_element(ioprs.begin(), ioprs.end());
  s.iopr_avg = detail::order_free_mean(ioprs);
  s.r_com = detail::order_free_mean(column([](const MetricReport& r) { return r.r_com; }));
  s.r_occ = detail::order_free_mean(column([](const MetricReport& r) { return r.r_occ; }));
  s.r_ali = detail::order_free_mean(column([](const MetricReport& r) { return r.r_ali; }));
  s.r_ove = detail::order_free_mean(column([](const MetricReport& r) { return r.r_ove; }));
  s.r_und = detail::order_free_mean(column([](const MetricReport& r) { return r.r_und; }));
  return s;
}

inline nlohmann::ordered_json to_json(const CorpusSummary& s) {
  nlohmann::ordered_json j;
  j["n_cases"] = s.n_cases;
  j["iopr_min"] = s.iopr_min;
  j["iopr_avg"] = s.iopr_avg;
  j["correct_pair_ratio_avg"] = 1.0 - s.iopr_avg;
  j["r_com"] = s.r_com;
  j["r_occ"] = s.r_occ;
  j["r_ali"] = s.r_ali;
  j["r_ove"] = s.r_ove;
  j["r_und"] = s.r_und;
  return j;
}

inline std::string corpus_tsv_header() { return "n_cases\tiopr_min\tiopr_avg\tr_com\tr_occ\tr_ali\tr_ove\tr_und"; }

inline std::string to_tsv(const CorpusSummary& s) {
  return std::to_string(s.n_cases) + "\t" + format_real(s.iopr_min) + "\t" + format_real(s.iopr_avg) + "\t" +
         format_real(s.r_com) + "\t" + format_real(s.r_occ) + "\t" + format_real(s.r_ali) + "\t" +
         format_real(s.r_ove) + "\t" + format_real(s.r_und);
}

}  // namespace hlg
