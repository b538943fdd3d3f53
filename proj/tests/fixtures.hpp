#pragma once

// Random generators and synthetic assets shared by the unit and acceptance
// suites.

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "hlg/draft.hpp"
#include "hlg/raster.hpp"
#include "hlg/rng.hpp"
#include "hlg/solver.hpp"

namespace fixture {

inline int uniform_int(hlg::Rng& rng, int lo, int hi) {
  return lo + static_cast<int>(rng.below(static_cast<std::uint64_t>(hi - lo + 1)));
}

inline std::vector<int> random_permutation(hlg::Rng& rng, int n) {
  std::vector<int> p(n);
  std::iota(p.begin(), p.end(), 0);
  for (int i = n; i > 1; --i) std::swap(p[i - 1], p[rng.below(i)]);
  return p;
}

// Valid draft with n layers; boxes may bleed off the canvas.
inline hlg::DraftProtocol random_draft(hlg::Rng& rng, int n, int max_canvas = 400) {
  hlg::DraftProtocol d;
  d.canvas.width = uniform_int(rng, 1, max_canvas);
  d.canvas.height = uniform_int(rng, 1, max_canvas);
  const auto ranks = random_permutation(rng, n);
  for (int i = 0; i < n; ++i) {
    hlg::Placement p;
    p.element_id = "el" + std::to_string(i) + "_" + std::to_string(rng.below(1000));
    p.x = uniform_int(rng, -d.canvas.width / 4, d.canvas.width);
    p.y = uniform_int(rng, -d.canvas.height / 4, d.canvas.height);
    p.w = uniform_int(rng, 1, d.canvas.width);
    p.h = uniform_int(rng, 1, d.canvas.height);
    p.hierarchy = ranks[i];
    d.placements.push_back(p);
  }
  return d;
}

inline hlg::RgbaImage random_image(hlg::Rng& rng, int w, int h) {
  hlg::RgbaImage img(w, h);
  for (auto& b : img.bytes()) b = static_cast<std::uint8_t>(rng.below(256));
  return img;
}

// Opaque image with a smooth vertical gradient.
inline hlg::RgbaImage gradient(int w, int h, std::uint8_t r, std::uint8_t g, std::uint8_t b) {
  hlg::RgbaImage img(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      auto* px = img.pixel(x, y);
      const double t = h > 1 ? static_cast<double>(y) / (h - 1) : 0.0;
      px[0] = static_cast<std::uint8_t>(r * (0.8 + 0.2 * t));
      px[1] = static_cast<std::uint8_t>(g * (0.8 + 0.2 * t));
      px[2] = static_cast<std::uint8_t>(b * (0.8 + 0.2 * t));
      px[3] = 255;
    }
  return img;
}

// Opaque, textured (stripes) so it is neither background nor underlay.
inline hlg::RgbaImage striped(int w, int h, std::uint8_t base) {
  hlg::RgbaImage img(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      auto* px = img.pixel(x, y);
      const bool dark = (x / 2) % 2 == 0;
      px[0] = dark ? base : 255;
      px[1] = dark ? static_cast<std::uint8_t>(base / 2) : 240;
      px[2] = dark ? 30 : 200;
      px[3] = 255;
    }
  return img;
}

// Planted composition: an opaque full-bleed background under k opaque,
// non-overlapping, non-canvas-aspect items. Truth order = background first.
struct Planted {
  hlg::CanvasSpec canvas;
  std::vector<hlg::Element> elements;
  hlg::DraftProtocol truth;
};

inline Planted planted_composition(hlg::Rng& rng, int k) {
  Planted out;
  out.canvas = {160, 160};
  out.elements.push_back(hlg::make_element("background", hlg::RgbaImage::filled(out.canvas.width, out.canvas.height, 236, 230, 214, 255)));
  out.truth.canvas = out.canvas;
  out.truth.placements.push_back({"background", 0, 0, out.canvas.width, out.canvas.height, 0});
  // k items in disjoint vertical bands; each is wide (aspect 2:1 or so).
  const int band = out.canvas.height / k;
  const auto order = random_permutation(rng, k);
  for (int i = 0; i < k; ++i) {
    const int w = uniform_int(rng, 40, 80);
    const int h = std::max(4, std::min(band - 2, w / 2));
    const std::string id = "item" + std::to_string(i);
    out.elements.push_back(hlg::make_element(id, striped(w, h, static_cast<std::uint8_t>(40 + 20 * i))));
    hlg::Placement p{id, uniform_int(rng, 0, out.canvas.width - w), i * band + 1, w, h, 1 + order[i]};
    out.truth.placements.push_back(p);
  }
  return out;
}


}  // namespace fixture
