#pragma once

// RGB-A images, bilinear resize, source-over compositing of a draft and the
// per-pixel coverage bookkeeping the metrics consume.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "hlg/draft.hpp"
#include "hlg/error.hpp"

namespace hlg {

// Straight (non-premultiplied) 8-bit RGBA, row-major.
class RgbaImage {
 public:
  RgbaImage() = default;
  RgbaImage(int width, int height) : RgbaImage(width, height, std::vector<std::uint8_t>(4ull * width * height)) {}
  RgbaImage(int width, int height, std::vector<std::uint8_t> data)
      : width_(width), height_(height), data_(std::move(data)) {
    if (width < 1 || height < 1) throw DimensionMismatch("image dimensions must be positive");
    if (data_.size() != 4ull * width * height)
      throw DimensionMismatch("pixel buffer holds " + std::to_string(data_.size()) + " bytes, expected " +
                              std::to_string(4ull * width * height));
  }

  static RgbaImage filled(int width, int height, std::uint8_t r, std::uint8_t g, std::uint8_t b,
                          std::uint8_t a) {
    RgbaImage img(width, height);
    for (std::size_t i = 0; i < img.data_.size(); i += 4) {
      img.data_[i] = r;
      img.data_[i + 1] = g;
      img.data_[i + 2] = b;
      img.data_[i + 3] = a;
    }
    return img;
  }

  int width() const { return width_; }
  int height() const { return height_; }
  bool empty() const { return data_.empty(); }
  std::size_t pixel_count() const { return static_cast<std::size_t>(width_) * height_; }

  std::uint8_t* pixel(int x, int y) { return data_.data() + 4 * (static_cast<std::size_t>(y) * width_ + x); }
  const std::uint8_t* pixel(int x, int y) const {
    return data_.data() + 4 * (static_cast<std::size_t>(y) * width_ + x);
  }
  std::span<const std::uint8_t> bytes() const { return data_; }
  std::span<std::uint8_t> bytes() { return data_; }

  friend bool operator==(const RgbaImage&, const RgbaImage&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> data_;
};

using AssetMap = std::map<std::string, RgbaImage, std::less<>>;

// Real-valued single-channel map (saliency and similar), row-major.
struct GrayMap {
  int width = 0;
  int height = 0;
  std::vector<double> values;

  GrayMap() = default;
  GrayMap(int w, int h, double fill = 0.0) : width(w), height(h), values(static_cast<std::size_t>(w) * h, fill) {}

  double& at(int x, int y) { return values[static_cast<std::size_t>(y) * width + x]; }
  double at(int x, int y) const { return values[static_cast<std::size_t>(y) * width + x]; }
};

struct ElementStats {
  double alpha_coverage = 0.0;  // fraction of pixels with a > 0
  double bbox_tightness = 0.0;  // tight alpha bbox area / image area
  double mean_luma = 0.0;       // over pixels with a > 0
  double aspect = 1.0;          // w / h
};

// Per canvas pixel: index (into the draft's placements) of the highest layer
// whose resized alpha exceeds the threshold, or kNone; plus the union alpha of
// all layers painted there.
struct CoverageMask {
  static constexpr int kNone = -1;
  int width = 0;
  int height = 0;
  std::vector<int> top;
  std::vector<double> alpha;

  int top_at(int x, int y) const { return top[static_cast<std::size_t>(y) * width + x]; }
};

struct CompositeResult {
  RgbaImage image;
  CoverageMask mask;
};

inline constexpr int kDefaultCoverageThreshold = 25;

// Rec. 601 luma on 0..255 channels.
inline double luma(double r, double g, double b) { return 0.299 * r + 0.587 * g + 0.114 * b; }

inline std::uint8_t round_to_byte(double v) {
  const double r = std::floor(v + 0.5);
  return static_cast<std::uint8_t>(std::clamp(r, 0.0, 255.0));
}

// Premultiplied pixel: color channels premultiplied on the 0..255 scale,
// alpha in [0, 1].
struct PremulPixel {
  double r = 0, g = 0, b = 0, a = 0;
};

inline PremulPixel premultiply(const std::uint8_t* px) {
  const double a = px[3] / 255.0;
  return {px[0] * a, px[1] * a, px[2] * a, a};
}

// Porter-Duff source-over on premultiplied values.
inline PremulPixel over(const PremulPixel& src, const PremulPixel& dst) {
  const double k = 1.0 - src.a;
  return {src.r + dst.r * k, src.g + dst.g * k, src.b + dst.b * k, src.a + dst.a * k};
}

inline void store_straight(const PremulPixel& p, std::uint8_t* out) {
  if (p.a <= 0.0) {
    out[0] = out[1] = out[2] = out[3] = 0;
    return;
  }
  out[0] = round_to_byte(p.r / p.a);
  out[1] = round_to_byte(p.g / p.a);
  out[2] = round_to_byte(p.b / p.a);
  out[3] = round_to_byte(p.a * 255.0);
}

// Bilinear sampling plan for resizing one image to (dst_w, dst_h). Pixel
// centers are aligned (src = (dst + 0.5) * scale - 0.5) and sample positions
// are clamped to the source edge. Interpolation runs on premultiplied values.
class BilinearSampler {
 public:
  BilinearSampler(const RgbaImage& src, int dst_w, int dst_h) : src_(&src) {
    axis(src.width(), dst_w, x0_, x1_, fx_);
    axis(src.height(), dst_h, y0_, y1_, fy_);
  }

  PremulPixel at(int x, int y) const {
    const PremulPixel p00 = premultiply(src_->pixel(x0_[x], y0_[y]));
    const PremulPixel p10 = premultiply(src_->pixel(x1_[x], y0_[y]));
    const PremulPixel p01 = premultiply(src_->pixel(x0_[x], y1_[y]));
    const PremulPixel p11 = premultiply(src_->pixel(x1_[x], y1_[y]));
    const double fx = fx_[x], fy = fy_[y];
    auto mix = [&](double v00, double v10, double v01, double v11) {
      if (fx == 0.0 && fy == 0.0) return v00;
      const double top = v00 + (v10 - v00) * fx;
      const double bottom = v01 + (v11 - v01) * fx;
      return top + (bottom - top) * fy;
    };
    return {mix(p00.r, p10.r, p01.r, p11.r), mix(p00.g, p10.g, p01.g, p11.g),
            mix(p00.b, p10.b, p01.b, p11.b), mix(p00.a, p10.a, p01.a, p11.a)};
  }

 private:
  static void axis(int src_n, int dst_n, std::vector<int>& i0, std::vector<int>& i1, std::vector<double>& f) {
    i0.resize(dst_n);
    i1.resize(dst_n);
    f.resize(dst_n);
    const double scale = static_cast<double>(src_n) / dst_n;
    for (int d = 0; d < dst_n; ++d) {
      double s = src_n == dst_n ? d : (d + 0.5) * scale - 0.5;
      s = std::clamp(s, 0.0, static_cast<double>(src_n - 1));
      const int lo = static_cast<int>(std::floor(s));
      i0[d] = lo;
      i1[d] = std::min(lo + 1, src_n - 1);
      f[d] = s - lo;
    }
  }

  const RgbaImage* src_;
  std::vector<int> x0_, x1_, y0_, y1_;
  std::vector<double> fx_, fy_;
};

// Bilinear resize on premultiplied channels, un-premultiplied and rounded
// half-up back to 8 bits. Same-size resize returns the input unchanged.
inline RgbaImage resize(const RgbaImage& img, int w, int h) {
  if (w < 1 || h < 1) throw DimensionMismatch("resize target must be at least 1x1");
  if (w == img.width() && h == img.height()) return img;
  BilinearSampler sampler(img, w, h);
  RgbaImage out(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) store_straight(sampler.at(x, y), out.pixel(x, y));
  return out;
}

// Paints placements in ascending hierarchy over an opaque white canvas with
// source-over, accumulating in double precision and rounding once at the end.
// Mask indices refer to positions in d.placements.
inline CompositeResult composite(const DraftProtocol& d, const AssetMap& assets,
                                 int threshold_alpha = kDefaultCoverageThreshold) {
  const int cw = d.canvas.width, ch = d.canvas.height;
  const std::size_t n_px = static_cast<std::size_t>(cw) * ch;

  std::vector<std::size_t> order(d.placements.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return d.placements[a].hierarchy < d.placements[b].hierarchy;
  });
  for (const auto& p : d.placements)
    if (assets.find(p.element_id) == assets.end()) throw MissingAsset(p.element_id);

  std::vector<PremulPixel> canvas(n_px, PremulPixel{255.0, 255.0, 255.0, 1.0});
  CoverageMask mask;
  mask.width = cw;
  mask.height = ch;
  mask.top.assign(n_px, CoverageMask::kNone);
  mask.alpha.assign(n_px, 0.0);
  const double cover_cut = threshold_alpha / 255.0;

  for (std::size_t idx : order) {
    const auto& p = d.placements[idx];
    const RgbaImage& asset = assets.find(p.element_id)->second;
    const int x_begin = std::max(0, p.x), x_end = static_cast<int>(std::min<long long>(cw, 1ll * p.x + p.w));
    const int y_begin = std::max(0, p.y), y_end = static_cast<int>(std::min<long long>(ch, 1ll * p.y + p.h));
    if (x_begin >= x_end || y_begin >= y_end) continue;
    BilinearSampler sampler(asset, p.w, p.h);
    for (int y = y_begin; y < y_end; ++y) {
      for (int x = x_begin; x < x_end; ++x) {
        const PremulPixel src = sampler.at(x - p.x, y - p.y);
        const std::size_t k = static_cast<std::size_t>(y) * cw + x;
        canvas[k] = over(src, canvas[k]);
        mask.alpha[k] = src.a + mask.alpha[k] * (1.0 - src.a);
        if (src.a > cover_cut) mask.top[k] = static_cast<int>(idx);
      }
    }
  }

  RgbaImage out(cw, ch);
  for (int y = 0; y < ch; ++y)
    for (int x = 0; x < cw; ++x) store_straight(canvas[static_cast<std::size_t>(y) * cw + x], out.pixel(x, y));
  return {std::move(out), std::move(mask)};
}

inline ElementStats element_stats(const RgbaImage& img) {
  ElementStats s;
  const int w = img.width(), h = img.height();
  std::size_t covered = 0;
  double luma_sum = 0.0;
  int min_x = w, min_y = h, max_x = -1, max_y = -1;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const auto* px = img.pixel(x, y);
      if (px[3] == 0) continue;
      ++covered;
      luma_sum += luma(px[0], px[1], px[2]);
      min_x = std::min(min_x, x);
      max_x = std::max(max_x, x);
      min_y = std::min(min_y, y);
      max_y = std::max(max_y, y);
    }
  }
  const double total = static_cast<double>(img.pixel_count());
  s.alpha_coverage = covered / total;
  if (covered > 0) {
    s.bbox_tightness = (static_cast<double>(max_x - min_x + 1) * (max_y - min_y + 1)) / total;
    s.mean_luma = luma_sum / static_cast<double>(covered);
  }
  s.aspect = static_cast<double>(w) / h;
  return s;
}

// Luma of the image flattened over white, on the 0..255 scale.
inline GrayMap luma_over_white(const RgbaImage& img) {
  GrayMap g(img.width(), img.height());
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      const auto* px = img.pixel(x, y);
      const double a = px[3] / 255.0;
      auto flat = [a](double c) { return c * a + 255.0 * (1.0 - a); };
      g.at(x, y) = px[3] == 255 ? luma(px[0], px[1], px[2]) : luma(flat(px[0]), flat(px[1]), flat(px[2]));
    }
  }
  return g;
}

// Saliency stand-in: Sobel gradient magnitude of luma (replicated borders),
// 5x5 box blur, normalized so the maximum is 1. Constant images map to zero.
inline GrayMap saliency_proxy(const RgbaImage& img) {
  const GrayMap l = luma_over_white(img);
  const int w = l.width, h = l.height;
  auto L = [&](int x, int y) { return l.at(std::clamp(x, 0, w - 1), std::clamp(y, 0, h - 1)); };

  GrayMap mag(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double gx = (L(x + 1, y - 1) + 2 * L(x + 1, y) + L(x + 1, y + 1)) -
                        (L(x - 1, y - 1) + 2 * L(x - 1, y) + L(x - 1, y + 1));
      const double gy = (L(x - 1, y + 1) + 2 * L(x, y + 1) + L(x + 1, y + 1)) -
                        (L(x - 1, y - 1) + 2 * L(x, y - 1) + L(x + 1, y - 1));
      mag.at(x, y) = std::sqrt(gx * gx + gy * gy);
    }
  }

  constexpr int kRadius = 2;
  constexpr double kTaps = (2 * kRadius + 1) * (2 * kRadius + 1);
  GrayMap out(w, h);
  double peak = 0.0;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double sum = 0.0;
      for (int dy = -kRadius; dy <= kRadius; ++dy)
        for (int dx = -kRadius; dx <= kRadius; ++dx)
          sum += mag.at(std::clamp(x + dx, 0, w - 1), std::clamp(y + dy, 0, h - 1));
      out.at(x, y) = sum / kTaps;
      peak = std::max(peak, out.at(x, y));
    }
  }
  if (peak <= 0.0) return GrayMap(w, h, 0.0);
  for (double& v : out.values) v /= peak;
  return out;
}

// A user-supplied grayscale saliency image mapped to [0, 1].
inline GrayMap gray_from_image(const RgbaImage& img) {
  GrayMap g(img.width(), img.height());
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x) {
      const auto* px = img.pixel(x, y);
      g.at(x, y) = std::clamp(luma(px[0], px[1], px[2]) / 255.0, 0.0, 1.0);
    }
  return g;
}

}  // namespace hlg
