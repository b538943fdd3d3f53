#pragma once

// Desk-scale versions of the sequence-side math: coordinate quantization and
// a token grammar for drafts, input shuffling for augmentation, and the
// pooled "visual shrinker" that turns a ViT feature grid into a handful of
// tokens followed by a linear projection.

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "hlg/draft.hpp"
#include "hlg/error.hpp"
#include "hlg/rng.hpp"

namespace hlg {

struct QuantSpec {
  int bins = 1000;
};

// floor(clamp(value / extent, 0, 1) * bins), with value == extent landing in
// the last bin.
inline int quantize(double value, double extent, const QuantSpec& q = {}) {
  if (!(extent > 0.0)) throw DimensionMismatch("quantize: extent must be positive");
  if (q.bins < 2) throw DimensionMismatch("quantize: bins must be >= 2");
  const double scaled = std::floor(value * q.bins / extent);
  return static_cast<int>(std::clamp(scaled, 0.0, static_cast<double>(q.bins - 1)));
}

// Center of the bin, in canvas units.
inline double dequantize(int bin, double extent, const QuantSpec& q = {}) {
  return (bin + 0.5) * extent / q.bins;
}

struct TokenSequence {
  std::vector<std::string> tokens;

  std::string to_text() const {
    std::string out;
    for (const auto& t : tokens) {
      if (!out.empty()) out += ' ';
      out += t;
    }
    return out;
  }

  static TokenSequence from_text(std::string_view text) {
    TokenSequence seq;
    std::istringstream in{std::string(text)};
    for (std::string t; in >> t;) seq.tokens.push_back(std::move(t));
    return seq;
  }

  friend bool operator==(const TokenSequence&, const TokenSequence&) = default;
};

namespace tokens {
inline constexpr std::string_view kCanvas = "<canvas>";
inline constexpr std::string_view kElement = "<el>";
inline constexpr std::string_view kEnd = "<eos>";
inline constexpr std::size_t kHeaderSize = 3;     // <canvas> W H
inline constexpr std::size_t kElementSize = 6;    // <el> x y w h #rank
}  // namespace tokens

namespace detail {

inline std::string digit_token(int bin, int bins) {
  const auto width = std::to_string(bins - 1).size();
  std::string s = std::to_string(bin);
  if (s.size() < width) s.insert(0, width - s.size(), '0');
  return s;
}

inline int parse_int_token(std::string_view t, std::size_t at) {
  int v = 0;
  auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc{} || ptr != t.data() + t.size())
    throw FormatError("token " + std::to_string(at) + " ('" + std::string(t) + "') is not an integer");
  return v;
}

}  // namespace detail

// Grammar: `<canvas> W H` then, per placement in hierarchy order,
// `<el> x y w h #rank`, then `<eos>`. Coordinates are bins of the canvas
// width (x, w) or height (y, h).
inline TokenSequence encode_draft(const DraftProtocol& draft, const QuantSpec& q = {}) {
  const DraftProtocol d = canonicalize(draft);
  const double cw = d.canvas.width, ch = d.canvas.height;
  TokenSequence seq;
  seq.tokens.reserve(tokens::kHeaderSize + tokens::kElementSize * d.placements.size() + 1);
  seq.tokens.emplace_back(tokens::kCanvas);
  seq.tokens.push_back(std::to_string(d.canvas.width));
  seq.tokens.push_back(std::to_string(d.canvas.height));
  for (const auto& p : d.placements) {
    seq.tokens.emplace_back(tokens::kElement);
    seq.tokens.push_back(detail::digit_token(quantize(p.x, cw, q), q.bins));
    seq.tokens.push_back(detail::digit_token(quantize(p.y, ch, q), q.bins));
    seq.tokens.push_back(detail::digit_token(quantize(p.w, cw, q), q.bins));
    seq.tokens.push_back(detail::digit_token(quantize(p.h, ch, q), q.bins));
    seq.tokens.push_back("#" + std::to_string(p.hierarchy));
  }
  seq.tokens.emplace_back(tokens::kEnd);
  return seq;
}

// Inverse of encode_draft up to quantization. Element ids are not part of the
// grammar: `ids` (in sequence order) names them, otherwise "e0", "e1", ...
inline DraftProtocol decode_draft(const TokenSequence& seq, const QuantSpec& q = {},
                                  const std::vector<std::string>* ids = nullptr) {
  const auto& t = seq.tokens;
  if (t.size() < tokens::kHeaderSize + 1 || t[0] != tokens::kCanvas || t.back() != tokens::kEnd)
    throw FormatError("sequence must start with <canvas> W H and end with <eos>");
  const std::size_t body = t.size() - tokens::kHeaderSize - 1;
  if (body % tokens::kElementSize != 0) throw FormatError("element body length is not a multiple of 6");
  DraftProtocol d;
  d.canvas.width = detail::parse_int_token(t[1], 1);
  d.canvas.height = detail::parse_int_token(t[2], 2);
  const double cw = d.canvas.width, ch = d.canvas.height;
  if (cw < 1 || ch < 1) throw FormatError("canvas dimensions must be positive");
  const std::size_t n = body / tokens::kElementSize;
  if (ids != nullptr && ids->size() != n) throw FormatError("id list length does not match element count");
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t at = tokens::kHeaderSize + k * tokens::kElementSize;
    if (t[at] != tokens::kElement) throw FormatError("expected <el> at token " + std::to_string(at));
    const auto& rank = t[at + 5];
    if (rank.size() < 2 || rank[0] != '#') throw FormatError("expected #rank at token " + std::to_string(at + 5));
    Placement p;
    p.element_id = ids != nullptr ? (*ids)[k] : "e" + std::to_string(k);
    p.x = static_cast<int>(std::lround(dequantize(detail::parse_int_token(t[at + 1], at + 1), cw, q)));
    p.y = static_cast<int>(std::lround(dequantize(detail::parse_int_token(t[at + 2], at + 2), ch, q)));
    p.w = std::max(1, static_cast<int>(std::lround(dequantize(detail::parse_int_token(t[at + 3], at + 3), cw, q))));
    p.h = std::max(1, static_cast<int>(std::lround(dequantize(detail::parse_int_token(t[at + 4], at + 4), ch, q))));
    p.hierarchy = detail::parse_int_token(std::string_view(rank).substr(1), at + 5);
    d.placements.push_back(std::move(p));
  }
  try {
    validate(d);
  } catch (const InvariantError& e) {
    throw FormatError(std::string("decoded draft is invalid: ") + e.what());
  }
  return d;
}

template <typename T>
struct ShuffleResult {
  std::vector<T> items;
  bool shuffled = false;
};

// With probability p applies a uniform Fisher-Yates permutation; otherwise
// returns the input unchanged. One uniform draw decides the branch.
template <typename T>
ShuffleResult<T> shuffle_inputs(std::vector<T> items, double p, Rng& rng) {
  if (!(p >= 0.0 && p <= 1.0)) throw DimensionMismatch("shuffle probability must lie in [0, 1]");
  ShuffleResult<T> out;
  out.shuffled = rng.uniform() < p;
  if (out.shuffled)
    for (std::size_t i = items.size(); i > 1; --i) std::swap(items[i - 1], items[rng.below(i)]);
  out.items = std::move(items);
  return out;
}

template <typename T>
ShuffleResult<T> shuffle_inputs(std::vector<T> items, double p, std::uint64_t seed) {
  Rng rng(seed);
  return shuffle_inputs(std::move(items), p, rng);
}

// Dense row-major matrix of doubles.
struct Matrix {
  int rows = 0;
  int cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(int r, int c, double fill = 0.0) : rows(r), cols(c), data(static_cast<std::size_t>(r) * c, fill) {}

  double& operator()(int r, int c) { return data[static_cast<std::size_t>(r) * cols + c]; }
  double operator()(int r, int c) const { return data[static_cast<std::size_t>(r) * cols + c]; }

  friend bool operator==(const Matrix&, const Matrix&) = default;
};

// grid_h x grid_w feature tokens of dimension `dim` plus one cls vector.
struct FeatureGrid {
  int grid_h = 16;
  int grid_w = 16;
  int dim = 1;
  std::vector<double> cells;  // (row, col, channel), row-major
  std::vector<double> cls;

  FeatureGrid() = default;
  FeatureGrid(int h, int w, int d)
      : grid_h(h), grid_w(w), dim(d), cells(static_cast<std::size_t>(h) * w * d, 0.0), cls(d, 0.0) {}

  double& at(int r, int c, int k) { return cells[(static_cast<std::size_t>(r) * grid_w + c) * dim + k]; }
  double at(int r, int c, int k) const { return cells[(static_cast<std::size_t>(r) * grid_w + c) * dim + k]; }

  friend bool operator==(const FeatureGrid&, const FeatureGrid&) = default;
};

// 2D average pooling of the grid down to pooled_side x pooled_side tokens
// (row-major), then the cls vector appended unchanged. The 16x16 grid with
// pooled_side = 2 yields 5 tokens.
inline Matrix visual_shrink(const FeatureGrid& grid, int pooled_side = 2) {
  if (pooled_side < 1) throw DivisibilityError("pooled side must be positive");
  if (grid.grid_h % pooled_side != 0 || grid.grid_w % pooled_side != 0)
    throw DivisibilityError("grid " + std::to_string(grid.grid_h) + "x" + std::to_string(grid.grid_w) +
                            " is not divisible into " + std::to_string(pooled_side) + "x" +
                            std::to_string(pooled_side) + " blocks");
  if (grid.cells.size() != static_cast<std::size_t>(grid.grid_h) * grid.grid_w * grid.dim ||
      grid.cls.size() != static_cast<std::size_t>(grid.dim))
    throw DimensionMismatch("feature grid buffers do not match its shape");
  const int bh = grid.grid_h / pooled_side, bw = grid.grid_w / pooled_side;
  const double count = static_cast<double>(bh) * bw;
  Matrix out(pooled_side * pooled_side + 1, grid.dim);
  for (int br = 0; br < pooled_side; ++br)
    for (int bc = 0; bc < pooled_side; ++bc) {
      const int row = br * pooled_side + bc;
      for (int k = 0; k < grid.dim; ++k) {
        double sum = 0.0;
        for (int r = br * bh; r < (br + 1) * bh; ++r)
          for (int c = bc * bw; c < (bc + 1) * bw; ++c) sum += grid.at(r, c, k);
        out(row, k) = sum / count;
      }
    }
  for (int k = 0; k < grid.dim; ++k) out(out.rows - 1, k) = grid.cls[k];
  return out;
}

// Row-wise affine map: out = tokens * weight + bias, weight is D x D'.
inline Matrix project(const Matrix& tokens, const Matrix& weight, std::span<const double> bias) {
  if (tokens.cols != weight.rows)
    throw DimensionMismatch("token dim " + std::to_string(tokens.cols) + " does not match weight rows " +
                            std::to_string(weight.rows));
  if (bias.size() != static_cast<std::size_t>(weight.cols))
    throw DimensionMismatch("bias length does not match weight columns");
  Matrix out(tokens.rows, weight.cols);
  for (int r = 0; r < tokens.rows; ++r)
    for (int c = 0; c < weight.cols; ++c) {
      double acc = bias[c];
      for (int k = 0; k < tokens.cols; ++k) acc += tokens(r, k) * weight(k, c);
      out(r, c) = acc;
    }
  return out;
}

// Binary feature grid file: 16-byte header ("HLGF", then grid_h, grid_w and
// dim as little-endian uint32), followed by grid_h*grid_w*dim cell values and
// dim cls values, all little-endian IEEE-754 float32.
inline constexpr char kFeatureGridMagic[4] = {'H', 'L', 'G', 'F'};

namespace detail {

inline void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

inline std::uint32_t get_u32(std::string_view in, std::size_t at) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(in[at + i])) << (8 * i);
  return v;
}

}  // namespace detail

inline std::string save_feature_grid(const FeatureGrid& g) {
  std::string out(kFeatureGridMagic, 4);
  detail::put_u32(out, static_cast<std::uint32_t>(g.grid_h));
  detail::put_u32(out, static_cast<std::uint32_t>(g.grid_w));
  detail::put_u32(out, static_cast<std::uint32_t>(g.dim));
  for (double v : g.cells) detail::put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
  for (double v : g.cls) detail::put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
  return out;
}

inline FeatureGrid load_feature_grid(std::string_view bytes) {
  if (bytes.size() < 16 || bytes.substr(0, 4) != std::string_view(kFeatureGridMagic, 4))
    throw FormatError("not a feature grid file (bad magic)");
  const auto h = detail::get_u32(bytes, 4), w = detail::get_u32(bytes, 8), d = detail::get_u32(bytes, 12);
  if (h == 0 || w == 0 || d == 0 || h > 4096 || w > 4096 || d > (1u << 20))
    throw FormatError("feature grid header has invalid dimensions");
  const std::uint64_t values = static_cast<std::uint64_t>(h) * w * d + d;
  if (bytes.size() != 16 + 4 * values)
    throw FormatError("feature grid payload is " + std::to_string(bytes.size() - 16) + " bytes, expected " +
                      std::to_string(4 * values));
  FeatureGrid g(static_cast<int>(h), static_cast<int>(w), static_cast<int>(d));
  std::size_t at = 16;
  for (double& v : g.cells) {
    v = std::bit_cast<float>(detail::get_u32(bytes, at));
    at += 4;
  }
  for (double& v : g.cls) {
    v = std::bit_cast<float>(detail::get_u32(bytes, at));
    at += 4;
  }
  return g;
}

}  // namespace hlg
