#pragma once

// PNG decode/encode through libpng's simplified API, plus small file helpers.

#include <png.h>

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <span>
#include <string>
#include <vector>

#include "hlg/error.hpp"
#include "hlg/raster.hpp"

namespace hlg {

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_file(const std::filesystem::path& path, std::string_view bytes) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("short write to '" + path.string() + "'");
}

inline std::span<const std::uint8_t> as_bytes(std::string_view s) {
  return {reinterpret_cast<const std::uint8_t*>(s.data()), s.size()};
}

// 8-bit PNG (gray, gray+alpha, RGB, RGBA or palette) to straight RGBA.
// Missing alpha becomes 255. Other bit depths raise DecodeError.
inline RgbaImage decode_png(std::span<const std::uint8_t> bytes) {
  static constexpr std::uint8_t kSignature[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1A, '\n'};
  // signature + IHDR length/type + width + height + bit depth + color type
  if (bytes.size() < 8 + 8 + 8 + 2 || std::memcmp(bytes.data(), kSignature, 8) != 0)
    throw DecodeError("not a PNG stream");
  if (std::memcmp(bytes.data() + 12, "IHDR", 4) != 0) throw DecodeError("missing IHDR chunk");
  const int bit_depth = bytes[24];
  const int color_type = bytes[25];
  const bool palette = color_type == 3;
  if (bit_depth != 8 && !palette)
    throw DecodeError("unsupported bit depth " + std::to_string(bit_depth) + " (only 8-bit is accepted)");

  png_image image;
  std::memset(&image, 0, sizeof image);
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&image, bytes.data(), bytes.size())) {
    const std::string msg = image.message;
    png_image_free(&image);
    throw DecodeError("corrupt PNG: " + msg);
  }
  image.format = PNG_FORMAT_RGBA;
  if (image.width == 0 || image.height == 0 || image.width > (1u << 15) || image.height > (1u << 15)) {
    png_image_free(&image);
    throw DecodeError("unsupported PNG dimensions");
  }
  std::vector<std::uint8_t> data(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, data.data(), 0, nullptr)) {
    const std::string msg = image.message;
    png_image_free(&image);
    throw DecodeError("corrupt PNG: " + msg);
  }
  return RgbaImage(static_cast<int>(image.width), static_cast<int>(image.height), std::move(data));
}

inline RgbaImage load_png(const std::filesystem::path& path) {
  const std::string bytes = read_file(path);
  try {
    return decode_png(as_bytes(bytes));
  } catch (const DecodeError& e) {
    throw DecodeError(path.string() + ": " + e.what());
  }
}

namespace detail {

inline std::string write_png_memory(png_image& image, const void* buffer) {
  png_alloc_size_t size = 0;
  if (!png_image_write_to_memory(&image, nullptr, &size, 0, buffer, 0, nullptr))
    throw EncodeError(std::string("PNG encode failed: ") + image.message);
  std::string out(size, '\0');
  if (!png_image_write_to_memory(&image, out.data(), &size, 0, buffer, 0, nullptr))
    throw EncodeError(std::string("PNG encode failed: ") + image.message);
  out.resize(size);
  return out;
}

}  // namespace detail

inline std::string encode_png(const RgbaImage& img) {
  png_image image;
  std::memset(&image, 0, sizeof image);
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(img.width());
  image.height = static_cast<png_uint_32>(img.height());
  image.format = PNG_FORMAT_RGBA;
  return detail::write_png_memory(image, img.bytes().data());
}

// Coverage mask debug export: 16-bit grayscale, value = top layer index + 1
// (0 where nothing covers the pixel).
inline std::string encode_mask_png(const CoverageMask& mask) {
  std::vector<std::uint16_t> values(mask.top.size());
  for (std::size_t i = 0; i < values.size(); ++i) values[i] = static_cast<std::uint16_t>(mask.top[i] + 1);
  png_image image;
  std::memset(&image, 0, sizeof image);
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(mask.width);
  image.height = static_cast<png_uint_32>(mask.height);
  image.format = PNG_FORMAT_LINEAR_Y;
  return detail::write_png_memory(image, values.data());
}

}  // namespace hlg
