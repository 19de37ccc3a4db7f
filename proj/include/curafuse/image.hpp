#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <variant>
#include <vector>

namespace curafuse {

class ImageDecodeError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// 8-bit interleaved raster. channels is 1 (gray), 3 (RGB) or 4 (RGBA).
struct Raster {
  std::size_t width = 0;
  std::size_t height = 0;
  std::size_t channels = 0;
  std::vector<std::uint8_t> pixels;

  Raster() = default;
  Raster(std::size_t w, std::size_t h, std::size_t c)
      : width(w), height(h), channels(c), pixels(w * h * c, 0) {}

  std::uint8_t& at(std::size_t x, std::size_t y, std::size_t ch) {
    return pixels[(y * width + x) * channels + ch];
  }
  std::uint8_t at(std::size_t x, std::size_t y, std::size_t ch) const {
    return pixels[(y * width + x) * channels + ch];
  }
  bool empty() const { return width == 0 || height == 0; }
  friend bool operator==(const Raster&, const Raster&) = default;
};

/// Where a post's image lives: a file on disk or encoded bytes held in memory.
using ImageRef = std::variant<std::filesystem::path, std::vector<std::uint8_t>>;

/// Decodes PNG, JPEG, or binary PGM/PPM (P5/P6) by magic number.
Raster decode_image_bytes(std::span<const std::uint8_t> bytes);
Raster decode_image(const ImageRef& ref);

std::vector<std::uint8_t> encode_pnm(const Raster& img);
std::vector<std::uint8_t> encode_png(const Raster& img);

}  // namespace curafuse
