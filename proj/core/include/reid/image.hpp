#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

namespace reid {

/// Interleaved 8-bit raster (HxWxC, row-major). C is 1 or 3.
struct Image {
  int height = 0;
  int width = 0;
  int channels = 0;
  std::vector<std::uint8_t> pixels;

  Image() = default;
  Image(int h, int w, int c, std::uint8_t value = 0)
      : height(h), width(w), channels(c), pixels(static_cast<std::size_t>(h) * w * c, value) {}

  bool empty() const noexcept { return pixels.empty(); }
  std::size_t index(int y, int x, int c = 0) const noexcept {
    return (static_cast<std::size_t>(y) * width + x) * channels + c;
  }
  std::uint8_t& at(int y, int x, int c = 0) noexcept { return pixels[index(y, x, c)]; }
  std::uint8_t at(int y, int x, int c = 0) const noexcept { return pixels[index(y, x, c)]; }

  friend bool operator==(const Image&, const Image&) = default;
};

/// Decodes an image file. channels = 3 forces RGB, 1 forces grayscale. Throws std::runtime_error on failure.
Image read_image(const std::filesystem::path& path, int channels = 3);

/// Writes losslessly (PNG for any extension other than .ppm/.pgm). Throws on failure.
void write_image(const std::filesystem::path& path, const Image& image);

Image resize_bilinear(const Image& image, int height, int width);
Image resize_nearest(const Image& image, int height, int width);
Image flip_horizontal(const Image& image);
Image crop(const Image& image, int y0, int x0, int height, int width);

}  // namespace reid
