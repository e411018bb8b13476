#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace superlime::imaging {

struct Rgb {
  std::uint8_t r = 0;
  std::uint8_t g = 0;
  std::uint8_t b = 0;

  friend bool operator==(const Rgb&, const Rgb&) = default;
};

struct Lab {
  double l = 0.0;
  double a = 0.0;
  double b = 0.0;

  friend bool operator==(const Lab&, const Lab&) = default;
};

// Row-major raster with strictly positive dimensions. The constructors enforce
// the size invariant, so every instance in circulation is valid.
template <typename Pixel>
class Raster {
 public:
  Raster(std::size_t width, std::size_t height, Pixel fill = Pixel{});
  Raster(std::size_t width, std::size_t height, std::vector<Pixel> pixels);

  std::size_t width() const noexcept { return width_; }
  std::size_t height() const noexcept { return height_; }
  std::size_t size() const noexcept { return pixels_.size(); }

  const Pixel& at(std::size_t x, std::size_t y) const { return pixels_[y * width_ + x]; }
  Pixel& at(std::size_t x, std::size_t y) { return pixels_[y * width_ + x]; }
  const Pixel& operator[](std::size_t i) const { return pixels_[i]; }
  Pixel& operator[](std::size_t i) { return pixels_[i]; }

  std::span<const Pixel> pixels() const noexcept { return pixels_; }
  std::span<Pixel> pixels() noexcept { return pixels_; }

  bool same_shape(std::size_t w, std::size_t h) const noexcept {
    return width_ == w && height_ == h;
  }
  template <typename Other>
  bool same_shape(const Other& o) const noexcept {
    return same_shape(o.width(), o.height());
  }

  friend bool operator==(const Raster&, const Raster&) = default;

 private:
  std::size_t width_;
  std::size_t height_;
  std::vector<Pixel> pixels_;
};

using Image = Raster<Rgb>;
using LabImage = Raster<Lab>;
// Non-negative squared gradient magnitude per pixel.
using GradientMap = Raster<double>;
// One byte per pixel, 0 or 1.
using BinaryMask = Raster<std::uint8_t>;

extern template class Raster<Rgb>;
extern template class Raster<Lab>;
extern template class Raster<double>;
extern template class Raster<std::uint8_t>;
extern template class Raster<std::uint16_t>;

// sRGB (D65) <-> CIELAB.
Lab rgb_to_lab(Rgb c);
Rgb lab_to_rgb(const Lab& c);
LabImage rgb_to_lab(const Image& img);
Image lab_to_rgb(const LabImage& img);

// G(x,y) = |I(x+1,y) - I(x-1,y)|^2 + |I(x,y+1) - I(x,y-1)|^2 over the full
// Lab vector, border neighbours clamped.
GradientMap gradient_magnitude(const LabImage& img);

// The L channel as a scalar raster ("grey tone").
Raster<double> lightness(const LabImage& img);

std::size_t count_set(const BinaryMask& mask);

// PNG I/O. load_png accepts 8-bit grey, RGB, RGBA (alpha dropped) and palette
// files; 16-bit files raise IoError::Kind::unsupported_depth.
Image load_png(const std::filesystem::path& path);
void save_png(const Image& img, const std::filesystem::path& path);

// Masks are stored as 8-bit greyscale with 0 / 255; any nonzero sample loads
// as set.
BinaryMask load_mask_png(const std::filesystem::path& path);
void save_mask_png(const BinaryMask& mask, const std::filesystem::path& path);

Raster<std::uint16_t> load_gray16_png(const std::filesystem::path& path);
void save_gray16_png(const Raster<std::uint16_t>& img, const std::filesystem::path& path);

}  // namespace superlime::imaging
