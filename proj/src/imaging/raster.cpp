#include <algorithm>
#include <string>

#include "superlime/error.hpp"
#include "superlime/imaging.hpp"

namespace superlime::imaging {

template <typename Pixel>
Raster<Pixel>::Raster(std::size_t width, std::size_t height, Pixel fill)
    : width_(width), height_(height) {
  if (width == 0 || height == 0) {
    throw InvalidArgument("raster dimensions must be positive, got " + std::to_string(width) +
                          "x" + std::to_string(height));
  }
  pixels_.assign(width * height, fill);
}

template <typename Pixel>
Raster<Pixel>::Raster(std::size_t width, std::size_t height, std::vector<Pixel> pixels)
    : width_(width), height_(height), pixels_(std::move(pixels)) {
  if (width == 0 || height == 0) {
    throw InvalidArgument("raster dimensions must be positive, got " + std::to_string(width) +
                          "x" + std::to_string(height));
  }
  if (pixels_.size() != width * height) {
    throw InvalidArgument("pixel count " + std::to_string(pixels_.size()) +
                          " does not match " + std::to_string(width) + "x" +
                          std::to_string(height));
  }
}

template class Raster<Rgb>;
template class Raster<Lab>;
template class Raster<double>;
template class Raster<std::uint8_t>;
template class Raster<std::uint16_t>;

namespace {

double squared_distance(const Lab& p, const Lab& q) {
  const double dl = p.l - q.l;
  const double da = p.a - q.a;
  const double db = p.b - q.b;
  return dl * dl + da * da + db * db;
}

}  // namespace

GradientMap gradient_magnitude(const LabImage& img) {
  const std::size_t w = img.width();
  const std::size_t h = img.height();
  GradientMap out(w, h, 0.0);
  for (std::size_t y = 0; y < h; ++y) {
    const std::size_t up = y == 0 ? 0 : y - 1;
    const std::size_t down = std::min(y + 1, h - 1);
    for (std::size_t x = 0; x < w; ++x) {
      const std::size_t left = x == 0 ? 0 : x - 1;
      const std::size_t right = std::min(x + 1, w - 1);
      out.at(x, y) = squared_distance(img.at(right, y), img.at(left, y)) +
                     squared_distance(img.at(x, down), img.at(x, up));
    }
  }
  return out;
}

Raster<double> lightness(const LabImage& img) {
  Raster<double> out(img.width(), img.height());
  std::transform(img.pixels().begin(), img.pixels().end(), out.pixels().begin(),
                 [](const Lab& c) { return c.l; });
  return out;
}

std::size_t count_set(const BinaryMask& mask) {
  return static_cast<std::size_t>(
      std::count_if(mask.pixels().begin(), mask.pixels().end(), [](std::uint8_t v) { return v != 0; }));
}

}  // namespace superlime::imaging
