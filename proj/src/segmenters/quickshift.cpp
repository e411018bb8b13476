#include <algorithm>
#include <cmath>
#include <limits>

#include "superlime/segmenters.hpp"

namespace superlime::seg {

namespace {

double lab_distance_sq(const imaging::Lab& p, const imaging::Lab& q) {
  const double dl = p.l - q.l;
  const double da = p.a - q.a;
  const double db = p.b - q.b;
  return dl * dl + da * da + db * db;
}

}  // namespace

QuickShiftForest quickshift_forest(const Image& img, const QuickShiftParams& p) {
  validate(p, img.width(), img.height());
  const auto lab = imaging::rgb_to_lab(img);
  const auto w = static_cast<std::ptrdiff_t>(img.width());
  const auto h = static_cast<std::ptrdiff_t>(img.height());
  const double lambda_sq = p.spatial_weight * p.spatial_weight;
  const double two_sigma_sq = 2.0 * p.kernel_size * p.kernel_size;

  QuickShiftForest forest;
  forest.density.assign(img.size(), 0.0);
  forest.parent.resize(img.size());

  // Density over a Chebyshev window of radius ceil(3 sigma). Window positions
  // outside the raster read the clamped border pixel at its virtual position,
  // so every pixel sums over an identical footprint.
  const auto radius = static_cast<std::ptrdiff_t>(std::ceil(3.0 * p.kernel_size));
  for (std::ptrdiff_t y = 0; y < h; ++y) {
    for (std::ptrdiff_t x = 0; x < w; ++x) {
      const auto& centre = lab.at(x, y);
      double sum = 0.0;
      for (std::ptrdiff_t dy = -radius; dy <= radius; ++dy) {
        const std::ptrdiff_t sy = std::clamp(y + dy, std::ptrdiff_t{0}, h - 1);
        for (std::ptrdiff_t dx = -radius; dx <= radius; ++dx) {
          const std::ptrdiff_t sx = std::clamp(x + dx, std::ptrdiff_t{0}, w - 1);
          const double d2 = lambda_sq * static_cast<double>(dx * dx + dy * dy) +
                            lab_distance_sq(centre, lab.at(sx, sy));
          sum += std::exp(-d2 / two_sigma_sq);
        }
      }
      forest.density[y * w + x] = sum;
    }
  }

  // Link each pixel to the closest (in feature space) strictly denser pixel
  // within max_dist; scanning in row-major order with strict < keeps the
  // smallest index on ties.
  const auto reach = static_cast<std::ptrdiff_t>(std::floor(p.max_dist));
  const double max_dist_sq = p.max_dist * p.max_dist;
  for (std::ptrdiff_t y = 0; y < h; ++y) {
    for (std::ptrdiff_t x = 0; x < w; ++x) {
      const std::ptrdiff_t i = y * w + x;
      const auto& centre = lab.at(x, y);
      const double own = forest.density[i];
      double best = std::numeric_limits<double>::infinity();
      std::ptrdiff_t parent = i;
      for (std::ptrdiff_t ny = std::max(y - reach, std::ptrdiff_t{0}); ny <= std::min(y + reach, h - 1); ++ny) {
        for (std::ptrdiff_t nx = std::max(x - reach, std::ptrdiff_t{0}); nx <= std::min(x + reach, w - 1); ++nx) {
          const auto spatial = static_cast<double>((nx - x) * (nx - x) + (ny - y) * (ny - y));
          if (spatial > max_dist_sq) continue;
          const std::ptrdiff_t j = ny * w + nx;
          if (!(forest.density[j] > own * (1.0 + kQuickShiftDensityTie))) continue;
          const double d2 = lambda_sq * spatial + lab_distance_sq(centre, lab.at(nx, ny));
          if (d2 < best) {
            best = d2;
            parent = j;
          }
        }
      }
      forest.parent[i] = static_cast<std::uint32_t>(parent);
    }
  }
  return forest;
}

LabelMap segment_quickshift(const Image& img, const QuickShiftParams& p, std::uint64_t /*seed*/) {
  QuickShiftForest forest = quickshift_forest(img, p);
  std::vector<std::uint32_t> root(forest.parent.size());
  for (std::size_t i = 0; i < root.size(); ++i) {
    std::uint32_t r = static_cast<std::uint32_t>(i);
    while (forest.parent[r] != r) r = forest.parent[r];
    root[i] = r;
  }
  return LabelMap::densify(img.width(), img.height(), root);
}

}  // namespace superlime::seg
