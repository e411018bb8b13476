#include <algorithm>
#include <limits>
#include <queue>
#include <unordered_map>

#include "superlime/error.hpp"
#include "superlime/segmenters.hpp"

namespace superlime::seg {

LabelMap LabelMap::densify(std::size_t width, std::size_t height, std::span<const std::uint32_t> raw) {
  if (width == 0 || height == 0 || raw.size() != width * height) {
    throw InvalidArgument("label buffer does not match " + std::to_string(width) + "x" +
                          std::to_string(height));
  }
  std::unordered_map<std::uint32_t, std::uint32_t> remap;
  std::vector<std::uint32_t> labels(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    auto [it, inserted] = remap.try_emplace(raw[i], static_cast<std::uint32_t>(remap.size()));
    labels[i] = it->second;
  }
  const auto n = static_cast<std::uint32_t>(remap.size());
  return LabelMap(width, height, std::move(labels), n);
}

LabelMap LabelMap::from_dense(std::size_t width, std::size_t height, std::vector<std::uint32_t> labels) {
  if (width == 0 || height == 0 || labels.size() != width * height) {
    throw InvalidArgument("label buffer does not match " + std::to_string(width) + "x" +
                          std::to_string(height));
  }
  const std::uint32_t n = *std::max_element(labels.begin(), labels.end()) + 1;
  LabelMap lm(width, height, std::move(labels), n);
  if (!is_dense_partition(lm)) throw InvalidArgument("labels are not dense");
  return lm;
}

std::vector<std::size_t> LabelMap::segment_sizes() const {
  std::vector<std::size_t> sizes(n_segments_, 0);
  for (std::uint32_t l : labels_) ++sizes[l];
  return sizes;
}

bool is_dense_partition(const LabelMap& lm) {
  if (lm.n_segments() == 0 || lm.size() != lm.width() * lm.height()) return false;
  std::vector<bool> seen(lm.n_segments(), false);
  for (std::uint32_t l : lm.labels()) {
    if (l >= lm.n_segments()) return false;
    seen[l] = true;
  }
  return std::all_of(seen.begin(), seen.end(), [](bool b) { return b; });
}

bool segments_connected(const LabelMap& lm, Connectivity conn) {
  const auto w = static_cast<std::ptrdiff_t>(lm.width());
  const auto h = static_cast<std::ptrdiff_t>(lm.height());
  std::vector<bool> segment_seen(lm.n_segments(), false);
  std::vector<bool> visited(lm.size(), false);
  std::queue<std::ptrdiff_t> frontier;
  for (std::ptrdiff_t start = 0; start < w * h; ++start) {
    if (visited[start]) continue;
    const std::uint32_t label = lm[start];
    if (segment_seen[label]) return false;  // second component of the same label
    segment_seen[label] = true;
    visited[start] = true;
    frontier.push(start);
    while (!frontier.empty()) {
      const std::ptrdiff_t i = frontier.front();
      frontier.pop();
      const std::ptrdiff_t x = i % w;
      const std::ptrdiff_t y = i / w;
      for (std::ptrdiff_t dy = -1; dy <= 1; ++dy) {
        for (std::ptrdiff_t dx = -1; dx <= 1; ++dx) {
          if (dx == 0 && dy == 0) continue;
          if (conn == Connectivity::four && dx != 0 && dy != 0) continue;
          const std::ptrdiff_t nx = x + dx;
          const std::ptrdiff_t ny = y + dy;
          if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
          const std::ptrdiff_t j = ny * w + nx;
          if (!visited[j] && lm[j] == label) {
            visited[j] = true;
            frontier.push(j);
          }
        }
      }
    }
  }
  return true;
}

Image boundary_overlay(const Image& img, const LabelMap& lm, Rgb color) {
  if (!img.same_shape(lm.width(), lm.height())) {
    throw InvalidArgument("overlay: image is " + std::to_string(img.width()) + "x" +
                          std::to_string(img.height()) + " but label map is " +
                          std::to_string(lm.width()) + "x" + std::to_string(lm.height()));
  }
  Image out = img;
  const std::size_t w = lm.width();
  const std::size_t h = lm.height();
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      const std::uint32_t l = lm.at(x, y);
      const bool edge = (x > 0 && lm.at(x - 1, y) != l) || (x + 1 < w && lm.at(x + 1, y) != l) ||
                        (y > 0 && lm.at(x, y - 1) != l) || (y + 1 < h && lm.at(x, y + 1) != l);
      if (edge) out.at(x, y) = color;
    }
  }
  return out;
}

void save_labels_png(const LabelMap& lm, const std::filesystem::path& path) {
  if (lm.n_segments() > std::numeric_limits<std::uint16_t>::max() + 1u) {
    throw InvalidArgument("label map has " + std::to_string(lm.n_segments()) +
                          " segments; 16-bit label PNGs hold at most 65536");
  }
  std::vector<std::uint16_t> values(lm.labels().begin(), lm.labels().end());
  imaging::save_gray16_png(imaging::Raster<std::uint16_t>(lm.width(), lm.height(), std::move(values)), path);
}

LabelMap load_labels_png(const std::filesystem::path& path) {
  const auto raster = imaging::load_gray16_png(path);
  std::vector<std::uint32_t> raw(raster.pixels().begin(), raster.pixels().end());
  try {
    return LabelMap::from_dense(raster.width(), raster.height(), std::move(raw));
  } catch (const InvalidArgument&) {
    throw IoError(IoError::Kind::malformed, "'" + path.string() + "' does not hold dense labels");
  }
}

}  // namespace superlime::seg
