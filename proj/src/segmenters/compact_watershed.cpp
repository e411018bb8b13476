#include <algorithm>
#include <cmath>
#include <queue>

#include "superlime/segmenters.hpp"

namespace superlime::seg {

std::vector<std::size_t> marker_grid(std::size_t width, std::size_t height, std::uint32_t n_markers) {
  const std::size_t n = n_markers;
  // Rows ~ H / S with S = sqrt(N / n); bumped until every row fits its share.
  auto rows = static_cast<std::size_t>(std::lround(std::sqrt(static_cast<double>(n) * height / width)));
  rows = std::clamp<std::size_t>(rows, 1, std::min(n, height));
  while ((n + rows - 1) / rows > width) ++rows;

  std::vector<std::size_t> seeds;
  seeds.reserve(n);
  const std::size_t base = n / rows;
  const std::size_t extra = n % rows;
  for (std::size_t r = 0; r < rows; ++r) {
    const std::size_t cols = base + (r < extra ? 1 : 0);
    const auto y = static_cast<std::size_t>(std::floor((r + 0.5) * height / rows));
    for (std::size_t c = 0; c < cols; ++c) {
      const auto x = static_cast<std::size_t>(std::floor((c + 0.5) * width / cols));
      seeds.push_back(y * width + x);
    }
  }
  return seeds;
}

namespace {

struct Candidate {
  double cost;
  std::uint64_t order;
  std::size_t pixel;
  std::uint32_t label;

  // Min-heap on cost, then FIFO.
  bool operator>(const Candidate& o) const {
    return cost != o.cost ? cost > o.cost : order > o.order;
  }
};

}  // namespace

LabelMap segment_compact_watershed(const Image& img, const CompactWatershedParams& p, FloodTrace* trace) {
  validate(p, img.width(), img.height());
  const std::size_t w = img.width();
  const std::size_t h = img.height();
  const auto grey = imaging::lightness(imaging::rgb_to_lab(img));
  const std::vector<std::size_t> seeds = marker_grid(w, h, p.n_markers);

  std::vector<std::uint32_t> labels(w * h, 0);  // 0 = not yet flooded
  std::priority_queue<Candidate, std::vector<Candidate>, std::greater<>> queue;
  std::uint64_t order = 0;
  if (trace != nullptr) trace->pop_order.clear();

  auto push_neighbours = [&](std::size_t i, std::uint32_t label) {
    const std::size_t seed = seeds[label - 1];
    const double sx = static_cast<double>(seed % w);
    const double sy = static_cast<double>(seed / w);
    const double seed_grey = grey[seed];
    auto push = [&](std::size_t j) {
      if (labels[j] != 0) return;
      const double dx = static_cast<double>(j % w) - sx;
      const double dy = static_cast<double>(j / w) - sy;
      const double cost = std::abs(grey[j] - seed_grey) + p.compactness * std::sqrt(dx * dx + dy * dy);
      queue.push({cost, order++, j, label});
    };
    const std::size_t x = i % w;
    const std::size_t y = i / w;
    if (x > 0) push(i - 1);
    if (x + 1 < w) push(i + 1);
    if (y > 0) push(i - w);
    if (y + 1 < h) push(i + w);
  };

  for (std::size_t k = 0; k < seeds.size(); ++k) {
    labels[seeds[k]] = static_cast<std::uint32_t>(k + 1);
    if (trace != nullptr) trace->pop_order.push_back(seeds[k]);
  }
  for (std::size_t k = 0; k < seeds.size(); ++k) {
    push_neighbours(seeds[k], static_cast<std::uint32_t>(k + 1));
  }
  while (!queue.empty()) {
    const Candidate c = queue.top();
    queue.pop();
    if (labels[c.pixel] != 0) continue;
    labels[c.pixel] = c.label;
    if (trace != nullptr) trace->pop_order.push_back(c.pixel);
    push_neighbours(c.pixel, c.label);
  }

  return LabelMap::densify(w, h, labels);
}

}  // namespace superlime::seg
