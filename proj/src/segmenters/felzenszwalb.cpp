#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>

#include "superlime/segmenters.hpp"

namespace superlime::seg {

namespace {

using Channels = std::array<std::vector<float>, 3>;

// Separable Gaussian with clamped borders; kernel radius ceil(4 sigma).
void smooth_channel(std::vector<float>& data, std::size_t w, std::size_t h, double sigma) {
  const auto radius = static_cast<std::ptrdiff_t>(std::ceil(4.0 * sigma));
  std::vector<double> kernel(static_cast<std::size_t>(radius) + 1);
  for (std::ptrdiff_t i = 0; i <= radius; ++i) {
    kernel[i] = std::exp(-0.5 * (i / sigma) * (i / sigma));
  }
  const double norm = 2.0 * std::accumulate(kernel.begin(), kernel.end(), 0.0) - kernel[0];
  for (double& k : kernel) k /= norm;

  const auto sw = static_cast<std::ptrdiff_t>(w);
  const auto sh = static_cast<std::ptrdiff_t>(h);
  std::vector<float> tmp(data.size());
  for (std::ptrdiff_t y = 0; y < sh; ++y) {
    for (std::ptrdiff_t x = 0; x < sw; ++x) {
      double acc = kernel[0] * data[y * sw + x];
      for (std::ptrdiff_t i = 1; i <= radius; ++i) {
        acc += kernel[i] * (data[y * sw + std::max<std::ptrdiff_t>(x - i, 0)] +
                            data[y * sw + std::min(x + i, sw - 1)]);
      }
      tmp[y * sw + x] = static_cast<float>(acc);
    }
  }
  for (std::ptrdiff_t y = 0; y < sh; ++y) {
    for (std::ptrdiff_t x = 0; x < sw; ++x) {
      double acc = kernel[0] * tmp[y * sw + x];
      for (std::ptrdiff_t i = 1; i <= radius; ++i) {
        acc += kernel[i] * (tmp[std::max<std::ptrdiff_t>(y - i, 0) * sw + x] +
                            tmp[std::min(y + i, sh - 1) * sw + x]);
      }
      data[y * sw + x] = static_cast<float>(acc);
    }
  }
}

struct Edge {
  float weight;
  std::uint32_t a;
  std::uint32_t b;
};

class DisjointSets {
 public:
  explicit DisjointSets(std::size_t n) : parent_(n), size_(n, 1), internal_(n, 0.0f) {
    std::iota(parent_.begin(), parent_.end(), 0u);
  }

  std::uint32_t find(std::uint32_t x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }

  // Joins two roots; returns the new root.
  std::uint32_t join(std::uint32_t a, std::uint32_t b) {
    if (size_[a] < size_[b]) std::swap(a, b);
    parent_[b] = a;
    size_[a] += size_[b];
    return a;
  }

  std::size_t size(std::uint32_t root) const { return size_[root]; }
  float& internal(std::uint32_t root) { return internal_[root]; }

 private:
  std::vector<std::uint32_t> parent_;
  std::vector<std::size_t> size_;
  std::vector<float> internal_;  // Int(C): max MST edge inside the component
};

float distance(const Channels& c, std::size_t i, std::size_t j) {
  const float d0 = c[0][i] - c[0][j];
  const float d1 = c[1][i] - c[1][j];
  const float d2 = c[2][i] - c[2][j];
  return std::sqrt(d0 * d0 + d1 * d1 + d2 * d2);
}

}  // namespace

LabelMap segment_felzenszwalb(const Image& img, const FelzParams& p) {
  validate(p, img.width(), img.height());
  const std::size_t w = img.width();
  const std::size_t h = img.height();
  const std::size_t n = w * h;

  Channels channels;
  for (auto& ch : channels) ch.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    channels[0][i] = img[i].r;
    channels[1][i] = img[i].g;
    channels[2][i] = img[i].b;
  }
  if (p.sigma > 0.0) {
    for (auto& ch : channels) smooth_channel(ch, w, h, p.sigma);
  }

  // 8-connected grid: right, down, down-right, up-right per pixel.
  std::vector<Edge> edges;
  edges.reserve(4 * n);
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      const std::size_t i = y * w + x;
      auto add = [&](std::size_t j) {
        edges.push_back({distance(channels, i, j), static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(j)});
      };
      if (x + 1 < w) add(i + 1);
      if (y + 1 < h) add(i + w);
      if (x + 1 < w && y + 1 < h) add(i + w + 1);
      if (x + 1 < w && y > 0) add(i - w + 1);
    }
  }
  std::stable_sort(edges.begin(), edges.end(), [](const Edge& l, const Edge& r) { return l.weight < r.weight; });

  DisjointSets sets(n);
  const auto threshold = [&](std::uint32_t root) {
    return sets.internal(root) + static_cast<float>(p.scale / static_cast<double>(sets.size(root)));
  };
  for (const Edge& e : edges) {
    std::uint32_t a = sets.find(e.a);
    std::uint32_t b = sets.find(e.b);
    if (a == b) continue;
    if (e.weight <= threshold(a) && e.weight <= threshold(b)) {
      const std::uint32_t root = sets.join(a, b);
      sets.internal(root) = e.weight;  // edges arrive in ascending order
    }
  }

  // Absorb undersized components across their cheapest boundary edge.
  for (const Edge& e : edges) {
    std::uint32_t a = sets.find(e.a);
    std::uint32_t b = sets.find(e.b);
    if (a != b && (sets.size(a) < p.min_size || sets.size(b) < p.min_size)) {
      sets.join(a, b);
    }
  }

  std::vector<std::uint32_t> raw(n);
  for (std::size_t i = 0; i < n; ++i) raw[i] = sets.find(static_cast<std::uint32_t>(i));
  return LabelMap::densify(w, h, raw);
}

}  // namespace superlime::seg
