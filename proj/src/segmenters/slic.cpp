#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "superlime/segmenters.hpp"

namespace superlime::seg {

namespace {

constexpr std::uint32_t kUnassigned = std::numeric_limits<std::uint32_t>::max();

struct Center {
  double l, a, b, x, y;
};

std::size_t nearest_index(double v, std::size_t extent) {
  const auto r = static_cast<std::ptrdiff_t>(std::lround(v));
  return static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(r, 0, static_cast<std::ptrdiff_t>(extent) - 1));
}

std::vector<Center> initial_centers(const imaging::LabImage& lab, const imaging::GradientMap& grad, double step) {
  const std::size_t w = lab.width();
  const std::size_t h = lab.height();
  const auto nx = static_cast<std::size_t>(std::max(1.0, std::round(w / step)));
  const auto ny = static_cast<std::size_t>(std::max(1.0, std::round(h / step)));
  const double sx = static_cast<double>(w) / nx;
  const double sy = static_cast<double>(h) / ny;

  std::vector<Center> centers;
  centers.reserve(nx * ny);
  for (std::size_t j = 0; j < ny; ++j) {
    for (std::size_t i = 0; i < nx; ++i) {
      double cx = (i + 0.5) * sx - 0.5;
      double cy = (j + 0.5) * sy - 0.5;
      std::size_t px = nearest_index(cx, w);
      std::size_t py = nearest_index(cy, h);
      // Move off edges: lowest gradient in the 3x3 neighbourhood, only on a
      // strict improvement.
      double best = grad.at(px, py);
      std::size_t bx = px;
      std::size_t by = py;
      for (std::size_t y = py > 0 ? py - 1 : 0; y <= std::min(py + 1, h - 1); ++y) {
        for (std::size_t x = px > 0 ? px - 1 : 0; x <= std::min(px + 1, w - 1); ++x) {
          if (grad.at(x, y) < best) {
            best = grad.at(x, y);
            bx = x;
            by = y;
          }
        }
      }
      if (bx != px || by != py) {
        cx = static_cast<double>(bx);
        cy = static_cast<double>(by);
        px = bx;
        py = by;
      }
      const auto& c = lab.at(px, py);
      centers.push_back({c.l, c.a, c.b, cx, cy});
    }
  }
  return centers;
}

// Every 4-connected piece of a cluster other than the one holding the
// cluster's centre (or, failing that, its largest piece) is handed to the
// neighbouring cluster it shares the longest border with.
std::vector<std::uint32_t> enforce_connectivity(const std::vector<std::uint32_t>& labels,
                                                const std::vector<Center>& centers, std::size_t w,
                                                std::size_t h) {
  const std::size_t n = labels.size();
  constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();
  std::vector<std::size_t> component(n, kNone);
  std::vector<std::size_t> comp_size;
  std::vector<std::uint32_t> comp_label;
  std::vector<std::size_t> comp_first;
  std::vector<std::size_t> stack;

  for (std::size_t start = 0; start < n; ++start) {
    if (component[start] != kNone) continue;
    const std::size_t id = comp_size.size();
    comp_size.push_back(0);
    comp_label.push_back(labels[start]);
    comp_first.push_back(start);
    component[start] = id;
    stack.push_back(start);
    while (!stack.empty()) {
      const std::size_t i = stack.back();
      stack.pop_back();
      ++comp_size[id];
      const std::size_t x = i % w;
      const std::size_t y = i / w;
      auto visit = [&](std::size_t j) {
        if (component[j] == kNone && labels[j] == labels[start]) {
          component[j] = id;
          stack.push_back(j);
        }
      };
      if (x > 0) visit(i - 1);
      if (x + 1 < w) visit(i + 1);
      if (y > 0) visit(i - w);
      if (y + 1 < h) visit(i + w);
    }
  }

  const std::size_t n_comp = comp_size.size();
  std::vector<std::size_t> kept(centers.size(), kNone);
  for (std::size_t k = 0; k < centers.size(); ++k) {
    const std::size_t i = nearest_index(centers[k].y, h) * w + nearest_index(centers[k].x, w);
    if (labels[i] == k) kept[k] = component[i];
  }
  for (std::size_t c = 0; c < n_comp; ++c) {
    const std::uint32_t l = comp_label[c];
    if (l == kUnassigned || kept[l] != kNone) continue;
    // Centre pixel not inside its own cluster: keep the largest piece.
    std::size_t best = c;
    for (std::size_t d = c + 1; d < n_comp; ++d) {
      if (comp_label[d] == l && comp_size[d] > comp_size[best]) best = d;
    }
    kept[l] = best;
  }

  std::vector<bool> resolved(n_comp, false);
  std::vector<std::vector<std::size_t>> members(n_comp);
  for (std::size_t i = 0; i < n; ++i) members[component[i]].push_back(i);
  std::size_t pending = 0;
  for (std::size_t c = 0; c < n_comp; ++c) {
    const std::uint32_t l = comp_label[c];
    resolved[c] = l != kUnassigned && kept[l] == c;
    if (!resolved[c]) ++pending;
  }

  while (pending > 0) {
    std::size_t progress = 0;
    for (std::size_t c = 0; c < n_comp; ++c) {
      if (resolved[c]) continue;
      std::map<std::uint32_t, std::size_t> border;
      for (std::size_t i : members[c]) {
        const std::size_t x = i % w;
        const std::size_t y = i / w;
        auto look = [&](std::size_t j) {
          const std::size_t d = component[j];
          if (d != c && resolved[d]) ++border[comp_label[d]];
        };
        if (x > 0) look(i - 1);
        if (x + 1 < w) look(i + 1);
        if (y > 0) look(i - w);
        if (y + 1 < h) look(i + w);
      }
      if (border.empty()) continue;
      auto dominant = border.begin();
      for (auto it = border.begin(); it != border.end(); ++it) {
        if (it->second > dominant->second) dominant = it;
      }
      comp_label[c] = dominant->first;
      resolved[c] = true;
      ++progress;
      --pending;
    }
    if (progress == 0) break;  // unreachable for a connected raster
  }

  std::vector<std::uint32_t> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = comp_label[component[i]];
  return out;
}

}  // namespace

double slic_distance(double color_dist, double spatial_dist, double grid_step, double m) {
  const double s = spatial_dist / grid_step;
  return std::sqrt(color_dist * color_dist + s * s * m * m);
}

LabelMap segment_slic(const Image& img, const SlicParams& p, SlicTrace* trace) {
  validate(p, img.width(), img.height());
  const std::size_t w = img.width();
  const std::size_t h = img.height();
  const std::size_t n = w * h;
  const double step = std::sqrt(static_cast<double>(n) / p.k);
  const double spatial_scale = (p.m / step) * (p.m / step);

  const auto lab = imaging::rgb_to_lab(img);
  const auto grad = imaging::gradient_magnitude(lab);
  std::vector<Center> centers = initial_centers(lab, grad, step);
  if (trace != nullptr) {
    trace->initial_centers = centers.size();
    trace->residuals.clear();
  }

  std::vector<std::uint32_t> labels(n, kUnassigned);
  std::vector<double> best(n);
  for (std::uint32_t iter = 0; iter < p.max_iters; ++iter) {
    std::fill(best.begin(), best.end(), std::numeric_limits<double>::infinity());
    for (std::size_t k = 0; k < centers.size(); ++k) {
      const Center& c = centers[k];
      const auto x0 = static_cast<std::size_t>(std::max(0.0, std::ceil(c.x - step)));
      const auto y0 = static_cast<std::size_t>(std::max(0.0, std::ceil(c.y - step)));
      const double x_hi = std::floor(c.x + step);
      const double y_hi = std::floor(c.y + step);
      if (x_hi < 0.0 || y_hi < 0.0) continue;
      const std::size_t x1 = std::min(static_cast<std::size_t>(x_hi), w - 1);
      const std::size_t y1 = std::min(static_cast<std::size_t>(y_hi), h - 1);
      for (std::size_t y = y0; y <= y1; ++y) {
        for (std::size_t x = x0; x <= x1; ++x) {
          const auto& px = lab.at(x, y);
          const double dl = px.l - c.l;
          const double da = px.a - c.a;
          const double db = px.b - c.b;
          const double dx = static_cast<double>(x) - c.x;
          const double dy = static_cast<double>(y) - c.y;
          const double d2 = dl * dl + da * da + db * db + (dx * dx + dy * dy) * spatial_scale;
          const std::size_t i = y * w + x;
          if (d2 < best[i]) {
            best[i] = d2;
            labels[i] = static_cast<std::uint32_t>(k);
          }
        }
      }
    }

    std::vector<Center> sums(centers.size(), Center{0, 0, 0, 0, 0});
    std::vector<std::size_t> counts(centers.size(), 0);
    for (std::size_t i = 0; i < n; ++i) {
      if (labels[i] == kUnassigned) continue;
      const auto& px = lab[i];
      Center& s = sums[labels[i]];
      s.l += px.l;
      s.a += px.a;
      s.b += px.b;
      s.x += static_cast<double>(i % w);
      s.y += static_cast<double>(i / w);
      ++counts[labels[i]];
    }
    double residual = 0.0;
    for (std::size_t k = 0; k < centers.size(); ++k) {
      if (counts[k] == 0) continue;
      const double inv = 1.0 / static_cast<double>(counts[k]);
      const Center next{sums[k].l * inv, sums[k].a * inv, sums[k].b * inv, sums[k].x * inv, sums[k].y * inv};
      residual += std::hypot(next.x - centers[k].x, next.y - centers[k].y);
      centers[k] = next;
    }
    if (trace != nullptr) trace->residuals.push_back(residual);
    if (residual <= p.threshold) break;
  }

  return LabelMap::densify(w, h, enforce_connectivity(labels, centers, w, h));
}

}  // namespace superlime::seg
