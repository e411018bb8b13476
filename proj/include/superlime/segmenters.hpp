#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <json.hpp>

#include "superlime/imaging.hpp"

namespace superlime::seg {

using imaging::Image;
using imaging::Rgb;

// Dense superpixel partition: every pixel carries a label in [0, n_segments).
class LabelMap {
 public:
  // Renumbers arbitrary labels to 0..n-1 in order of first row-major
  // appearance.
  static LabelMap densify(std::size_t width, std::size_t height, std::span<const std::uint32_t> raw);
  // Adopts labels that already form a dense set; InvalidArgument otherwise.
  static LabelMap from_dense(std::size_t width, std::size_t height, std::vector<std::uint32_t> labels);

  std::size_t width() const noexcept { return width_; }
  std::size_t height() const noexcept { return height_; }
  std::size_t size() const noexcept { return labels_.size(); }
  std::uint32_t n_segments() const noexcept { return n_segments_; }

  std::uint32_t at(std::size_t x, std::size_t y) const { return labels_[y * width_ + x]; }
  std::uint32_t operator[](std::size_t i) const { return labels_[i]; }
  std::span<const std::uint32_t> labels() const noexcept { return labels_; }

  // Pixel count of every segment.
  std::vector<std::size_t> segment_sizes() const;

  friend bool operator==(const LabelMap&, const LabelMap&) = default;

 private:
  LabelMap(std::size_t w, std::size_t h, std::vector<std::uint32_t> labels, std::uint32_t n)
      : width_(w), height_(h), labels_(std::move(labels)), n_segments_(n) {}

  std::size_t width_;
  std::size_t height_;
  std::vector<std::uint32_t> labels_;
  std::uint32_t n_segments_;
};

enum class Connectivity { four, eight };

// True when labels cover exactly {0..n_segments-1}.
bool is_dense_partition(const LabelMap& lm);
// True when every segment is one connected component.
bool segments_connected(const LabelMap& lm, Connectivity conn);

struct FelzParams {
  double scale = 100.0;
  double sigma = 0.5;
  std::uint32_t min_size = 20;
};

struct QuickShiftParams {
  double kernel_size = 3.0;
  double max_dist = 10.0;
  double spatial_weight = 0.5;
};

struct SlicParams {
  std::uint32_t k = 100;
  double m = 10.0;
  std::uint32_t max_iters = 10;
  double threshold = 0.0;
};

struct CompactWatershedParams {
  std::uint32_t n_markers = 100;
  double compactness = 1.0;
};

using SegmenterParams = std::variant<FelzParams, QuickShiftParams, SlicParams, CompactWatershedParams>;

LabelMap segment_felzenszwalb(const Image& img, const FelzParams& p);

// Mode-seeking forest: per-pixel density and parent link (parent == self for
// roots). Exposed so callers can audit the tree structure.
struct QuickShiftForest {
  std::vector<double> density;
  std::vector<std::uint32_t> parent;
};

// Densities within this relative band count as equal, so mirror-symmetric
// pixels whose sums differ only by rounding never link to each other.
inline constexpr double kQuickShiftDensityTie = 1e-12;

QuickShiftForest quickshift_forest(const Image& img, const QuickShiftParams& p);
// `seed` is reserved for density jitter, which is disabled; the result does
// not depend on it.
LabelMap segment_quickshift(const Image& img, const QuickShiftParams& p, std::uint64_t seed = 0);

// D = sqrt(dc^2 + (ds/S)^2 m^2)
double slic_distance(double color_dist, double spatial_dist, double grid_step, double m);

struct SlicTrace {
  std::vector<double> residuals;  // E after every iteration
  std::size_t initial_centers = 0;
};

LabelMap segment_slic(const Image& img, const SlicParams& p, SlicTrace* trace = nullptr);

// Seed pixels (row-major indices) for the regular marker grid; exactly
// n_markers distinct positions.
std::vector<std::size_t> marker_grid(std::size_t width, std::size_t height, std::uint32_t n_markers);

struct FloodTrace {
  std::vector<std::size_t> pop_order;  // pixels in the order they were labelled
};

LabelMap segment_compact_watershed(const Image& img, const CompactWatershedParams& p,
                                   FloodTrace* trace = nullptr);

// Any method by parameter record.
LabelMap segment(const Image& img, const SegmenterParams& params, std::uint64_t seed = 0);

// Copy of img with every pixel that has a 4-neighbour of another label
// painted `color`.
Image boundary_overlay(const Image& img, const LabelMap& lm, Rgb color);

// Canonical method names: felzenszwalb, quickshift, slic, compact-watershed.
std::string_view method_name(const SegmenterParams& params);
// Default parameters for a method name (aliases fsz, qs, cw accepted).
SegmenterParams default_params(std::string_view method);
// Overlays keys from `j` onto the method's defaults; unknown keys and
// out-of-range values raise InvalidArgument.
SegmenterParams params_from_json(std::string_view method, const nlohmann::json& j);
nlohmann::ordered_json params_to_json(const SegmenterParams& params);
// Range checks on the record alone, then against an image of the given size.
void validate(const SegmenterParams& params);
void validate(const SegmenterParams& params, std::size_t width, std::size_t height);

// 16-bit greyscale label PNG plus `<stem>.json` sidecar is handled by the
// callers; these cover the raster part. Labels >= 65536 are rejected.
void save_labels_png(const LabelMap& lm, const std::filesystem::path& path);
LabelMap load_labels_png(const std::filesystem::path& path);

}  // namespace superlime::seg
