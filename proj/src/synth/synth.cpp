#include "superlime/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>

#include "superlime/error.hpp"

namespace superlime::synth {

namespace {

constexpr imaging::Rgb kBackground{200, 200, 200};
constexpr imaging::Rgb kCell{225, 165, 185};
constexpr imaging::Rgb kBlob{80, 45, 160};
constexpr int kNoise = 6;

class Stream {
 public:
  explicit Stream(std::uint64_t seed) : rng_(seed) {}

  double uniform(double lo, double hi) { return lo + (hi - lo) * (static_cast<double>(rng_() >> 11) * 0x1.0p-53); }
  int noise() { return static_cast<int>(rng_() % (2 * kNoise + 1)) - kNoise; }

 private:
  std::mt19937_64 rng_;
};

std::uint8_t jitter(std::uint8_t v, int delta) { return static_cast<std::uint8_t>(std::clamp(v + delta, 0, 255)); }

}  // namespace

std::vector<SynthImage> generate(const SynthConfig& cfg) {
  if (cfg.size < 16) throw InvalidArgument("synthetic images must be at least 16x16");
  Stream rng(cfg.seed);
  const auto s = static_cast<double>(cfg.size);
  std::vector<SynthImage> out;
  out.reserve(cfg.count);
  for (std::size_t n = 0; n < cfg.count; ++n) {
    const double cell_r = rng.uniform(0.34, 0.42) * s;
    const double cell_x = s / 2.0 + rng.uniform(-0.05, 0.05) * s;
    const double cell_y = s / 2.0 + rng.uniform(-0.05, 0.05) * s;
    const double blob_r = rng.uniform(0.09, 0.14) * s;
    // Blob centre uniform over the disk that keeps the blob inside the cell.
    const double reach = cell_r - blob_r - 1.0;
    const double rho = reach * std::sqrt(rng.uniform(0.0, 1.0));
    const double theta = rng.uniform(0.0, 2.0 * std::numbers::pi);
    const double blob_x = cell_x + rho * std::cos(theta);
    const double blob_y = cell_y + rho * std::sin(theta);

    char id[32];
    std::snprintf(id, sizeof(id), "cell_%05zu", n);
    SynthImage item{id, imaging::Image(cfg.size, cfg.size), imaging::BinaryMask(cfg.size, cfg.size, 0),
                    imaging::BinaryMask(cfg.size, cfg.size, 0)};
    for (std::size_t y = 0; y < cfg.size; ++y) {
      for (std::size_t x = 0; x < cfg.size; ++x) {
        const double px = static_cast<double>(x);
        const double py = static_cast<double>(y);
        const bool in_cell = std::hypot(px - cell_x, py - cell_y) <= cell_r;
        const bool in_blob = std::hypot(px - blob_x, py - blob_y) <= blob_r;
        const imaging::Rgb base = in_blob ? kBlob : in_cell ? kCell : kBackground;
        const int dr = rng.noise();
        const int dg = rng.noise();
        const int db = rng.noise();
        item.image.at(x, y) = {jitter(base.r, dr), jitter(base.g, dg), jitter(base.b, db)};
        item.blob.at(x, y) = in_blob ? 1 : 0;
        item.cell.at(x, y) = in_cell ? 1 : 0;
      }
    }
    out.push_back(std::move(item));
  }
  return out;
}

void write_corpus(const std::vector<SynthImage>& images, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError(IoError::Kind::io_failure, "cannot create '" + dir.string() + "': " + ec.message());
  for (const SynthImage& item : images) {
    imaging::save_png(item.image, dir / (item.id + ".png"));
    imaging::save_mask_png(item.blob, dir / (item.id + ".ref.png"));
  }
}

}  // namespace superlime::synth
