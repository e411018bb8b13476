#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <unistd.h>

#include "superlime/imaging.hpp"

namespace superlime::test {

inline imaging::Image random_image(std::size_t w, std::size_t h, std::mt19937_64& rng) {
  imaging::Image img(w, h);
  for (auto& px : img.pixels()) {
    const auto v = rng();
    px = {static_cast<std::uint8_t>(v), static_cast<std::uint8_t>(v >> 8), static_cast<std::uint8_t>(v >> 16)};
  }
  return img;
}

// Smooth blobs of colour rather than white noise, closer to natural images.
inline imaging::Image blobby_image(std::size_t w, std::size_t h, std::mt19937_64& rng) {
  imaging::Image img(w, h);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double fx = 1.0 + 4.0 * u(rng);
  const double fy = 1.0 + 4.0 * u(rng);
  const double phase = 6.28 * u(rng);
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      const double s = std::sin(fx * x / w * 6.28 + phase) * std::cos(fy * y / h * 6.28);
      const auto noise = static_cast<int>(rng() % 21) - 10;
      auto ch = [&](double base) {
        return static_cast<std::uint8_t>(std::clamp(static_cast<int>(base) + noise, 0, 255));
      };
      img.at(x, y) = {ch(128 + 100 * s), ch(128 - 80 * s), ch(100 + 60 * std::abs(s))};
    }
  }
  return img;
}

// Fresh directory under the system temp dir, removed on destruction.
class ScratchDir {
 public:
  ScratchDir() {
    std::string pattern = (std::filesystem::temp_directory_path() / "superlime-test-XXXXXX").string();
    path_ = ::mkdtemp(pattern.data());
  }
  ~ScratchDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  ScratchDir(const ScratchDir&) = delete;
  ScratchDir& operator=(const ScratchDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

}  // namespace superlime::test
