#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "superlime/imaging.hpp"

namespace superlime::synth {

// Blood-smear stand-in: a pink cell disk on a grey background with one dark
// blue-purple blob (the indicator) inside the cell. Pixel noise is uniform in
// [-6, 6] per channel.
struct SynthConfig {
  std::size_t count = 50;
  std::size_t size = 64;
  std::uint64_t seed = 0;
};

struct SynthImage {
  std::string id;
  imaging::Image image;
  imaging::BinaryMask blob;  // the reference relevance mask
  imaging::BinaryMask cell;
};

std::vector<SynthImage> generate(const SynthConfig& cfg);

// Writes `<id>.png` and `<id>.ref.png` per image into `dir` (created).
void write_corpus(const std::vector<SynthImage>& images, const std::filesystem::path& dir);

}  // namespace superlime::synth
