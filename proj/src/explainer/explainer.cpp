#include <algorithm>
#include <array>
#include <cmath>
#include <random>

#include "superlime/error.hpp"
#include "superlime/explainer.hpp"

namespace superlime::lime {

namespace {

// Uniform double in [0,1) from the top 53 bits; independent of the standard
// library's distribution implementations.
double unit_uniform(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

}  // namespace

void validate(const PerturbationConfig& cfg) {
  if (cfg.pool_size < 2) throw InvalidArgument("pool size must be >= 2");
  if (!(cfg.on_probability > 0.0 && cfg.on_probability < 1.0)) {
    throw InvalidArgument("on_probability must lie in (0, 1)");
  }
  if (!(std::isfinite(cfg.kernel_width) && cfg.kernel_width > 0.0)) {
    throw InvalidArgument("kernel_width must be finite and > 0");
  }
  if (cfg.batch_size < 1) throw InvalidArgument("batch_size must be >= 1");
}

double proximity(std::span<const std::uint8_t> z_prime, double kernel_width) {
  const auto on = static_cast<double>(std::count_if(z_prime.begin(), z_prime.end(), [](std::uint8_t b) { return b != 0; }));
  // cos(z, 1) = |z| / (sqrt|z| sqrt n) for binary z.
  const double cosine = z_prime.empty() ? 0.0 : std::sqrt(on / static_cast<double>(z_prime.size()));
  const double d = 1.0 - cosine;
  return std::exp(-(d * d) / (kernel_width * kernel_width));
}

PatchRenderer::PatchRenderer(const Image& img, const LabelMap& lm, const Replacement& replacement)
    : img_(img), lm_(lm) {
  if (!img.same_shape(lm.width(), lm.height())) throw InvalidArgument("image and label map differ in size");
  if (const auto* fixed = std::get_if<FixedColor>(&replacement)) {
    fill_.assign(lm.n_segments(), fixed->color);
    return;
  }
  std::vector<std::array<std::uint64_t, 3>> sums(lm.n_segments(), {0, 0, 0});
  const auto sizes = lm.segment_sizes();
  for (std::size_t i = 0; i < img.size(); ++i) {
    auto& s = sums[lm[i]];
    s[0] += img[i].r;
    s[1] += img[i].g;
    s[2] += img[i].b;
  }
  fill_.resize(lm.n_segments());
  for (std::size_t l = 0; l < fill_.size(); ++l) {
    const auto mean = [&](int c) {
      return static_cast<std::uint8_t>((sums[l][c] + sizes[l] / 2) / sizes[l]);
    };
    fill_[l] = {mean(0), mean(1), mean(2)};
  }
}

Image PatchRenderer::render(std::span<const std::uint8_t> z_prime) const {
  if (z_prime.size() != lm_.n_segments()) throw InvalidArgument("z' length does not match the segment count");
  Image out = img_;
  for (std::size_t i = 0; i < out.size(); ++i) {
    const std::uint32_t l = lm_[i];
    if (z_prime[l] == 0) out[i] = fill_[l];
  }
  return out;
}

std::vector<PerturbedSample> sample_pool(const LabelMap& lm, const Image& img, const PerturbationConfig& cfg,
                                         classify::Gateway& classifier) {
  validate(cfg);
  const PatchRenderer renderer(img, lm, cfg.replacement);
  const std::size_t p = lm.n_segments();

  std::mt19937_64 rng(cfg.seed);
  std::vector<PerturbedSample> pool(cfg.pool_size);
  pool[0].z_prime.assign(p, 1);
  for (std::size_t i = 1; i < pool.size(); ++i) {
    pool[i].z_prime.resize(p);
    for (auto& bit : pool[i].z_prime) bit = unit_uniform(rng) < cfg.on_probability ? 1 : 0;
  }
  for (auto& s : pool) s.proximity = proximity(s.z_prime, cfg.kernel_width);

  for (std::size_t begin = 0; begin < pool.size(); begin += cfg.batch_size) {
    const std::size_t end = std::min(pool.size(), begin + cfg.batch_size);
    std::vector<Image> batch;
    batch.reserve(end - begin);
    for (std::size_t i = begin; i < end; ++i) batch.push_back(renderer.render(pool[i].z_prime));
    std::vector<Prediction> predictions;
    try {
      predictions = classifier.classify_batch(batch);
    } catch (const classify::ClassifierError& e) {
      throw classify::ClassifierError(e.kind(), "samples " + std::to_string(begin) + ".." +
                                                    std::to_string(end - 1) + ": " + e.what());
    }
    for (std::size_t i = begin; i < end; ++i) pool[i].prediction = std::move(predictions[i - begin]);
  }
  return pool;
}

Explanation explain(const Image& img, classify::Gateway& classifier, const seg::SegmenterParams& params,
                    const PerturbationConfig& cfg, const ExplainOptions& opts) {
  validate(cfg);
  if (opts.k < 1) throw InvalidArgument("K must be >= 1");
  LabelMap lm = seg::segment(img, params, cfg.seed);
  std::vector<PerturbedSample> pool = sample_pool(lm, img, cfg, classifier);

  const Prediction& original = pool.front().prediction;
  const std::size_t target = opts.target_class.value_or(original.argmax());
  if (target >= original.probabilities.size()) {
    throw InvalidArgument("target class " + std::to_string(target) + " out of range");
  }
  Explanation e{fit_k_lasso(pool, opts.k, target), std::move(lm), params, cfg.seed, opts.k, original};
  return e;
}

Explanation explain(const Image& img, const classify::ClassifierSpec& classifier, const seg::SegmenterParams& params,
                    const PerturbationConfig& cfg, const ExplainOptions& opts) {
  classify::Gateway gateway(classifier);
  return explain(img, gateway, params, cfg, opts);
}

ExplanationMask explanation_mask(const Explanation& e, std::size_t top) {
  if (top < 1) throw InvalidArgument("top must be >= 1");
  const LabelMap& lm = e.segmentation;
  std::vector<std::uint8_t> chosen(lm.n_segments(), 0);
  std::size_t taken = 0;
  // `selected` is already ordered by |weight|.
  for (const WeightedPatch& patch : e.surrogate.selected) {
    if (taken == top) break;
    if (patch.weight > 0.0) {
      chosen[patch.segment] = 1;
      ++taken;
    }
  }
  ExplanationMask out{BinaryMask(lm.width(), lm.height(), 0), taken == 0};
  for (std::size_t i = 0; i < lm.size(); ++i) out.mask[i] = chosen[lm[i]];
  return out;
}

Image dim_outside(const Image& img, const BinaryMask& mask, double brightness) {
  if (!img.same_shape(mask)) throw InvalidArgument("image and mask differ in size");
  Image out = img;
  const auto scale = [brightness](std::uint8_t v) {
    return static_cast<std::uint8_t>(std::lround(v * brightness));
  };
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (mask[i] == 0) out[i] = {scale(out[i].r), scale(out[i].g), scale(out[i].b)};
  }
  return out;
}

nlohmann::ordered_json to_json(const Explanation& e) {
  nlohmann::ordered_json j;
  j["method"] = std::string(seg::method_name(e.params));
  j["params"] = seg::params_to_json(e.params);
  j["seed"] = e.seed;
  j["K"] = e.k;
  j["target_class"] = e.surrogate.target_class;
  j["intercept"] = e.surrogate.intercept;
  j["selected"] = nlohmann::ordered_json::array();
  for (const auto& patch : e.surrogate.selected) {
    j["selected"].push_back({{"segment", patch.segment}, {"weight", patch.weight}});
  }
  j["n_segments"] = e.segmentation.n_segments();
  return j;
}

}  // namespace superlime::lime
