#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <variant>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "superlime/classifier.hpp"
#include "superlime/imaging.hpp"
#include "superlime/segmenters.hpp"

namespace superlime::lime {

using classify::Prediction;
using imaging::BinaryMask;
using imaging::Image;
using imaging::Rgb;
using seg::LabelMap;

struct FixedColor {
  Rgb color{128, 128, 128};
};
struct MeanColor {};
using Replacement = std::variant<FixedColor, MeanColor>;

struct PerturbationConfig {
  std::size_t pool_size = 1000;
  Replacement replacement = FixedColor{};
  double on_probability = 0.5;
  double kernel_width = 0.25;
  std::uint64_t seed = 0;
  // Images handed to the classifier per call.
  std::size_t batch_size = 250;
};

void validate(const PerturbationConfig& cfg);

struct PerturbedSample {
  std::vector<std::uint8_t> z_prime;  // 1 = patch kept
  Prediction prediction;
  double proximity = 1.0;
};

// exp(-d^2 / width^2) with d the cosine distance between z and the all-ones
// vector; an all-zero z has distance 1.
double proximity(std::span<const std::uint8_t> z_prime, double kernel_width);

// Replaces the pixels of every switched-off patch. Kept patches stay
// byte-identical.
class PatchRenderer {
 public:
  PatchRenderer(const Image& img, const LabelMap& lm, const Replacement& replacement);
  PatchRenderer(Image&&, const LabelMap&, const Replacement&) = delete;
  PatchRenderer(const Image&, LabelMap&&, const Replacement&) = delete;

  Image render(std::span<const std::uint8_t> z_prime) const;
  const std::vector<Rgb>& fill_colors() const noexcept { return fill_; }

 private:
  const Image& img_;
  const LabelMap& lm_;
  std::vector<Rgb> fill_;
};

// The first sample is always the unperturbed all-ones vector.
std::vector<PerturbedSample> sample_pool(const LabelMap& lm, const Image& img, const PerturbationConfig& cfg,
                                         classify::Gateway& classifier);

// Minimiser of sum_i w_i (y_i - b0 - x_i.beta)^2 + lambda |beta|_1.
struct LassoFit {
  Eigen::VectorXd coef;
  double intercept = 0.0;
  std::size_t sweeps = 0;
};

// Coordinate descent over the weighted Gram matrix. `warm_start` seeds the
// coefficients (zeros when empty).
class WeightedLasso {
 public:
  WeightedLasso(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const Eigen::VectorXd& weights);

  // Smallest lambda for which every coefficient is zero.
  double lambda_max() const noexcept { return lambda_max_; }
  LassoFit fit(double lambda, const Eigen::VectorXd& warm_start = {}) const;

 private:
  Eigen::MatrixXd gram_;
  Eigen::VectorXd cov_;
  Eigen::VectorXd x_mean_;
  double y_mean_ = 0.0;
  double lambda_max_ = 0.0;
};

struct WeightedPatch {
  std::uint32_t segment;
  double weight;
};

// The linear surrogate: intercept plus weights on the selected patches,
// ordered by descending |weight|.
struct Surrogate {
  std::size_t target_class = 0;
  double intercept = 0.0;
  std::vector<WeightedPatch> selected;
};

inline constexpr std::size_t kLassoPathSteps = 100;
inline constexpr double kLassoPathRatio = 1e-4;
inline constexpr double kRefitRidge = 1e-8;

// Lasso-path selection of K features followed by a weighted least-squares
// refit on them. Raises ZeroSignalError when every response is equal.
Surrogate fit_k_lasso(std::span<const PerturbedSample> samples, std::size_t k, std::size_t target_class);

struct Explanation {
  Surrogate surrogate;
  LabelMap segmentation;
  seg::SegmenterParams params;
  std::uint64_t seed = 0;
  std::size_t k = 0;
  Prediction original;  // f(x)
};

struct ExplainOptions {
  std::size_t k = 5;
  std::optional<std::size_t> target_class;  // argmax of f(x) when unset
};

Explanation explain(const Image& img, classify::Gateway& classifier, const seg::SegmenterParams& params,
                    const PerturbationConfig& cfg, const ExplainOptions& opts);
Explanation explain(const Image& img, const classify::ClassifierSpec& classifier,
                    const seg::SegmenterParams& params, const PerturbationConfig& cfg, const ExplainOptions& opts);

struct ExplanationMask {
  BinaryMask mask;
  bool empty = true;  // no positively weighted patch
};

// Union of the `top` largest positively weighted selected patches.
ExplanationMask explanation_mask(const Explanation& e, std::size_t top = 1);

// Non-mask pixels scaled to `brightness` of their value.
Image dim_outside(const Image& img, const BinaryMask& mask, double brightness = 0.3);

nlohmann::ordered_json to_json(const Explanation& e);

}  // namespace superlime::lime
