#pragma once

#include <cstddef>
#include <filesystem>
#include <mutex>
#include <span>
#include <string>
#include <vector>

#include "superlime/error.hpp"
#include "superlime/imaging.hpp"

namespace superlime::classify {

using imaging::Image;

struct Prediction {
  std::vector<double> probabilities;
  std::vector<std::string> class_names;

  std::size_t argmax() const;
};

// Probabilities in [0,1], summing to 1 within 1e-6, one name per class.
bool on_simplex(const Prediction& p, double tolerance = 1e-6);

struct ClassifierSpec {
  enum class Kind { builtin_stub, external_command };

  Kind kind = Kind::builtin_stub;
  std::string command;  // external only
  std::size_t class_count = 2;

  static ClassifierSpec stub() { return {}; }
  static ClassifierSpec external(std::string command, std::size_t class_count = 2);
};

void validate(const ClassifierSpec& spec);

class ClassifierError : public Error {
 public:
  enum class Kind { launch_failure, malformed_output, count_mismatch };

  ClassifierError(Kind kind, const std::string& what) : Error(what), kind_(kind) {}
  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

// Class order (clean, indicator).
inline constexpr std::size_t kCleanClass = 0;
inline constexpr std::size_t kIndicatorClass = 1;

// Fraction of pixels with B > R + 20 and B > G + 20.
double stained_fraction(const Image& img);

// p(indicator) = 1 - exp(-40 s) for stained fraction s.
Prediction stub_score(const Image& img);

// Parses an adapter's predictions.csv for `expected_rows` images of
// `class_count` classes, validating header, indices and the simplex.
std::vector<Prediction> parse_predictions_csv(const std::filesystem::path& path, std::size_t expected_rows,
                                              std::size_t class_count);

// Writes `images` as <dir>/NNNNN.png, 0-based and zero padded to five digits.
void write_batch(std::span<const Image> images, const std::filesystem::path& dir);

// Owns one classifier; external invocations through the same gateway are
// serialised.
class Gateway {
 public:
  explicit Gateway(ClassifierSpec spec);

  const ClassifierSpec& spec() const noexcept { return spec_; }

  // One prediction per image, in order.
  std::vector<Prediction> classify_batch(std::span<const Image> images);

 private:
  std::vector<Prediction> run_external(std::span<const Image> images);

  ClassifierSpec spec_;
  std::mutex external_mutex_;
};

std::vector<Prediction> classify_batch(const ClassifierSpec& spec, std::span<const Image> images);

}  // namespace superlime::classify
