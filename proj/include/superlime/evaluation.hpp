#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "superlime/classifier.hpp"
#include "superlime/explainer.hpp"
#include "superlime/imaging.hpp"
#include "superlime/segmenters.hpp"

namespace superlime::eval {

using imaging::BinaryMask;
using imaging::Image;

// |a & b| / |a | b|. Raises InvalidArgument on a size mismatch or when both
// masks are empty.
double jaccard(const BinaryMask& a, const BinaryMask& b);

enum class Verdict { true_positive, false_negative, other };

std::string_view to_string(Verdict v);
Verdict parse_verdict(std::string_view s);

struct CorpusItem {
  std::string id;  // file stem
  Image image;
  BinaryMask reference;
};

// Every `<stem>.png` in `dir` (sorted by name) paired with `<stem>.ref.png`.
// An empty directory raises InvalidArgument.
std::vector<CorpusItem> load_corpus(const std::filesystem::path& dir);

// A named segmenter configuration, e.g. "quickshift-optimized".
struct MethodConfig {
  std::string name;
  seg::SegmenterParams params;
};

// A method name with default parameters, or an object
// {"name": ..., "method": ..., "params": {...}} where only "method" is required.
MethodConfig parse_method(const nlohmann::json& entry);
// Raises InvalidArgument when two entries share a name.
std::vector<MethodConfig> parse_methods(const nlohmann::json& entries);

struct EvalConfig {
  lime::PerturbationConfig perturbation;
  std::size_t k = 5;
  // Top-ranked positive patches in the explanation mask.
  std::size_t top = 1;
  std::size_t positive_class = classify::kIndicatorClass;
  // Records whose verdict matches are evaluated; nullopt keeps all.
  std::optional<Verdict> filter = Verdict::true_positive;
  std::size_t threads = 1;
};

struct EvalRecord {
  std::string image;
  std::string method;
  Verdict verdict = Verdict::other;
  double jaccard = 0.0;
  std::uint32_t n_segments = 0;
};

struct EvalFailure {
  std::string image;
  std::string method;
  std::string reason;
};

struct ReportRow {
  std::string method;
  std::size_t count = 0;
  double mean = 0.0;
  double variance = 0.0;  // population (divide by n)
  double stddev = 0.0;
};

struct EvalReport {
  std::vector<ReportRow> rows;  // one per method, in configuration order
  std::vector<EvalRecord> records;
  std::vector<EvalFailure> failures;
  std::size_t images = 0;
  std::size_t true_positive = 0;
  std::size_t false_negative = 0;
  std::size_t other = 0;
  std::optional<Verdict> filter;
};

ReportRow summarize(std::string method, std::span<const double> values);

EvalReport evaluate_corpus(std::span<const CorpusItem> corpus, std::span<const MethodConfig> methods,
                           const classify::ClassifierSpec& classifier, const EvalConfig& cfg);

// records.csv: header image,method,verdict,jaccard,n_segments; jaccard at
// full double precision.
std::string records_csv(const EvalReport& report);
std::vector<EvalRecord> parse_records_csv(std::string_view text);
nlohmann::ordered_json report_json(const EvalReport& report);
// Aligned Method / Mean / Variance / Std table.
std::string report_table(const EvalReport& report);

struct SweepPoint {
  seg::SegmenterParams params;
  std::optional<double> mean;
  std::size_t count = 0;
  std::string failure;
};

struct SweepResult {
  std::vector<SweepPoint> points;
  std::size_t best = 0;

  const SweepPoint& best_point() const { return points.at(best); }
};

class SweepFailure : public ComputeError {
 public:
  using ComputeError::ComputeError;
};

// Cartesian product of per-key value lists, layered over the method's
// defaults; the last key varies fastest. Example grid:
//   {"kernel_size": [2, 3, 4], "max_dist": [6, 10, 14]}
std::vector<seg::SegmenterParams> expand_grid(std::string_view method, const nlohmann::ordered_json& grid);

// Exhaustive grid search for the highest mean Jaccard; ties keep the earliest
// point. Raises SweepFailure when no point produces a record.
SweepResult sweep(std::span<const seg::SegmenterParams> grid, std::span<const CorpusItem> corpus,
                  const classify::ClassifierSpec& classifier, const EvalConfig& cfg);

std::string sweep_csv(const SweepResult& result);

}  // namespace superlime::eval
