#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <iomanip>
#include <sstream>
#include <thread>

#include "superlime/error.hpp"
#include "superlime/evaluation.hpp"

namespace superlime::eval {

namespace fs = std::filesystem;

namespace {

constexpr std::string_view kRefSuffix = ".ref.png";

bool ends_with(std::string_view s, std::string_view suffix) {
  return s.size() >= suffix.size() && s.substr(s.size() - suffix.size()) == suffix;
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

Verdict classify_verdict(const classify::Prediction& p, std::size_t positive_class) {
  const std::size_t predicted = p.argmax();
  if (predicted == positive_class) return Verdict::true_positive;
  // Every corpus image carries the indicator: a clean call is a miss.
  if (predicted == classify::kCleanClass) return Verdict::false_negative;
  return Verdict::other;
}

struct ImageOutcome {
  Verdict verdict = Verdict::other;
  std::vector<EvalRecord> records;
  std::vector<EvalFailure> failures;
};

ImageOutcome evaluate_image(const CorpusItem& item, std::size_t index, std::span<const MethodConfig> methods,
                            classify::Gateway& gateway, const EvalConfig& cfg) {
  ImageOutcome out;
  try {
    const Image single[] = {item.image};
    out.verdict = classify_verdict(gateway.classify_batch(single).front(), cfg.positive_class);
  } catch (const Error& e) {
    out.failures.push_back({item.id, "", std::string("classification failed: ") + e.what()});
    return out;
  }
  if (cfg.filter && out.verdict != *cfg.filter) return out;

  lime::PerturbationConfig perturbation = cfg.perturbation;
  perturbation.seed = cfg.perturbation.seed ^ static_cast<std::uint64_t>(index);
  for (const MethodConfig& method : methods) {
    try {
      if (!item.reference.same_shape(item.image)) throw InvalidArgument("reference mask size differs from image");
      if (imaging::count_set(item.reference) == 0) throw InvalidArgument("reference mask is empty");
      const lime::Explanation e = lime::explain(item.image, gateway, method.params, perturbation, {cfg.k, std::nullopt});
      const lime::ExplanationMask mask = lime::explanation_mask(e, cfg.top);
      out.records.push_back(
          {item.id, method.name, out.verdict, jaccard(mask.mask, item.reference), e.segmentation.n_segments()});
    } catch (const Error& e) {
      out.failures.push_back({item.id, method.name, e.what()});
    }
  }
  return out;
}

// Runs `fn(i)` for every index, on up to `threads` workers.
template <typename Fn>
void for_each_index(std::size_t count, std::size_t threads, Fn&& fn) {
  threads = std::clamp<std::size_t>(threads, 1, std::max<std::size_t>(count, 1));
  if (threads == 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::jthread> workers;
  for (std::size_t t = 0; t < threads; ++t) {
    workers.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) fn(i);
    });
  }
}

}  // namespace

double jaccard(const BinaryMask& a, const BinaryMask& b) {
  if (!a.same_shape(b)) {
    throw InvalidArgument("jaccard: masks are " + std::to_string(a.width()) + "x" + std::to_string(a.height()) +
                          " and " + std::to_string(b.width()) + "x" + std::to_string(b.height()));
  }
  std::size_t inter = 0;
  std::size_t uni = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const bool in_a = a[i] != 0;
    const bool in_b = b[i] != 0;
    inter += in_a && in_b;
    uni += in_a || in_b;
  }
  if (uni == 0) throw InvalidArgument("jaccard: both masks are empty");
  return static_cast<double>(inter) / static_cast<double>(uni);
}

std::string_view to_string(Verdict v) {
  switch (v) {
    case Verdict::true_positive:
      return "true-positive";
    case Verdict::false_negative:
      return "false-negative";
    case Verdict::other:
      return "other";
  }
  return "other";
}

Verdict parse_verdict(std::string_view s) {
  if (s == "true-positive") return Verdict::true_positive;
  if (s == "false-negative") return Verdict::false_negative;
  if (s == "other") return Verdict::other;
  throw InvalidArgument("unknown verdict '" + std::string(s) + "'");
}

std::vector<CorpusItem> load_corpus(const fs::path& dir) {
  if (!fs::is_directory(dir)) {
    throw IoError(IoError::Kind::io_failure, "corpus directory '" + dir.string() + "' does not exist");
  }
  std::vector<fs::path> images;
  for (const auto& entry : fs::directory_iterator(dir)) {
    const std::string name = entry.path().filename().string();
    if (entry.is_regular_file() && ends_with(name, ".png") && !ends_with(name, kRefSuffix)) {
      images.push_back(entry.path());
    }
  }
  if (images.empty()) throw InvalidArgument("corpus directory '" + dir.string() + "' holds no images");
  std::sort(images.begin(), images.end());

  std::vector<CorpusItem> corpus;
  corpus.reserve(images.size());
  for (const fs::path& path : images) {
    const std::string stem = path.stem().string();
    const fs::path ref = dir / (stem + std::string(kRefSuffix));
    if (!fs::exists(ref)) {
      throw IoError(IoError::Kind::io_failure, "reference mask '" + ref.string() + "' is missing");
    }
    corpus.push_back({stem, imaging::load_png(path), imaging::load_mask_png(ref)});
  }
  return corpus;
}

MethodConfig parse_method(const nlohmann::json& entry) {
  if (entry.is_string()) {
    const auto params = seg::default_params(entry.get<std::string>());
    return {std::string(seg::method_name(params)), params};
  }
  if (!entry.is_object()) throw InvalidArgument("method entry must be a name or an object: " + entry.dump());
  for (const auto& [key, value] : entry.items()) {
    if (key != "name" && key != "method" && key != "params") {
      throw InvalidArgument("method entry: unknown key '" + key + "'");
    }
  }
  if (!entry.contains("method") || !entry["method"].is_string()) {
    throw InvalidArgument("method entry needs a \"method\" string: " + entry.dump());
  }
  const auto params = seg::params_from_json(entry["method"].get<std::string>(), entry.value("params", nlohmann::json()));
  if (entry.contains("name") && !entry["name"].is_string()) throw InvalidArgument("method entry: name must be a string");
  return {entry.value("name", std::string(seg::method_name(params))), params};
}

std::vector<MethodConfig> parse_methods(const nlohmann::json& entries) {
  if (!entries.is_array() || entries.empty()) throw InvalidArgument("methods must be a non-empty list");
  std::vector<MethodConfig> out;
  for (const auto& entry : entries) {
    out.push_back(parse_method(entry));
    for (std::size_t i = 0; i + 1 < out.size(); ++i) {
      if (out[i].name == out.back().name) throw InvalidArgument("method name '" + out.back().name + "' given twice");
    }
  }
  return out;
}

ReportRow summarize(std::string method, std::span<const double> values) {
  ReportRow row{std::move(method), values.size(), 0.0, 0.0, 0.0};
  if (values.empty()) return row;
  double sum = 0.0;
  for (double v : values) sum += v;
  row.mean = sum / static_cast<double>(values.size());
  double sq = 0.0;
  for (double v : values) sq += (v - row.mean) * (v - row.mean);
  row.variance = sq / static_cast<double>(values.size());
  row.stddev = std::sqrt(row.variance);
  return row;
}

EvalReport evaluate_corpus(std::span<const CorpusItem> corpus, std::span<const MethodConfig> methods,
                           const classify::ClassifierSpec& classifier, const EvalConfig& cfg) {
  if (corpus.empty()) throw InvalidArgument("corpus is empty");
  if (methods.empty()) throw InvalidArgument("no segmentation methods given");
  lime::validate(cfg.perturbation);
  if (cfg.k < 1 || cfg.top < 1) throw InvalidArgument("K and top must be >= 1");
  classify::Gateway gateway(classifier);

  std::vector<ImageOutcome> outcomes(corpus.size());
  for_each_index(corpus.size(), cfg.threads,
                 [&](std::size_t i) { outcomes[i] = evaluate_image(corpus[i], i, methods, gateway, cfg); });

  EvalReport report;
  report.images = corpus.size();
  report.filter = cfg.filter;
  for (ImageOutcome& o : outcomes) {
    const bool classified = o.failures.empty() || !o.failures.front().method.empty();
    if (classified) {
      report.true_positive += o.verdict == Verdict::true_positive;
      report.false_negative += o.verdict == Verdict::false_negative;
      report.other += o.verdict == Verdict::other;
    }
    std::move(o.records.begin(), o.records.end(), std::back_inserter(report.records));
    std::move(o.failures.begin(), o.failures.end(), std::back_inserter(report.failures));
  }
  for (const MethodConfig& method : methods) {
    std::vector<double> values;
    for (const EvalRecord& r : report.records) {
      if (r.method == method.name) values.push_back(r.jaccard);
    }
    report.rows.push_back(summarize(method.name, values));
  }
  return report;
}

std::string records_csv(const EvalReport& report) {
  std::string out = "image,method,verdict,jaccard,n_segments\n";
  for (const EvalRecord& r : report.records) {
    out += r.image + "," + r.method + "," + std::string(to_string(r.verdict)) + "," + format_double(r.jaccard) +
           "," + std::to_string(r.n_segments) + "\n";
  }
  return out;
}

std::vector<EvalRecord> parse_records_csv(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  if (!std::getline(in, line) || line != "image,method,verdict,jaccard,n_segments") {
    throw InvalidArgument("records.csv: unexpected header");
  }
  std::vector<EvalRecord> records;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::istringstream row(line);
    for (std::string f; std::getline(row, f, ',');) fields.push_back(f);
    if (fields.size() != 5) throw InvalidArgument("records.csv: malformed row '" + line + "'");
    records.push_back({fields[0], fields[1], parse_verdict(fields[2]), std::stod(fields[3]),
                       static_cast<std::uint32_t>(std::stoul(fields[4]))});
  }
  return records;
}

nlohmann::ordered_json report_json(const EvalReport& report) {
  nlohmann::ordered_json j;
  j["variance_estimator"] = "population";
  j["filter"] = report.filter ? std::string(to_string(*report.filter)) : std::string("all");
  j["images"] = report.images;
  j["verdicts"] = {{"true-positive", report.true_positive},
                   {"false-negative", report.false_negative},
                   {"other", report.other}};
  j["rows"] = nlohmann::ordered_json::array();
  for (const ReportRow& r : report.rows) {
    j["rows"].push_back(
        {{"method", r.method}, {"n", r.count}, {"mean", r.mean}, {"variance", r.variance}, {"std", r.stddev}});
  }
  j["failures"] = nlohmann::ordered_json::array();
  for (const EvalFailure& f : report.failures) {
    j["failures"].push_back({{"image", f.image}, {"method", f.method}, {"reason", f.reason}});
  }
  return j;
}

std::string report_table(const EvalReport& report) {
  std::size_t width = std::string_view("Superpixel method").size();
  for (const ReportRow& r : report.rows) width = std::max(width, r.method.size());
  std::ostringstream out;
  out << std::left << std::setw(static_cast<int>(width)) << "Superpixel method" << "  " << std::setw(4) << "n"
      << "  " << std::setw(12) << "Mean Value" << "  " << std::setw(12) << "Variance" << "  "
      << "Standard deviation\n";
  out << std::fixed << std::setprecision(8);
  for (const ReportRow& r : report.rows) {
    out << std::setw(static_cast<int>(width)) << r.method << "  " << std::setw(4) << r.count << "  "
        << std::setw(12) << r.mean << "  " << std::setw(12) << r.variance << "  " << r.stddev << "\n";
  }
  return out.str();
}

std::vector<seg::SegmenterParams> expand_grid(std::string_view method, const nlohmann::ordered_json& grid) {
  if (!grid.is_object() || grid.empty()) throw InvalidArgument("sweep grid must be a non-empty JSON object");
  std::vector<nlohmann::json> points{nlohmann::json::object()};
  for (const auto& [key, values] : grid.items()) {
    if (!values.is_array() || values.empty()) {
      throw InvalidArgument("sweep grid entry '" + key + "' must be a non-empty array");
    }
    std::vector<nlohmann::json> next;
    for (const auto& partial : points) {
      for (const auto& v : values) {
        nlohmann::json p = partial;
        p[key] = v;
        next.push_back(std::move(p));
      }
    }
    points = std::move(next);
  }
  std::vector<seg::SegmenterParams> out;
  out.reserve(points.size());
  for (const auto& p : points) out.push_back(seg::params_from_json(method, p));
  return out;
}

SweepResult sweep(std::span<const seg::SegmenterParams> grid, std::span<const CorpusItem> corpus,
                  const classify::ClassifierSpec& classifier, const EvalConfig& cfg) {
  if (grid.empty()) throw InvalidArgument("sweep grid is empty");
  if (corpus.empty()) throw InvalidArgument("corpus is empty");

  SweepResult result;
  std::optional<double> best;
  for (const seg::SegmenterParams& params : grid) {
    const MethodConfig method{std::string(seg::method_name(params)), params};
    SweepPoint point{params, std::nullopt, 0, ""};
    const EvalReport report = evaluate_corpus(corpus, std::span(&method, 1), classifier, cfg);
    const ReportRow& row = report.rows.front();
    if (row.count == 0) {
      point.failure = report.failures.empty() ? "no image passed the verdict filter" : report.failures.front().reason;
    } else {
      point.mean = row.mean;
      point.count = row.count;
      if (!best || row.mean > *best) {
        best = row.mean;
        result.best = result.points.size();
      }
    }
    result.points.push_back(std::move(point));
  }
  if (!best) {
    std::string reasons;
    for (std::size_t i = 0; i < result.points.size(); ++i) {
      reasons += "\n  point " + std::to_string(i) + ": " + result.points[i].failure;
    }
    throw SweepFailure("every sweep point failed:" + reasons);
  }
  return result;
}

std::string sweep_csv(const SweepResult& result) {
  std::string out;
  const auto header = seg::params_to_json(result.points.front().params);
  for (const auto& [key, value] : header.items()) out += key + ",";
  out += "n,mean,status\n";
  for (const SweepPoint& p : result.points) {
    const auto row = seg::params_to_json(p.params);
    for (const auto& [key, value] : row.items()) out += value.dump() + ",";
    out += std::to_string(p.count) + ",";
    out += p.mean ? format_double(*p.mean) : std::string("");
    std::string status = p.mean ? "ok" : p.failure;
    std::replace(status.begin(), status.end(), ',', ';');
    std::replace(status.begin(), status.end(), '\n', ' ');
    out += "," + status + "\n";
  }
  return out;
}

}  // namespace superlime::eval
