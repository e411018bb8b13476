#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <sstream>

#include "superlime/classifier.hpp"

namespace superlime::classify {

namespace {

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, sep)) out.push_back(field);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

bool parse_double(const std::string& s, double& out) {
  if (s.empty()) return false;
  char* end = nullptr;
  errno = 0;
  out = std::strtod(s.c_str(), &end);
  return errno == 0 && end == s.c_str() + s.size() && std::isfinite(out);
}

std::vector<std::string> generic_names(std::size_t n) {
  std::vector<std::string> names;
  for (std::size_t i = 0; i < n; ++i) names.push_back("class_" + std::to_string(i));
  return names;
}

// Removes the directory tree when it goes out of scope.
class TempDir {
 public:
  TempDir() {
    std::string pattern = (std::filesystem::temp_directory_path() / "superlime-XXXXXX").string();
    if (::mkdtemp(pattern.data()) == nullptr) {
      throw ClassifierError(ClassifierError::Kind::launch_failure,
                            std::string("cannot create a temporary directory: ") + std::strerror(errno));
    }
    path_ = pattern;
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const noexcept { return path_; }

 private:
  std::filesystem::path path_;
};

std::string shell_quote(const std::string& s) {
  std::string out = "'";
  for (char c : s) {
    if (c == '\'') {
      out += "'\\''";
    } else {
      out += c;
    }
  }
  return out + "'";
}

}  // namespace

std::size_t Prediction::argmax() const {
  return static_cast<std::size_t>(
      std::distance(probabilities.begin(), std::max_element(probabilities.begin(), probabilities.end())));
}

bool on_simplex(const Prediction& p, double tolerance) {
  if (p.probabilities.empty() || p.probabilities.size() != p.class_names.size()) return false;
  double sum = 0.0;
  for (double v : p.probabilities) {
    if (!(v >= 0.0 && v <= 1.0)) return false;
    sum += v;
  }
  return std::abs(sum - 1.0) <= tolerance;
}

ClassifierSpec ClassifierSpec::external(std::string command, std::size_t class_count) {
  ClassifierSpec spec;
  spec.kind = Kind::external_command;
  spec.command = std::move(command);
  spec.class_count = class_count;
  return spec;
}

void validate(const ClassifierSpec& spec) {
  if (spec.class_count < 2) throw InvalidArgument("classifier needs at least 2 classes");
  if (spec.kind == ClassifierSpec::Kind::external_command && spec.command.empty()) {
    throw InvalidArgument("external classifier needs a non-empty command");
  }
  if (spec.kind == ClassifierSpec::Kind::builtin_stub && spec.class_count != 2) {
    throw InvalidArgument("the builtin stub classifier has exactly 2 classes");
  }
}

double stained_fraction(const Image& img) {
  const auto stained = std::count_if(img.pixels().begin(), img.pixels().end(), [](imaging::Rgb c) {
    return c.b > c.r + 20 && c.b > c.g + 20;
  });
  return static_cast<double>(stained) / static_cast<double>(img.size());
}

Prediction stub_score(const Image& img) {
  const double rate = 40.0 * stained_fraction(img);
  return {{std::exp(-rate), -std::expm1(-rate)}, {"clean", "indicator"}};
}

std::vector<Prediction> parse_predictions_csv(const std::filesystem::path& path, std::size_t expected_rows,
                                              std::size_t class_count) {
  using Kind = ClassifierError::Kind;
  std::ifstream in(path);
  if (!in) throw ClassifierError(Kind::malformed_output, "adapter did not write " + path.string());

  std::string expected_header = "index";
  for (std::size_t c = 0; c < class_count; ++c) expected_header += ",p_" + std::to_string(c);

  std::vector<Prediction> out;
  std::string line;
  std::size_t line_no = 0;
  bool header_seen = false;
  const auto names = generic_names(class_count);
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (!header_seen) {
      if (line != expected_header) {
        throw ClassifierError(Kind::malformed_output, "predictions.csv line " + std::to_string(line_no) +
                                                          ": expected header '" + expected_header + "', got '" +
                                                          line + "'");
      }
      header_seen = true;
      continue;
    }
    const std::size_t row = out.size();
    const std::string where = "predictions.csv line " + std::to_string(line_no) + " (index " + std::to_string(row) + ")";
    const auto fields = split(line, ',');
    if (fields.size() != class_count + 1) {
      throw ClassifierError(Kind::malformed_output, where + ": expected " + std::to_string(class_count + 1) +
                                                        " fields, got " + std::to_string(fields.size()));
    }
    double index = 0.0;
    if (!parse_double(fields[0], index) || index != static_cast<double>(row)) {
      throw ClassifierError(Kind::malformed_output, where + ": index field '" + fields[0] + "' out of sequence");
    }
    Prediction p{std::vector<double>(class_count), names};
    for (std::size_t c = 0; c < class_count; ++c) {
      if (!parse_double(fields[c + 1], p.probabilities[c])) {
        throw ClassifierError(Kind::malformed_output, where + ": '" + fields[c + 1] + "' is not a number");
      }
    }
    if (!on_simplex(p)) {
      throw ClassifierError(Kind::malformed_output, where + ": probabilities are not a distribution");
    }
    out.push_back(std::move(p));
  }
  if (!header_seen) throw ClassifierError(Kind::malformed_output, "predictions.csv is empty");
  if (out.size() != expected_rows) {
    const std::string detail = out.size() < expected_rows
                                   ? "short by " + std::to_string(expected_rows - out.size())
                                   : std::to_string(out.size() - expected_rows) + " extra";
    throw ClassifierError(Kind::count_mismatch, "predictions.csv has " + std::to_string(out.size()) +
                                                    " rows for " + std::to_string(expected_rows) + " images (" +
                                                    detail + ", first missing index " +
                                                    std::to_string(std::min(out.size(), expected_rows)) + ")");
  }
  return out;
}

void write_batch(std::span<const Image> images, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  char name[32];
  for (std::size_t i = 0; i < images.size(); ++i) {
    std::snprintf(name, sizeof(name), "%05zu.png", i);
    imaging::save_png(images[i], dir / name);
  }
}

Gateway::Gateway(ClassifierSpec spec) : spec_(std::move(spec)) { validate(spec_); }

std::vector<Prediction> Gateway::classify_batch(std::span<const Image> images) {
  if (images.empty()) throw InvalidArgument("classify_batch needs at least one image");
  if (spec_.kind == ClassifierSpec::Kind::builtin_stub) {
    std::vector<Prediction> out;
    out.reserve(images.size());
    for (const Image& img : images) out.push_back(stub_score(img));
    return out;
  }
  std::lock_guard lock(external_mutex_);
  return run_external(images);
}

std::vector<Prediction> Gateway::run_external(std::span<const Image> images) {
  TempDir tmp;
  const auto batch = tmp.path() / "batch";
  write_batch(images, batch);

  const std::string command = spec_.command + " " + shell_quote(batch.string()) + " 1>&2";
  const int status = std::system(command.c_str());
  if (status == -1) {
    throw ClassifierError(ClassifierError::Kind::launch_failure,
                          "cannot launch adapter '" + spec_.command + "': " + std::strerror(errno));
  }
  if (!WIFEXITED(status) || WEXITSTATUS(status) != 0) {
    const int code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    throw ClassifierError(ClassifierError::Kind::launch_failure,
                          "adapter '" + spec_.command + "' failed with exit status " + std::to_string(code));
  }
  return parse_predictions_csv(batch / "predictions.csv", images.size(), spec_.class_count);
}

std::vector<Prediction> classify_batch(const ClassifierSpec& spec, std::span<const Image> images) {
  Gateway gateway(spec);
  return gateway.classify_batch(images);
}

}  // namespace superlime::classify
