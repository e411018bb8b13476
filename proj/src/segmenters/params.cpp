#include <cmath>
#include <set>
#include <string>

#include "superlime/error.hpp"
#include "superlime/segmenters.hpp"

namespace superlime::seg {

namespace {

template <class... Fs>
struct Overloaded : Fs... {
  using Fs::operator()...;
};
template <class... Fs>
Overloaded(Fs...) -> Overloaded<Fs...>;

void require(bool ok, std::string_view method, const std::string& what) {
  if (!ok) throw InvalidArgument(std::string(method) + ": " + what);
}

bool finite(double v) { return std::isfinite(v); }

std::string canonical(std::string_view method) {
  if (method == "felzenszwalb" || method == "fsz") return "felzenszwalb";
  if (method == "quickshift" || method == "quick-shift" || method == "qs") return "quickshift";
  if (method == "slic") return "slic";
  if (method == "compact-watershed" || method == "watershed" || method == "cw") return "compact-watershed";
  throw InvalidArgument("unknown segmentation method '" + std::string(method) +
                        "' (expected felzenszwalb, quickshift, slic or compact-watershed)");
}

template <typename T>
void read_number(const nlohmann::json& j, const char* key, T& out, std::string_view method) {
  if (!j.contains(key)) return;
  const auto& v = j.at(key);
  if constexpr (std::is_integral_v<T>) {
    require(v.is_number_integer() && v.get<std::int64_t>() >= 0, method,
            std::string("'") + key + "' must be a non-negative integer");
    out = static_cast<T>(v.get<std::int64_t>());
  } else {
    require(v.is_number(), method, std::string("'") + key + "' must be a number");
    out = v.get<T>();
  }
}

}  // namespace

std::string_view method_name(const SegmenterParams& params) {
  return std::visit(Overloaded{
                        [](const FelzParams&) { return std::string_view("felzenszwalb"); },
                        [](const QuickShiftParams&) { return std::string_view("quickshift"); },
                        [](const SlicParams&) { return std::string_view("slic"); },
                        [](const CompactWatershedParams&) { return std::string_view("compact-watershed"); },
                    },
                    params);
}

SegmenterParams default_params(std::string_view method) {
  const std::string name = canonical(method);
  if (name == "felzenszwalb") return FelzParams{};
  if (name == "quickshift") return QuickShiftParams{};
  if (name == "slic") return SlicParams{};
  return CompactWatershedParams{};
}

SegmenterParams params_from_json(std::string_view method, const nlohmann::json& j) {
  SegmenterParams params = default_params(method);
  const std::string name(method_name(params));
  if (j.is_null()) return params;
  require(j.is_object(), name, "parameters must be a JSON object");

  std::set<std::string> allowed;
  std::visit(Overloaded{
                 [&](FelzParams& p) {
                   allowed = {"scale", "sigma", "min_size"};
                   read_number(j, "scale", p.scale, name);
                   read_number(j, "sigma", p.sigma, name);
                   read_number(j, "min_size", p.min_size, name);
                 },
                 [&](QuickShiftParams& p) {
                   allowed = {"kernel_size", "max_dist", "spatial_weight"};
                   read_number(j, "kernel_size", p.kernel_size, name);
                   read_number(j, "max_dist", p.max_dist, name);
                   read_number(j, "spatial_weight", p.spatial_weight, name);
                 },
                 [&](SlicParams& p) {
                   allowed = {"k", "m", "max_iters", "threshold"};
                   read_number(j, "k", p.k, name);
                   read_number(j, "m", p.m, name);
                   read_number(j, "max_iters", p.max_iters, name);
                   read_number(j, "threshold", p.threshold, name);
                 },
                 [&](CompactWatershedParams& p) {
                   allowed = {"n_markers", "compactness"};
                   read_number(j, "n_markers", p.n_markers, name);
                   read_number(j, "compactness", p.compactness, name);
                 },
             },
             params);
  for (const auto& [key, value] : j.items()) {
    require(allowed.count(key) == 1, name, "unknown parameter '" + key + "'");
  }
  validate(params);
  return params;
}

nlohmann::ordered_json params_to_json(const SegmenterParams& params) {
  nlohmann::ordered_json j;
  std::visit(Overloaded{
                 [&](const FelzParams& p) {
                   j["scale"] = p.scale;
                   j["sigma"] = p.sigma;
                   j["min_size"] = p.min_size;
                 },
                 [&](const QuickShiftParams& p) {
                   j["kernel_size"] = p.kernel_size;
                   j["max_dist"] = p.max_dist;
                   j["spatial_weight"] = p.spatial_weight;
                 },
                 [&](const SlicParams& p) {
                   j["k"] = p.k;
                   j["m"] = p.m;
                   j["max_iters"] = p.max_iters;
                   j["threshold"] = p.threshold;
                 },
                 [&](const CompactWatershedParams& p) {
                   j["n_markers"] = p.n_markers;
                   j["compactness"] = p.compactness;
                 },
             },
             params);
  return j;
}

void validate(const SegmenterParams& params) {
  const std::string_view name = method_name(params);
  std::visit(Overloaded{
                 [&](const FelzParams& p) {
                   require(finite(p.scale) && p.scale > 0.0, name, "scale must be finite and > 0");
                   require(finite(p.sigma) && p.sigma >= 0.0, name, "sigma must be finite and >= 0");
                   require(p.min_size >= 1, name, "min_size must be >= 1");
                 },
                 [&](const QuickShiftParams& p) {
                   require(finite(p.kernel_size) && p.kernel_size > 0.0, name, "kernel_size must be finite and > 0");
                   require(finite(p.max_dist) && p.max_dist > 0.0, name, "max_dist must be finite and > 0");
                   require(finite(p.spatial_weight) && p.spatial_weight > 0.0, name,
                           "spatial_weight must be finite and > 0");
                 },
                 [&](const SlicParams& p) {
                   require(p.k >= 1, name, "k must be >= 1");
                   require(finite(p.m) && p.m > 0.0, name, "m must be finite and > 0");
                   require(p.max_iters >= 1, name, "max_iters must be >= 1");
                   require(finite(p.threshold) && p.threshold >= 0.0, name, "threshold must be finite and >= 0");
                 },
                 [&](const CompactWatershedParams& p) {
                   require(p.n_markers >= 1, name, "n_markers must be >= 1");
                   require(finite(p.compactness) && p.compactness >= 0.0, name,
                           "compactness must be finite and >= 0");
                 },
             },
             params);
}

void validate(const SegmenterParams& params, std::size_t width, std::size_t height) {
  validate(params);
  const std::string_view name = method_name(params);
  const std::size_t n = width * height;
  std::visit(Overloaded{
                 [&](const FelzParams& p) { require(p.min_size <= n, name, "min_size exceeds the pixel count"); },
                 [](const QuickShiftParams&) {},
                 [&](const SlicParams& p) { require(p.k <= n, name, "k exceeds the pixel count"); },
                 [&](const CompactWatershedParams& p) {
                   require(p.n_markers <= n, name, "n_markers exceeds the pixel count");
                 },
             },
             params);
}

LabelMap segment(const Image& img, const SegmenterParams& params, std::uint64_t seed) {
  return std::visit(Overloaded{
                        [&](const FelzParams& p) { return segment_felzenszwalb(img, p); },
                        [&](const QuickShiftParams& p) { return segment_quickshift(img, p, seed); },
                        [&](const SlicParams& p) { return segment_slic(img, p); },
                        [&](const CompactWatershedParams& p) { return segment_compact_watershed(img, p); },
                    },
                    params);
}

}  // namespace superlime::seg
