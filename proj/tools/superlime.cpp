#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "json_config.hpp"
#include "superlime/classifier.hpp"
#include "superlime/error.hpp"
#include "superlime/evaluation.hpp"
#include "superlime/explainer.hpp"
#include "superlime/imaging.hpp"
#include "superlime/segmenters.hpp"
#include "superlime/synth.hpp"

namespace fs = std::filesystem;
using namespace superlime;

namespace {

enum ExitCode { kOk = 0, kUsage = 1, kIo = 2, kCompute = 3, kAdapter = 4 };

constexpr imaging::Rgb kBoundaryColor{255, 255, 0};

// Files written by one command; removed again unless committed.
class OutputSet {
 public:
  OutputSet() = default;
  OutputSet(const OutputSet&) = delete;
  OutputSet& operator=(const OutputSet&) = delete;
  ~OutputSet() {
    if (committed_) return;
    std::error_code ec;
    for (auto it = files_.rbegin(); it != files_.rend(); ++it) fs::remove(*it, ec);
    if (created_dir_) fs::remove(*created_dir_, ec);
  }

  void make_dir(const fs::path& dir) {
    if (dir.empty() || fs::exists(dir)) return;
    fs::create_directories(dir);
    if (!created_dir_) created_dir_ = dir;
  }

  void text(const fs::path& path, const std::string& content) {
    files_.push_back(path);
    std::ofstream out(path, std::ios::binary);
    out << content;
    out.close();
    if (!out) throw IoError(IoError::Kind::io_failure, "cannot write " + path.string());
  }

  template <typename Writer>
  void file(const fs::path& path, Writer&& write) {
    files_.push_back(path);
    write(path);
  }

  void commit() { committed_ = true; }

 private:
  std::vector<fs::path> files_;
  std::optional<fs::path> created_dir_;
  bool committed_ = false;
};

struct PerturbationFlags {
  std::size_t n = 1000;
  std::string replacement = "grey";
  double on_probability = 0.5;
  double kernel_width = 0.25;
  std::uint64_t seed = 0;
  std::size_t batch = 250;

  void add(CLI::App* app) {
    app->add_option("--n", n, "Perturbation pool size N")->capture_default_str();
    app->add_option("--replacement", replacement, "Fill for switched-off patches: grey or mean")
        ->check(CLI::IsMember({"grey", "mean"}))
        ->capture_default_str();
    app->add_option("--on-probability", on_probability, "Probability that a patch stays on")->capture_default_str();
    app->add_option("--kernel-width", kernel_width, "Proximity kernel width")->capture_default_str();
    app->add_option("--seed", seed, "Random seed")->capture_default_str();
    app->add_option("--batch", batch, "Images per classifier call")->capture_default_str();
  }

  lime::PerturbationConfig config() const {
    lime::PerturbationConfig cfg;
    cfg.pool_size = n;
    cfg.replacement = replacement == "mean" ? lime::Replacement{lime::MeanColor{}} : lime::Replacement{lime::FixedColor{}};
    cfg.on_probability = on_probability;
    cfg.kernel_width = kernel_width;
    cfg.seed = seed;
    cfg.batch_size = batch;
    lime::validate(cfg);
    return cfg;
  }
};

struct ClassifierFlags {
  std::string classifier = "stub";
  std::size_t classes = 2;

  void add(CLI::App* app) {
    app->add_option("--classifier", classifier,
                    "'stub' or an adapter command, invoked as '<command> <batch-dir>'")
        ->capture_default_str();
    app->add_option("--classes", classes, "Class count reported by an external adapter")->capture_default_str();
  }

  classify::ClassifierSpec spec() const {
    auto spec = classifier == "stub" ? classify::ClassifierSpec::stub()
                                     : classify::ClassifierSpec::external(classifier, classes);
    classify::validate(spec);
    return spec;
  }
};

nlohmann::ordered_json parse_json(const std::string& text, const std::string& what) {
  try {
    return nlohmann::ordered_json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(what + " is not valid JSON: " + e.what());
  }
}

seg::SegmenterParams read_params(const std::string& method, const std::string& params) {
  return seg::params_from_json(method, params.empty() ? nlohmann::json() : nlohmann::json(parse_json(params, "--params")));
}

// Entries are a method name or a JSON object, see eval::parse_method.
std::vector<eval::MethodConfig> read_methods(const std::vector<std::string>& entries) {
  nlohmann::json list = nlohmann::json::array();
  for (const std::string& entry : entries) {
    list.push_back(!entry.empty() && entry.front() == '{' ? nlohmann::json(parse_json(entry, "method entry"))
                                                          : nlohmann::json(entry));
  }
  return eval::parse_methods(list);
}

std::optional<eval::Verdict> read_filter(const std::string& filter) {
  if (filter == "all") return std::nullopt;
  return eval::parse_verdict(filter);
}

std::string defaults_help() {
  std::string out = "Segmenter defaults:\n";
  for (const char* method : {"felzenszwalb", "quickshift", "slic", "compact-watershed"}) {
    out += "  " + std::string(method) + " " + seg::params_to_json(seg::default_params(method)).dump() + "\n";
  }
  out += "Method aliases: fsz, qs, quick-shift, cw, watershed.\n";
  out += "Exit codes: 1 usage, 2 I/O, 3 compute, 4 classifier adapter.";
  return out;
}

// A subcommand with its --config file and the options that must end up set,
// from either the command line or the config.
struct Command {
  CLI::App* app = nullptr;
  std::string config;
  std::vector<CLI::Option*> required;

  explicit Command(CLI::App* a) : app(a) {
    app->add_option("--config", config, "JSON file whose keys mirror the long options");
  }

  CLI::Option* need(CLI::Option* opt) {
    required.push_back(opt);
    return opt;
  }

  void finish() {
    if (!config.empty()) cli::apply_json_config(*app, config);
    for (const CLI::Option* opt : required) {
      if (opt->count() == 0) throw InvalidArgument(app->get_name() + ": " + opt->get_name() + " is required");
    }
  }
};

// segment -------------------------------------------------------------------

struct SegmentArgs {
  std::string input;
  std::string method = "slic";
  std::string params;
  std::uint64_t seed = 0;
  std::string out;
};

void run_segment(const SegmentArgs& a) {
  const auto params = read_params(a.method, a.params);
  const auto img = imaging::load_png(a.input);
  const auto lm = seg::segment(img, params, a.seed);
  const auto overlay = seg::boundary_overlay(img, lm, kBoundaryColor);

  nlohmann::ordered_json meta;
  meta["n_segments"] = lm.n_segments();
  meta["method"] = std::string(seg::method_name(params));
  meta["params"] = seg::params_to_json(params);
  meta["seed"] = a.seed;

  OutputSet out;
  out.make_dir(fs::path(a.out).parent_path());
  out.file(a.out + ".labels.png", [&](const fs::path& p) { seg::save_labels_png(lm, p); });
  out.text(a.out + ".labels.json", meta.dump(2) + "\n");
  out.file(a.out + ".overlay.png", [&](const fs::path& p) { imaging::save_png(overlay, p); });
  out.commit();
  std::cout << meta["method"].get<std::string>() << ": " << lm.n_segments() << " segments\n";
}

// explain -------------------------------------------------------------------

struct ExplainArgs {
  std::string input;
  std::string method = "slic";
  std::string params;
  ClassifierFlags classifier;
  PerturbationFlags perturbation;
  std::size_t k = 5;
  std::optional<std::size_t> target;
  std::size_t top = 1;
  std::string out;
};

void run_explain(const ExplainArgs& a) {
  const auto params = read_params(a.method, a.params);
  const auto cfg = a.perturbation.config();
  const auto spec = a.classifier.spec();
  if (a.top < 1) throw InvalidArgument("--top must be >= 1");
  const auto img = imaging::load_png(a.input);
  const auto e = lime::explain(img, spec, params, cfg, {a.k, a.target});
  const auto mask = lime::explanation_mask(e, a.top);

  OutputSet out;
  const fs::path dir(a.out);
  out.make_dir(dir);
  out.text(dir / "explanation.json", lime::to_json(e).dump(2) + "\n");
  out.file(dir / "mask.png", [&](const fs::path& p) { imaging::save_mask_png(mask.mask, p); });
  out.file(dir / "explained.png", [&](const fs::path& p) { imaging::save_png(lime::dim_outside(img, mask.mask), p); });
  out.commit();

  std::cout << "class " << e.surrogate.target_class << " (p = " << e.original.probabilities[e.surrogate.target_class]
            << "), " << e.segmentation.n_segments() << " segments\n";
  for (const auto& patch : e.surrogate.selected) std::cout << "  segment " << patch.segment << "  " << patch.weight << "\n";
  if (mask.empty) std::cout << "no positively weighted patch; mask is empty\n";
}

// evaluate ------------------------------------------------------------------

struct EvaluateArgs {
  std::string corpus;
  std::vector<std::string> methods{"felzenszwalb", "quickshift", "slic", "compact-watershed"};
  ClassifierFlags classifier;
  PerturbationFlags perturbation;
  std::size_t k = 5;
  std::size_t top = 1;
  std::string filter = "true-positive";
  std::size_t threads = 1;
  std::string out = ".";
};

eval::EvalConfig eval_config(const PerturbationFlags& p, std::size_t k, std::size_t top, const std::string& filter,
                             std::size_t threads) {
  eval::EvalConfig cfg;
  cfg.perturbation = p.config();
  cfg.k = k;
  cfg.top = top;
  cfg.filter = read_filter(filter);
  cfg.threads = threads;
  return cfg;
}

void run_evaluate(const EvaluateArgs& a) {
  const auto methods = read_methods(a.methods);
  const auto cfg = eval_config(a.perturbation, a.k, a.top, a.filter, a.threads);
  const auto spec = a.classifier.spec();
  const auto corpus = eval::load_corpus(a.corpus);
  const auto report = eval::evaluate_corpus(corpus, methods, spec, cfg);

  OutputSet out;
  const fs::path dir(a.out);
  out.make_dir(dir);
  out.text(dir / "records.csv", eval::records_csv(report));
  out.text(dir / "report.json", eval::report_json(report).dump(2) + "\n");
  out.commit();

  std::cout << report.images << " images: " << report.true_positive << " true-positive, " << report.false_negative
            << " false-negative, " << report.other << " other\n";
  std::cout << eval::report_table(report);
  for (const auto& f : report.failures) {
    std::cerr << "skipped " << f.image << (f.method.empty() ? "" : " / " + f.method) << ": " << f.reason << "\n";
  }
}

// sweep ---------------------------------------------------------------------

struct SweepArgs {
  std::string corpus;
  std::string method = "quickshift";
  std::string grid;
  ClassifierFlags classifier;
  PerturbationFlags perturbation;
  std::size_t k = 5;
  std::size_t top = 1;
  std::string filter = "true-positive";
  std::size_t threads = 1;
  std::string out = ".";
};

void run_sweep(const SweepArgs& a) {
  const auto grid = eval::expand_grid(a.method, parse_json(a.grid, "--grid"));
  const auto cfg = eval_config(a.perturbation, a.k, a.top, a.filter, a.threads);
  const auto spec = a.classifier.spec();
  const auto corpus = eval::load_corpus(a.corpus);
  const auto result = eval::sweep(grid, corpus, spec, cfg);

  OutputSet out;
  const fs::path dir(a.out);
  out.make_dir(dir);
  out.text(dir / "sweep.csv", eval::sweep_csv(result));
  out.commit();

  const auto& best = result.best_point();
  std::cout << result.points.size() << " grid points; best " << seg::params_to_json(best.params).dump()
            << " mean " << *best.mean << " over " << best.count << " images\n";
}

// synth ---------------------------------------------------------------------

void run_synth(const synth::SynthConfig& cfg, const std::string& out_dir) {
  if (cfg.size < 8) throw InvalidArgument("--size must be >= 8");
  const auto images = synth::generate(cfg);
  synth::write_corpus(images, out_dir);
  std::cout << images.size() << " images written to " << out_dir << "\n";
}

int report(const std::string& kind, const std::exception& e, int code) {
  std::cerr << "superlime: " << kind << ": " << e.what() << "\n";
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Superpixel LIME explanations: segment, explain, evaluate, sweep, synth"};
  app.footer(defaults_help());
  app.require_subcommand(1);

  SegmentArgs seg_args;
  Command segment(app.add_subcommand("segment", "Segment an image into superpixels"));
  segment.need(segment.app->add_option("input", seg_args.input, "Input PNG"));
  segment.app->add_option("--method", seg_args.method, "Segmentation method")->capture_default_str();
  segment.app->add_option("--params", seg_args.params, "Method parameters as a JSON object");
  segment.app->add_option("--seed", seg_args.seed, "Random seed")->capture_default_str();
  segment.need(segment.app->add_option("--out", seg_args.out, "Output prefix"));

  ExplainArgs ex_args;
  Command explain(app.add_subcommand("explain", "Explain a classifier decision with LIME"));
  explain.need(explain.app->add_option("input", ex_args.input, "Input PNG"));
  explain.app->add_option("--method", ex_args.method, "Segmentation method")->capture_default_str();
  explain.app->add_option("--params", ex_args.params, "Method parameters as a JSON object");
  ex_args.classifier.add(explain.app);
  ex_args.perturbation.add(explain.app);
  explain.app->add_option("--k", ex_args.k, "Patches kept by K-Lasso")->capture_default_str();
  explain.app->add_option("--target", ex_args.target, "Class to explain (default: predicted class)");
  explain.app->add_option("--top", ex_args.top, "Positive patches in mask.png")->capture_default_str();
  explain.need(explain.app->add_option("--out", ex_args.out, "Output directory"));

  EvaluateArgs ev_args;
  Command evaluate(app.add_subcommand("evaluate", "Jaccard evaluation over a corpus directory"));
  evaluate.need(evaluate.app->add_option("corpus", ev_args.corpus, "Directory of <id>.png and <id>.ref.png"));
  evaluate.app
      ->add_option("--methods", ev_args.methods, "Method names, or JSON objects {\"name\", \"method\", \"params\"}")
      ->capture_default_str();
  ev_args.classifier.add(evaluate.app);
  ev_args.perturbation.add(evaluate.app);
  evaluate.app->add_option("--k", ev_args.k, "Patches kept by K-Lasso")->capture_default_str();
  evaluate.app->add_option("--top", ev_args.top, "Positive patches in each explanation mask")->capture_default_str();
  evaluate.app
      ->add_option("--filter", ev_args.filter, "Verdict to evaluate: true-positive, false-negative, other, all")
      ->capture_default_str();
  evaluate.app->add_option("--threads", ev_args.threads, "Worker threads")->capture_default_str();
  evaluate.app->add_option("--out", ev_args.out, "Directory for records.csv and report.json")->capture_default_str();

  SweepArgs sw_args;
  Command sweep(app.add_subcommand("sweep", "Grid search of segmenter parameters for mean Jaccard"));
  sweep.need(sweep.app->add_option("corpus", sw_args.corpus, "Directory of <id>.png and <id>.ref.png"));
  sweep.app->add_option("--method", sw_args.method, "Segmentation method")->capture_default_str();
  sweep.need(sweep.app->add_option("--grid", sw_args.grid, "JSON object of parameter value lists"));
  sw_args.classifier.add(sweep.app);
  sw_args.perturbation.add(sweep.app);
  sweep.app->add_option("--k", sw_args.k, "Patches kept by K-Lasso")->capture_default_str();
  sweep.app->add_option("--top", sw_args.top, "Positive patches in each explanation mask")->capture_default_str();
  sweep.app->add_option("--filter", sw_args.filter, "Verdict to evaluate")->capture_default_str();
  sweep.app->add_option("--threads", sw_args.threads, "Worker threads")->capture_default_str();
  sweep.app->add_option("--out", sw_args.out, "Directory for sweep.csv")->capture_default_str();

  synth::SynthConfig sy_cfg;
  std::string sy_out;
  Command synth_cmd(app.add_subcommand("synth", "Generate a synthetic stained-cell corpus"));
  synth_cmd.app->add_option("--count", sy_cfg.count, "Number of images")->capture_default_str();
  synth_cmd.app->add_option("--size", sy_cfg.size, "Image side in pixels")->capture_default_str();
  synth_cmd.app->add_option("--seed", sy_cfg.seed, "Random seed")->capture_default_str();
  synth_cmd.need(synth_cmd.app->add_option("--out", sy_out, "Output directory"));

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  try {
    for (Command* c : {&segment, &explain, &evaluate, &sweep, &synth_cmd}) {
      if (*c->app) c->finish();
    }
    if (*segment.app) run_segment(seg_args);
    if (*explain.app) run_explain(ex_args);
    if (*evaluate.app) run_evaluate(ev_args);
    if (*sweep.app) run_sweep(sw_args);
    if (*synth_cmd.app) run_synth(sy_cfg, sy_out);
  } catch (const InvalidArgument& e) {
    return report("invalid argument", e, kUsage);
  } catch (const IoError& e) {
    return report("I/O error", e, kIo);
  } catch (const classify::ClassifierError& e) {
    return report("classifier error", e, kAdapter);
  } catch (const ComputeError& e) {
    return report("compute error", e, kCompute);
  } catch (const fs::filesystem_error& e) {
    return report("I/O error", e, kIo);
  } catch (const std::exception& e) {
    return report("compute error", e, kCompute);
  }
  return kOk;
}
