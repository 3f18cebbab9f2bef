#include "cli.hpp"

#include <charconv>
#include <cmath>
#include <exception>
#include <filesystem>
#include <iostream>
#include <sstream>

#include <omp.h>

#include <CLI11.hpp>
#include <json.hpp>

#include "rwcp/error.hpp"
#include "rwcp/graph.hpp"
#include "rwcp/manifest.hpp"
#include "rwcp/stability.hpp"
#include "rwcp/tensor_io.hpp"

namespace rwcp::cli {

namespace fs = std::filesystem;
using nlohmann::json;

PipelineConfig RunConfig::pipeline() const {
  PipelineConfig p;
  p.method = method;
  p.diffusion.n_step = n_step;
  p.diffusion.graph = graph;
  p.dilation = dilation;
  return p;
}

void RunConfig::validate() const {
  auto fail = [](const std::string& what) { throw Error(ErrorKind::InvalidArgument, what); };
  if (!(alpha > 0.0 && alpha < 1.0)) fail("--alpha must lie in (0, 1)");
  graph.validate();
  if (n_step > 10000) fail("--steps is unreasonably large");
  if (!(metrics.spacing > 0.0)) fail("--spacing must be positive");
  if (workers < 0) fail("--workers must be >= 0");
  if (!(step > 0.0 && step <= 1.0)) fail("--step must lie in (0, 1]");
  if (dilation.max_dilations == 0) fail("--max-dilations must be at least 1");
  const bool needs_manifest = command == "calibrate" || command == "infer" || command == "evaluate";
  if (needs_manifest && manifest.empty()) fail("--manifest is required for " + command);
  if (command == "infer" && calibration.empty()) fail("--calibration is required for infer");
  if (command == "evaluate" && calibration.empty() && predictions.empty()) {
    fail("evaluate needs --predictions or --calibration");
  }
  if (command == "simulate") {
    if (n_test == 0 || trials == 0) fail("--n-test and --trials must be positive");
    scene.validate();
  }
  if (command == "stability" && manifest.empty() && profile != "sharp" && profile != "default") {
    fail("--profile must be 'sharp' or 'default'");
  }
  if (command == "stability" && !manifest.empty() && id.empty()) {
    fail("stability on a manifest needs --id");
  }
}

namespace {

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::TargetInfeasible:
    case ErrorKind::Unsatisfiable:
      return kInfeasible;
    case ErrorKind::IoFailure:
    case ErrorKind::MalformedFile:
    case ErrorKind::ShapeMismatch:
    case ErrorKind::RangeViolation:
    case ErrorKind::ZeroVector:
    case ErrorKind::DimensionMismatch:
      return kIoError;
    case ErrorKind::InvalidArgument:
      return kConfigError;
    default:
      return kFailure;
  }
}

std::string fmt_double(double v) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string safe_name(std::string id) {
  for (char& c : id) {
    if (c == '/' || c == '\\') c = '_';
  }
  return id;
}

fs::path prepare_out_dir(const RunConfig& cfg) {
  fs::path dir(cfg.out);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorKind::IoFailure, "cannot create output directory " + dir.string());
  return dir;
}

fs::path calibration_path(const RunConfig& cfg) {
  if (!cfg.calibration.empty()) return cfg.calibration;
  return prepare_out_dir(cfg) / "calibration.json";
}

// Runs fn(i) for i in [0, n) on the worker pool, rethrowing the first failure.
template <class Fn>
void for_each_parallel(std::size_t n, Fn fn) {
  std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i) {
    try {
      fn(static_cast<std::size_t>(i));
    } catch (...) {
#pragma omp critical
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
}

// Resolves the pipeline used at inference: the calibration file's method
// unless --method was given.
PipelineConfig inference_pipeline(const RunConfig& cfg, const CalibrationResult& cal,
                                  std::ostream& err, bool& mismatch) {
  PipelineConfig p = cfg.pipeline();
  if (!cfg.method_given) p.method = cal.method;
  const std::string hash = config_hash(p);
  mismatch = hash != cal.config_hash;
  if (mismatch) {
    err << "warning: pipeline config hash " << hash << " (" << to_string(p.method)
        << ") differs from calibration hash " << cal.config_hash << " (" << to_string(cal.method)
        << "); the risk guarantee assumes identical pipelines\n";
  }
  return p;
}

json stat_json(const MetricStat& s) {
  return json{{"mean", s.mean}, {"std", s.stddev}, {"count", s.count}};
}

}  // namespace

int cmd_calibrate(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  const auto manifest = load_manifest(cfg.manifest);
  if (!manifest.all_have_masks()) {
    throw Error(ErrorKind::InvalidArgument, "calibration needs a mask for every manifest entry");
  }
  const auto samples = load_samples(manifest);
  const CalibrationResult r = calibrate(samples, cfg.pipeline(), cfg.alpha);
  const fs::path path = calibration_path(cfg);
  save_calibration(r, path);

  const double risk = r.risk_at_lambda_hat();
  err << "method " << to_string(r.method) << ": lambda_hat = " << r.lambda_hat
      << ", alpha* = " << r.alpha_star << ", n = " << r.n << ", empirical risk = " << risk
      << "\nwrote " << path.string() << "\n";
  if (cfg.json) {
    out << json{{"lambda_hat", r.lambda_hat}, {"alpha", r.alpha}, {"alpha_star", r.alpha_star},
                {"n", r.n}, {"empirical_risk", risk}, {"method", to_string(r.method)},
                {"config_hash", r.config_hash}, {"path", path.string()}}
               .dump()
        << "\n";
  }
  return kOk;
}

int cmd_infer(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  const CalibrationResult cal = load_calibration(cfg.calibration);
  bool mismatch = false;
  const PipelineConfig pipeline = inference_pipeline(cfg, cal, err, mismatch);
  if (mismatch && cfg.strict) return kConfigError;

  const auto manifest = load_manifest(cfg.manifest);
  const fs::path dir = prepare_out_dir(cfg);
  std::vector<std::string> written(manifest.entries.size());
  for_each_parallel(manifest.entries.size(), [&](std::size_t i) {
    const auto& e = manifest.entries[i];
    Sample s{e.id, load_prob_map(e.prob_path), load_feature_map(e.feature_path), std::nullopt};
    if (e.mask_path) s.mask = load_mask(*e.mask_path);
    const BinaryMask set = infer(s, pipeline, cal.lambda_hat);
    const std::string stem = safe_name(e.id);
    const fs::path target = dir / (stem + "_set.npy");
    save_tensor(set, target);
    written[i] = target.string();
    if (cfg.png) write_overlay_png(s.prob, set, s.mask, (dir / (stem + "_overlay.png")).string());
    if (pipeline.method == Method::Rwcp && cfg.dump_steps) {
      const fs::path steps = dir / (stem + "_steps");
      fs::create_directories(steps);
      diffuse_full(s.prob, s.features, pipeline.diffusion, steps);
    }
    if (cfg.dump_graph) {
      build_transition_matrix(s.features, pipeline.diffusion.graph)
          .dump_csv(dir / (stem + "_graph.csv"));
    }
  });

  err << "wrote " << written.size() << " prediction sets to " << dir.string()
      << " (lambda_hat = " << cal.lambda_hat << ", method " << to_string(pipeline.method) << ")\n";
  if (cfg.json) {
    out << json{{"lambda_hat", cal.lambda_hat}, {"method", to_string(pipeline.method)},
                {"config_hash_match", !mismatch}, {"outputs", written}}
               .dump()
        << "\n";
  }
  return kOk;
}

int cmd_evaluate(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  const auto manifest = load_manifest(cfg.manifest);
  if (!manifest.all_have_masks()) {
    throw Error(ErrorKind::InvalidArgument, "evaluation needs a mask for every manifest entry");
  }
  std::optional<CalibrationResult> cal;
  PipelineConfig pipeline = cfg.pipeline();
  if (cfg.predictions.empty()) {
    cal = load_calibration(cfg.calibration);
    bool mismatch = false;
    pipeline = inference_pipeline(cfg, *cal, err, mismatch);
    if (mismatch && cfg.strict) return kConfigError;
  }

  std::vector<MetricReport> reports(manifest.entries.size());
  for_each_parallel(manifest.entries.size(), [&](std::size_t i) {
    const auto& e = manifest.entries[i];
    const ProbMap prob = load_prob_map(e.prob_path);
    const BinaryMask truth = load_mask(*e.mask_path);
    BinaryMask set = BinaryMask::filled(1, 1, false);
    if (cal) {
      Sample s{e.id, prob, load_feature_map(e.feature_path), truth};
      set = infer(s, pipeline, cal->lambda_hat);
    } else {
      set = load_mask(fs::path(cfg.predictions) / (safe_name(e.id) + "_set.npy"));
    }
    reports[i] = evaluate(set, truth, base_prediction(prob), cfg.metrics);
  });

  std::ostringstream csv;
  csv << "id,coverage,stretch,dsc,assd,hd95,flags\n";
  for (std::size_t i = 0; i < reports.size(); ++i) {
    const auto& r = reports[i];
    csv << manifest.entries[i].id << ',' << fmt_double(r.coverage) << ',' << fmt_double(r.stretch)
        << ',' << fmt_double(r.dsc) << ',' << fmt_double(r.assd) << ',' << fmt_double(r.hd95)
        << ',' << flags_to_string(r.flags) << '\n';
    if (r.flags) {
      err << "note: " << manifest.entries[i].id << " is degenerate (" << flags_to_string(r.flags)
          << ")\n";
    }
  }
  const MetricSummary s = summarize(reports);
  const json summary{{"images", s.images},           {"degenerate", s.degenerate},
                     {"coverage", stat_json(s.coverage)}, {"stretch", stat_json(s.stretch)},
                     {"dsc", stat_json(s.dsc)},           {"assd", stat_json(s.assd)},
                     {"hd95", stat_json(s.hd95)}};
  const fs::path dir = prepare_out_dir(cfg);
  write_file_atomic(dir / "metrics.csv", csv.str());
  write_file_atomic(dir / "summary.json", summary.dump(2) + "\n");

  auto pm = [](const MetricStat& m) {
    std::ostringstream o;
    o.setf(std::ios::fixed);
    o.precision(3);
    o << m.mean << " +- " << m.stddev;
    return o.str();
  };
  err << "coverage " << pm(s.coverage) << " | stretch " << pm(s.stretch) << " | DSC "
      << pm(s.dsc) << " | ASSD " << pm(s.assd) << " | HD95 " << pm(s.hd95) << " (" << s.images
      << " images, " << s.degenerate << " degenerate)\n";
  if (cfg.json) out << summary.dump() << "\n";
  return kOk;
}

int cmd_simulate(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  SceneSpec spec = cfg.scene;
  spec.seed = cfg.seed;
  std::vector<Method> methods = cfg.methods;
  if (methods.empty()) methods = {Method::Rwcp, Method::StandardCrc, Method::Dilation};

  json results = json::array();
  std::ostringstream csv;
  csv << "method,trial,fnr,lambda_hat\n";
  for (Method m : methods) {
    PipelineConfig p = cfg.pipeline();
    p.method = m;
    const auto sim = coverage_simulation(spec, p, cfg.alpha, cfg.n_cal, cfg.n_test, cfg.trials);
    for (std::size_t t = 0; t < sim.trial_fnr.size(); ++t) {
      csv << to_string(m) << ',' << t << ',' << fmt_double(sim.trial_fnr[t]) << ','
          << fmt_double(sim.trial_lambda[t]) << '\n';
    }
    results.push_back({{"method", to_string(m)},
                       {"mean_fnr", sim.mean_fnr},
                       {"lower_bound", sim.lower_bound},
                       {"mean_fnr_within_alpha", sim.mean_fnr <= cfg.alpha}});
    err << to_string(m) << ": mean test FNR " << sim.mean_fnr << " over " << cfg.trials
        << " trials (alpha " << cfg.alpha << ", lower-bound diagnostic " << sim.lower_bound
        << ")\n";
  }
  const json summary{{"alpha", cfg.alpha},   {"n_cal", cfg.n_cal}, {"n_test", cfg.n_test},
                     {"trials", cfg.trials}, {"seed", cfg.seed},   {"methods", results}};
  const fs::path dir = prepare_out_dir(cfg);
  write_file_atomic(dir / "simulation.json", summary.dump(2) + "\n");
  write_file_atomic(dir / "simulation_trials.csv", csv.str());
  if (cfg.json) out << summary.dump() << "\n";
  return kOk;
}

int cmd_stability(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  std::optional<Scene> scene;
  std::string source;
  if (!cfg.manifest.empty()) {
    const auto manifest = load_manifest(cfg.manifest);
    for (const auto& e : manifest.entries) {
      if (e.id != cfg.id) continue;
      scene = Scene{load_prob_map(e.prob_path), load_feature_map(e.feature_path),
                    e.mask_path ? load_mask(*e.mask_path) : BinaryMask::filled(1, 1, false)};
    }
    if (!scene) throw Error(ErrorKind::InvalidArgument, "no manifest entry with id '" + cfg.id + "'");
    source = cfg.id;
  } else {
    SceneSpec spec = cfg.scene;
    spec.seed = cfg.seed;
    scene = cfg.profile == "sharp" ? gen_sharp_case(spec, cfg.index) : gen_scene(spec, cfg.index);
    source = cfg.profile + " scene " + std::to_string(cfg.index) + " (seed " +
             std::to_string(cfg.seed) + ")";
  }

  const StabilityReport r =
      stability_report(scene->prob, scene->features, cfg.pipeline().diffusion, cfg.step);
  std::ostringstream csv;
  csv << "lambda,raw_size,diffused_size\n";
  for (std::size_t i = 0; i < r.raw.lambdas.size(); ++i) {
    csv << fmt_double(r.raw.lambdas[i]) << ',' << r.raw.sizes[i] << ',' << r.diffused.sizes[i]
        << '\n';
  }
  const fs::path dir = prepare_out_dir(cfg);
  write_file_atomic(dir / "stability.csv", csv.str());
  const json summary{{"source", source},
                     {"step", cfg.step},
                     {"raw_max_rate", r.raw.max_rate},
                     {"diffused_max_rate", r.diffused.max_rate},
                     {"reduction", std::isinf(r.reduction) ? json(nullptr) : json(r.reduction)}};
  write_file_atomic(dir / "stability.json", summary.dump(2) + "\n");
  err << source << ": max |d|C|/d lambda| raw " << r.raw.max_rate << ", diffused "
      << r.diffused.max_rate << " (reduction " << r.reduction << "x)\n";
  if (cfg.json) out << summary.dump() << "\n";
  return kOk;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Random-walk conformal prediction for binary segmentation", "rwcp"};
  app.set_config("--config", "", "TOML-style key = value file; command-line flags take precedence");
  app.require_subcommand(1);

  RunConfig cfg;
  std::string method = "rwcp";
  int element = 8;
  int connectivity = 4;

  app.add_option("--manifest", cfg.manifest, "Dataset manifest JSON");
  app.add_option("--alpha", cfg.alpha, "Target risk level in (0, 1)");
  app.add_option("--method", method, "rwcp | crc | dilation (simulate also accepts 'all')");
  app.add_option("--k", cfg.graph.k, "Neighbors per pixel in the feature graph");
  app.add_option("--beta", cfg.graph.beta, "Kernel scale of the transition weights");
  app.add_option("--steps", cfg.n_step, "Random-walk diffusion steps");
  app.add_option("--out", cfg.out, "Output directory");
  app.add_option("--calibration", cfg.calibration, "Calibration JSON (written by calibrate)");
  app.add_option("--predictions", cfg.predictions, "Directory of <id>_set.npy files (evaluate)");
  app.add_option("--seed", cfg.seed, "Seed for synthetic scenes");
  app.add_flag("--json", cfg.json, "Print a machine-readable summary on stdout");
  app.add_flag("--strict", cfg.strict, "Fail on a calibration/inference config mismatch");
  app.add_option("--workers", cfg.workers, "Worker threads (0 = OpenMP default)");
  app.add_flag("--png", cfg.png, "Also write overlay PNGs (infer)");
  app.add_flag("--dump-steps", cfg.dump_steps, "Write every diffusion step as NPY (infer)");
  app.add_flag("--dump-graph", cfg.dump_graph, "Write the transition matrix as CSV (infer)");
  app.add_option("--spacing", cfg.metrics.spacing, "Pixel size for surface distances");
  app.add_option("--connectivity", connectivity, "Contour connectivity, 4 or 8")
      ->check(CLI::IsMember({4, 8}));
  app.add_option("--element", element, "Dilation structuring element, 4 or 8")
      ->check(CLI::IsMember({4, 8}));
  app.add_option("--max-dilations", cfg.dilation.max_dilations, "Upper bound on dilation count");
  app.add_option("--n-cal", cfg.n_cal, "Calibration images per trial (simulate)");
  app.add_option("--n-test", cfg.n_test, "Test images per trial (simulate)");
  app.add_option("--trials", cfg.trials, "Number of trials (simulate)");
  app.add_option("--grid", cfg.scene.height, "Synthetic image size (square)");
  app.add_option("--label-noise", cfg.scene.label_noise, "Synthetic score flip probability");
  app.add_option("--profile", cfg.profile, "Synthetic scene profile for stability: sharp | default");
  app.add_option("--index", cfg.index, "Synthetic scene index (stability)");
  app.add_option("--id", cfg.id, "Manifest entry id (stability)");
  app.add_option("--step", cfg.step, "Lambda grid step (stability)");

  for (const char* name : {"calibrate", "infer", "evaluate", "simulate", "stability"}) {
    app.add_subcommand(name)->fallthrough();
  }
  app.get_subcommand("calibrate")->description("Calibrate a threshold on a labeled manifest");
  app.get_subcommand("infer")->description("Write prediction-set masks for a manifest");
  app.get_subcommand("evaluate")->description("Per-image metrics and a mean +- std summary");
  app.get_subcommand("simulate")->description("Coverage simulation on synthetic scenes");
  app.get_subcommand("stability")->description("Set-size sensitivity to lambda, raw vs diffused");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kConfigError;
  }

  try {
    cfg.command = app.get_subcommands().front()->get_name();
    cfg.method_given = app.count("--method") > 0;
    if (method == "all") {
      if (cfg.command != "simulate") {
        throw Error(ErrorKind::InvalidArgument, "--method all is only valid for simulate");
      }
    } else {
      cfg.method = parse_method(method);
      if (cfg.method_given) cfg.methods = {cfg.method};
    }
    cfg.scene.width = cfg.scene.height;
    cfg.dilation.element = element == 4 ? Connectivity::Four : Connectivity::Eight;
    cfg.metrics.contour = connectivity == 8 ? Connectivity::Eight : Connectivity::Four;
    cfg.validate();
    if (cfg.workers > 0) omp_set_num_threads(cfg.workers);

    if (cfg.command == "calibrate") return cmd_calibrate(cfg, out, err);
    if (cfg.command == "infer") return cmd_infer(cfg, out, err);
    if (cfg.command == "evaluate") return cmd_evaluate(cfg, out, err);
    if (cfg.command == "simulate") return cmd_simulate(cfg, out, err);
    return cmd_stability(cfg, out, err);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return exit_code_for(e.kind());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kFailure;
  }
}

}  // namespace rwcp::cli
