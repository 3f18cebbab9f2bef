#include "rwcp/conformal.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iterator>
#include <sstream>

#include <json.hpp>

#include "rwcp/error.hpp"
#include "rwcp/tensor_io.hpp"

namespace rwcp {

std::string to_string(Method m) {
  switch (m) {
    case Method::Rwcp: return "rwcp";
    case Method::StandardCrc: return "standard_crc";
    case Method::Dilation: return "dilation";
  }
  return "unknown";
}

Method parse_method(const std::string& name) {
  if (name == "rwcp") return Method::Rwcp;
  if (name == "crc" || name == "standard_crc") return Method::StandardCrc;
  if (name == "dilation" || name == "consema") return Method::Dilation;
  throw Error(ErrorKind::InvalidArgument, "unknown method '" + name + "'");
}

std::string config_hash(const PipelineConfig& cfg) {
  std::ostringstream canon;
  canon.precision(17);
  canon << "method=" << to_string(cfg.method);
  switch (cfg.method) {
    case Method::Rwcp:
      canon << ";k=" << cfg.diffusion.graph.k << ";beta=" << cfg.diffusion.graph.beta
            << ";n_step=" << cfg.diffusion.n_step << ";resample=bilinear-half-pixel";
      break;
    case Method::StandardCrc:
      break;
    case Method::Dilation:
      canon << ";max_dilations=" << cfg.dilation.max_dilations
            << ";element=" << static_cast<int>(cfg.dilation.element)
            << ";base_threshold=" << cfg.dilation.base_threshold;
      break;
  }
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : canon.str()) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  std::ostringstream hex;
  hex << std::hex;
  hex.width(16);
  hex.fill('0');
  hex << h;
  return hex.str();
}

RiskCurve::RiskCurve(std::vector<RiskPoint> points) : points_(std::move(points)) {
  for (std::size_t i = 1; i < points_.size(); ++i) {
    if (!(points_[i].lambda > points_[i - 1].lambda)) {
      throw Error(ErrorKind::InvalidArgument, "risk curve lambdas must strictly increase");
    }
    if (points_[i].risk > points_[i - 1].risk) {
      throw Error(ErrorKind::InvalidArgument, "risk curve must be non-increasing in lambda");
    }
  }
}

double RiskCurve::risk_at(double lambda) const {
  auto it = std::upper_bound(points_.begin(), points_.end(), lambda,
                             [](double l, const RiskPoint& p) { return l < p.lambda; });
  if (it == points_.begin()) {
    throw Error(ErrorKind::InvalidArgument, "lambda below the risk curve's domain");
  }
  return std::prev(it)->risk;
}

std::string calibration_to_json(const CalibrationResult& r) {
  nlohmann::json j;
  j["lambda_hat"] = r.lambda_hat;
  j["alpha"] = r.alpha;
  j["alpha_star"] = r.alpha_star;
  j["n"] = r.n;
  j["method"] = to_string(r.method);
  j["config_hash"] = r.config_hash;
  nlohmann::json curve = nlohmann::json::array();
  for (const auto& p : r.curve.points()) curve.push_back({p.lambda, p.risk});
  j["curve"] = std::move(curve);
  return j.dump() + "\n";
}

CalibrationResult calibration_from_json(const std::string& text) {
  try {
    auto j = nlohmann::json::parse(text);
    CalibrationResult r;
    r.lambda_hat = j.at("lambda_hat").get<double>();
    r.alpha = j.at("alpha").get<double>();
    r.alpha_star = j.at("alpha_star").get<double>();
    r.n = j.at("n").get<std::size_t>();
    r.method = parse_method(j.at("method").get<std::string>());
    r.config_hash = j.at("config_hash").get<std::string>();
    std::vector<RiskPoint> pts;
    for (const auto& p : j.at("curve")) pts.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
    r.curve = RiskCurve(std::move(pts));
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::MalformedFile, std::string("calibration file: ") + e.what());
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::InvalidArgument) throw;
    throw Error(ErrorKind::MalformedFile, std::string("calibration file: ") + e.what());
  }
}

void save_calibration(const CalibrationResult& result, const std::filesystem::path& path) {
  write_file_atomic(path, calibration_to_json(result));
}

CalibrationResult load_calibration(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::IoFailure, "cannot open calibration file " + path.string());
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return calibration_from_json(text);
}

namespace {

// Shared by every risk evaluation so sweeps and direct evaluation agree bit for bit.
inline double fnr_from_counts(std::size_t covered, std::size_t positives) noexcept {
  if (positives == 0) return 0.0;
  return 1.0 - static_cast<double>(covered) / static_cast<double>(positives);
}

// Mean of per-image losses, summed in ascending order so the result does not
// depend on dataset order.
double mean_loss(std::vector<double>& losses) {
  std::sort(losses.begin(), losses.end());
  double sum = 0.0;
  for (double v : losses) sum += v;
  return sum / static_cast<double>(losses.size());
}

void require_alpha(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw Error(ErrorKind::InvalidArgument, "alpha must lie in (0, 1)");
  }
}

void require_pairs(std::size_t scores, std::size_t masks) {
  if (scores == 0) throw Error(ErrorKind::InvalidArgument, "calibration set is empty");
  if (scores != masks) {
    throw Error(ErrorKind::InvalidArgument, "score and mask lists differ in length");
  }
}

}  // namespace

double fnr_loss(const BinaryMask& y, const BinaryMask& c) {
  return fnr_from_counts(intersection_count(y, c), y.count());
}

double inflated_target(double alpha, std::size_t n) {
  if (n == 0) throw Error(ErrorKind::InvalidArgument, "calibration size must be at least 1");
  const double nd = static_cast<double>(n);
  // Same as ((n + 1) / n) alpha - 1 / n, with a single rounding at the boundary n = 1/alpha - 1.
  const double target = ((nd + 1.0) * alpha - 1.0) / nd;
  if (target < 0.0) {
    std::ostringstream msg;
    msg << "alpha* = " << target << " < 0 for alpha = " << alpha << ", n = " << n << "; need n >= "
        << min_calibration_size(alpha, 1.0);
    throw Error(ErrorKind::TargetInfeasible, msg.str());
  }
  return target;
}

std::size_t min_calibration_size(double alpha, double loss_bound) {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw Error(ErrorKind::InvalidArgument, "alpha must lie in (0, 1)");
  }
  if (loss_bound <= 0.0) return 0;
  double guess = std::ceil(loss_bound / alpha - 1.0) - 1.0;
  auto n = static_cast<std::size_t>(std::max(0.0, guess));
  while ((static_cast<double>(n) + 1.0) * alpha < loss_bound) ++n;
  return n;
}

BinaryMask predict_set(const ProbMap& scores, double lambda) {
  if (!(lambda >= 0.0 && lambda <= 1.0)) {
    throw Error(ErrorKind::InvalidArgument, "lambda must lie in [0, 1]");
  }
  const double threshold = 1.0 - lambda;
  std::vector<std::uint8_t> out(scores.size());
  auto v = scores.values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = v[i] >= threshold ? 1 : 0;
  return BinaryMask(scores.height(), scores.width(), std::move(out));
}

double inclusion_lambda(double score) noexcept {
  // 1 - lambda is monotone in lambda under rounding, so the admissible lambdas form an
  // up-set. Non-negative doubles order like their bit patterns: bisect on those.
  auto admits = [score](double lambda) { return score >= 1.0 - lambda; };
  std::uint64_t lo = 0;                                // 0.0
  std::uint64_t hi = std::bit_cast<std::uint64_t>(1.0);  // always admissible for score >= 0
  if (admits(0.0)) return 0.0;
  while (hi - lo > 1) {
    const std::uint64_t mid = lo + (hi - lo) / 2;
    if (admits(std::bit_cast<double>(mid))) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return std::bit_cast<double>(hi);
}

double empirical_risk(std::span<const ProbMap> scores, std::span<const BinaryMask> masks,
                      double lambda) {
  require_pairs(scores.size(), masks.size());
  std::vector<double> losses(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) losses[i] = fnr_loss(masks[i], predict_set(scores[i], lambda));
  return mean_loss(losses);
}

CalibrationResult calibrate_threshold(std::span<const ProbMap> scores,
                                      std::span<const BinaryMask> masks, double alpha) {
  require_alpha(alpha);
  require_pairs(scores.size(), masks.size());
  const std::size_t n = scores.size();
  const double alpha_star = inflated_target(alpha, n);

  // Per image: sorted entry lambdas of its foreground pixels.
  std::vector<std::vector<double>> entry(n);
  std::vector<double> candidates{0.0, 1.0};
  for (std::size_t i = 0; i < n; ++i) {
    require_same_shape(scores[i].height(), scores[i].width(), masks[i].height(), masks[i].width(),
                       "calibration pair");
    for (std::size_t p = 0; p < masks[i].size(); ++p) {
      if (masks[i][p]) entry[i].push_back(inclusion_lambda(scores[i][p]));
    }
    std::sort(entry[i].begin(), entry[i].end());
    candidates.insert(candidates.end(), entry[i].begin(), entry[i].end());
  }
  std::sort(candidates.begin(), candidates.end());
  candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());

  std::vector<std::size_t> covered(n, 0);
  std::vector<double> losses(n);
  std::vector<RiskPoint> curve;
  curve.reserve(candidates.size());
  std::optional<double> lambda_hat;
  for (double lambda : candidates) {
    for (std::size_t i = 0; i < n; ++i) {
      while (covered[i] < entry[i].size() && entry[i][covered[i]] <= lambda) ++covered[i];
      losses[i] = fnr_from_counts(covered[i], entry[i].size());
    }
    const double risk = mean_loss(losses);
    curve.push_back({lambda, risk});
    if (!lambda_hat && risk <= alpha_star) lambda_hat = lambda;
  }

  CalibrationResult r;
  r.lambda_hat = *lambda_hat;  // lambda = 1 covers everything, so this is always set.
  r.alpha = alpha;
  r.alpha_star = alpha_star;
  r.n = n;
  r.curve = RiskCurve(std::move(curve));
  r.method = Method::StandardCrc;
  r.config_hash = config_hash(PipelineConfig{Method::StandardCrc, {}, {}});
  return r;
}

std::vector<Sample> load_samples(const DatasetManifest& manifest) {
  std::vector<Sample> out;
  out.reserve(manifest.entries.size());
  for (const auto& e : manifest.entries) {
    std::optional<BinaryMask> mask;
    if (e.mask_path) mask = load_mask(*e.mask_path);
    out.push_back(Sample{e.id, load_prob_map(e.prob_path), load_feature_map(e.feature_path),
                         std::move(mask)});
  }
  return out;
}

ProbMap conformal_scores(const Sample& sample, const PipelineConfig& cfg) {
  if (cfg.method == Method::Rwcp) return diffuse_full(sample.prob, sample.features, cfg.diffusion);
  return sample.prob;
}

namespace {

std::vector<BinaryMask> collect_masks(std::span<const Sample> samples) {
  std::vector<BinaryMask> masks;
  masks.reserve(samples.size());
  for (const auto& s : samples) {
    if (!s.mask) {
      throw Error(ErrorKind::InvalidArgument, "calibration sample '" + s.id + "' has no mask");
    }
    masks.push_back(*s.mask);
  }
  return masks;
}

std::vector<ProbMap> score_all(std::span<const Sample> samples, const PipelineConfig& cfg) {
  std::vector<std::optional<ProbMap>> slots(samples.size());
  const auto n = static_cast<std::ptrdiff_t>(samples.size());
  std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    try {
      slots[static_cast<std::size_t>(i)] = conformal_scores(samples[static_cast<std::size_t>(i)], cfg);
    } catch (...) {
#pragma omp critical
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
  std::vector<ProbMap> out;
  out.reserve(slots.size());
  for (auto& s : slots) out.push_back(std::move(*s));
  return out;
}

}  // namespace

CalibrationResult rwcp_calibrate(std::span<const Sample> samples, const DiffusionConfig& cfg,
                                 double alpha) {
  require_alpha(alpha);
  const PipelineConfig pipeline{Method::Rwcp, cfg, {}};
  auto masks = collect_masks(samples);
  inflated_target(alpha, samples.size());  // fail before the expensive part
  auto scores = score_all(samples, pipeline);
  CalibrationResult r = calibrate_threshold(scores, masks, alpha);
  r.method = Method::Rwcp;
  r.config_hash = config_hash(pipeline);
  return r;
}

CalibrationResult rwcp_calibrate(const DatasetManifest& manifest, const DiffusionConfig& cfg,
                                 double alpha) {
  const auto samples = load_samples(manifest);
  return rwcp_calibrate(samples, cfg, alpha);
}

BinaryMask rwcp_infer(const ProbMap& prob, const FeatureMap& features, const DiffusionConfig& cfg,
                      double lambda_hat) {
  return predict_set(diffuse_full(prob, features, cfg), lambda_hat);
}

CalibrationResult standard_crc_calibrate(std::span<const ProbMap> probs,
                                         std::span<const BinaryMask> masks, double alpha) {
  return calibrate_threshold(probs, masks, alpha);
}

BinaryMask standard_crc_infer(const ProbMap& prob, double lambda_hat) {
  return predict_set(prob, lambda_hat);
}

BinaryMask base_prediction(const ProbMap& prob, double threshold) {
  std::vector<std::uint8_t> out(prob.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = prob[i] >= threshold ? 1 : 0;
  return BinaryMask(prob.height(), prob.width(), std::move(out));
}

CalibrationResult dilation_calibrate(std::span<const ProbMap> probs,
                                     std::span<const BinaryMask> masks, double alpha,
                                     const DilationConfig& cfg) {
  require_alpha(alpha);
  require_pairs(probs.size(), masks.size());
  const std::size_t n = probs.size();
  const double alpha_star = inflated_target(alpha, n);
  const std::size_t m_max = cfg.max_dilations;

  // newly_covered[i][m]: foreground pixels of image i first reached after m dilations.
  std::vector<std::vector<std::size_t>> newly(n, std::vector<std::size_t>(m_max + 1, 0));
  std::vector<std::size_t> positives(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    require_same_shape(probs[i].height(), probs[i].width(), masks[i].height(), masks[i].width(),
                       "calibration pair");
    const auto steps = dilation_steps(base_prediction(probs[i], cfg.base_threshold), cfg.element);
    for (std::size_t p = 0; p < steps.size(); ++p) {
      if (!masks[i][p]) continue;
      ++positives[i];
      if (steps[p] != kUnreachable && steps[p] <= m_max) ++newly[i][steps[p]];
    }
  }

  std::vector<std::size_t> covered(n, 0);
  std::vector<double> losses(n);
  std::vector<RiskPoint> curve;
  std::optional<std::size_t> m_hat;
  for (std::size_t m = 0; m <= m_max; ++m) {
    for (std::size_t i = 0; i < n; ++i) {
      covered[i] += newly[i][m];
      losses[i] = fnr_from_counts(covered[i], positives[i]);
    }
    const double risk = mean_loss(losses);
    curve.push_back({static_cast<double>(m), risk});
    if (!m_hat && risk <= alpha_star) m_hat = m;
  }
  if (!m_hat) {
    std::ostringstream msg;
    msg << "risk " << curve.back().risk << " after " << m_max << " dilations exceeds alpha* = "
        << alpha_star;
    throw Error(ErrorKind::Unsatisfiable, msg.str());
  }

  CalibrationResult r;
  r.lambda_hat = static_cast<double>(*m_hat);
  r.alpha = alpha;
  r.alpha_star = alpha_star;
  r.n = n;
  r.curve = RiskCurve(std::move(curve));
  r.method = Method::Dilation;
  r.config_hash = config_hash(PipelineConfig{Method::Dilation, {}, cfg});
  return r;
}

BinaryMask dilation_infer(const ProbMap& prob, std::size_t dilations, const DilationConfig& cfg) {
  return dilate(base_prediction(prob, cfg.base_threshold), dilations, cfg.element);
}

CalibrationResult calibrate(std::span<const Sample> samples, const PipelineConfig& cfg,
                            double alpha) {
  switch (cfg.method) {
    case Method::Rwcp:
      return rwcp_calibrate(samples, cfg.diffusion, alpha);
    case Method::StandardCrc:
    case Method::Dilation: {
      auto masks = collect_masks(samples);
      std::vector<ProbMap> probs;
      probs.reserve(samples.size());
      for (const auto& s : samples) probs.push_back(s.prob);
      return cfg.method == Method::StandardCrc
                 ? standard_crc_calibrate(probs, masks, alpha)
                 : dilation_calibrate(probs, masks, alpha, cfg.dilation);
    }
  }
  throw Error(ErrorKind::InvalidArgument, "unknown method");
}

BinaryMask infer(const Sample& sample, const PipelineConfig& cfg, double lambda_hat) {
  switch (cfg.method) {
    case Method::Rwcp:
      return rwcp_infer(sample.prob, sample.features, cfg.diffusion, lambda_hat);
    case Method::StandardCrc:
      return standard_crc_infer(sample.prob, lambda_hat);
    case Method::Dilation:
      return dilation_infer(sample.prob, static_cast<std::size_t>(lambda_hat), cfg.dilation);
  }
  throw Error(ErrorKind::InvalidArgument, "unknown method");
}

}  // namespace rwcp
