#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rwcp/diffusion.hpp"
#include "rwcp/grid.hpp"
#include "rwcp/manifest.hpp"
#include "rwcp/morphology.hpp"

namespace rwcp {

enum class Method { Rwcp, StandardCrc, Dilation };

std::string to_string(Method m);
// Accepts "rwcp", "crc", "standard_crc", "dilation". Throws InvalidArgument.
Method parse_method(const std::string& name);

struct DilationConfig {
  std::size_t max_dilations = 200;
  Connectivity element = Connectivity::Eight;
  double base_threshold = 0.5;
};

// Everything that changes the score function or the set family; calibration
// and inference must agree on it for the risk guarantee to carry over.
struct PipelineConfig {
  Method method = Method::Rwcp;
  DiffusionConfig diffusion;
  DilationConfig dilation;
};

// Hex FNV-1a digest of the fields of `cfg` that affect `cfg.method`.
std::string config_hash(const PipelineConfig& cfg);

struct RiskPoint {
  double lambda;
  double risk;
  friend bool operator==(const RiskPoint&, const RiskPoint&) = default;
};

// Empirical risk as a step function of lambda; lambdas strictly increase and
// risk never increases.
class RiskCurve {
 public:
  RiskCurve() = default;
  // Throws InvalidArgument if the ordering invariants do not hold.
  explicit RiskCurve(std::vector<RiskPoint> points);

  std::span<const RiskPoint> points() const noexcept { return points_; }
  std::size_t size() const noexcept { return points_.size(); }
  // Risk at the largest curve lambda <= `lambda` (the curve is right-continuous).
  double risk_at(double lambda) const;

  friend bool operator==(const RiskCurve&, const RiskCurve&) = default;

 private:
  std::vector<RiskPoint> points_;
};

// For Method::Dilation lambda_hat and the curve lambdas are dilation counts.
struct CalibrationResult {
  double lambda_hat = 0.0;
  double alpha = 0.0;
  double alpha_star = 0.0;
  std::size_t n = 0;
  RiskCurve curve;
  Method method = Method::Rwcp;
  std::string config_hash;

  double risk_at_lambda_hat() const { return curve.risk_at(lambda_hat); }
  friend bool operator==(const CalibrationResult&, const CalibrationResult&) = default;
};

std::string calibration_to_json(const CalibrationResult& result);
CalibrationResult calibration_from_json(const std::string& text);
void save_calibration(const CalibrationResult& result, const std::filesystem::path& path);
// Throws IoFailure when the file is missing, MalformedFile when unparsable.
CalibrationResult load_calibration(const std::filesystem::path& path);

// 1 - |Y n C| / |Y|, and 0 when Y is empty.
double fnr_loss(const BinaryMask& y, const BinaryMask& c);

// ((n + 1) / n) alpha - 1 / n. Throws TargetInfeasible when negative.
double inflated_target(double alpha, std::size_t n);

// Smallest n with n >= B / alpha - 1.
std::size_t min_calibration_size(double alpha, double loss_bound = 1.0);

// {p : scores_p >= 1 - lambda}
BinaryMask predict_set(const ProbMap& scores, double lambda);

// Smallest lambda in [0, 1] for which a pixel with this score enters predict_set.
double inclusion_lambda(double score) noexcept;

// Mean FNR of predict_set over the pairs; independent of pair order.
double empirical_risk(std::span<const ProbMap> scores, std::span<const BinaryMask> masks,
                      double lambda);

// Exact infimum of {lambda : R_n(lambda) <= alpha*} by sweeping every lambda
// at which some foreground pixel enters its set.
CalibrationResult calibrate_threshold(std::span<const ProbMap> scores,
                                      std::span<const BinaryMask> masks, double alpha);

// In-memory calibration/test sample.
struct Sample {
  std::string id;
  ProbMap prob;
  FeatureMap features;
  std::optional<BinaryMask> mask;
};

std::vector<Sample> load_samples(const DatasetManifest& manifest);

// Score map used by `cfg.method`: diffused for Rwcp, raw otherwise.
ProbMap conformal_scores(const Sample& sample, const PipelineConfig& cfg);

CalibrationResult rwcp_calibrate(std::span<const Sample> samples, const DiffusionConfig& cfg,
                                 double alpha);
CalibrationResult rwcp_calibrate(const DatasetManifest& manifest, const DiffusionConfig& cfg,
                                 double alpha);
BinaryMask rwcp_infer(const ProbMap& prob, const FeatureMap& features, const DiffusionConfig& cfg,
                      double lambda_hat);

CalibrationResult standard_crc_calibrate(std::span<const ProbMap> probs,
                                         std::span<const BinaryMask> masks, double alpha);
BinaryMask standard_crc_infer(const ProbMap& prob, double lambda_hat);

// {p : prob_p >= threshold}
BinaryMask base_prediction(const ProbMap& prob, double threshold = 0.5);

// Smallest dilation count m in [0, max_dilations] with R_n(m) <= alpha*.
// Throws Unsatisfiable when no count qualifies.
CalibrationResult dilation_calibrate(std::span<const ProbMap> probs,
                                     std::span<const BinaryMask> masks, double alpha,
                                     const DilationConfig& cfg = {});
BinaryMask dilation_infer(const ProbMap& prob, std::size_t dilations, const DilationConfig& cfg = {});

// Dispatches on cfg.method.
CalibrationResult calibrate(std::span<const Sample> samples, const PipelineConfig& cfg,
                            double alpha);
BinaryMask infer(const Sample& sample, const PipelineConfig& cfg, double lambda_hat);

}  // namespace rwcp
