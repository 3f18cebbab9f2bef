#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "rwcp/conformal.hpp"
#include "rwcp/grid.hpp"

namespace rwcp {

// Parameters of an exchangeable population of synthetic segmentation cases.
// Ground truth is a union of discs; the "model" sees jittered discs (plus an
// occasional spurious one), blurred through a logistic link, with per-pixel
// logit noise and isolated label flips. Features are per-region prototypes
// plus a smooth positional code plus isotropic noise.
struct SceneSpec {
  std::size_t height = 64;
  std::size_t width = 64;
  std::size_t blobs_min = 1;
  std::size_t blobs_max = 3;
  double radius_min = 6.0;
  double radius_max = 14.0;
  double sharpness = 0.8;        // logit units per pixel of signed distance; may be infinity
  double score_noise = 0.8;      // std of additive logit noise
  double center_jitter = 1.5;    // std (pixels) of the predicted disc center offset
  double radius_jitter = 0.1;    // relative std of the predicted disc radius
  double spurious_blob_prob = 0.2;
  double label_noise = 0.02;     // probability that a predicted score is flipped to 1 - s
  std::size_t feature_height = 16;
  std::size_t feature_width = 16;
  std::size_t feature_dim = 16;
  double feature_noise = 0.3;    // expected norm of the feature noise vector
  double position_weight = 0.6;  // norm of the positional code relative to the prototypes
  double position_scale = 0.35;  // spatial frequency of the positional code, radians per cell
  std::uint64_t seed = 0;

  void validate() const;
};

struct Scene {
  ProbMap prob;
  FeatureMap features;
  BinaryMask mask;
};

// Deterministic in (spec, index).
Scene gen_scene(const SceneSpec& spec, std::uint64_t index);

// Overconfident variant: every score lies in [0, 0.02] or [0.98, 1].
Scene gen_sharp_case(const SceneSpec& spec, std::uint64_t index = 0);

Sample to_sample(Scene scene, std::string id);

struct SimulationSummary {
  Method method;
  double alpha = 0.0;
  std::size_t n_cal = 0;
  std::size_t n_test = 0;
  std::vector<double> trial_fnr;     // mean test FNR per trial
  std::vector<double> trial_lambda;  // calibrated lambda (or dilation count) per trial
  double mean_fnr = 0.0;
  double lower_bound = 0.0;  // alpha - 2 / (n_cal + 1); diagnostic only
};

// Each trial draws n_cal + n_test fresh scenes, calibrates on the first n_cal
// and records the mean FNR on the rest. Trials run concurrently; scene
// seeds depend only on (spec.seed, trial, position).
SimulationSummary coverage_simulation(const SceneSpec& spec, const PipelineConfig& cfg,
                                      double alpha, std::size_t n_cal, std::size_t n_test,
                                      std::size_t trials);

}  // namespace rwcp
