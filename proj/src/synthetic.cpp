#include "rwcp/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <numbers>
#include <random>

#include "rwcp/error.hpp"

namespace rwcp {

void SceneSpec::validate() const {
  auto fail = [](const char* what) { throw Error(ErrorKind::InvalidArgument, what); };
  if (height == 0 || width == 0) fail("scene grid must be at least 1x1");
  if (blobs_min == 0 || blobs_min > blobs_max) fail("blob count range must be nonempty and >= 1");
  if (!(radius_min > 0.0) || radius_min > radius_max) fail("blob radius range must be nonempty");
  if (!(sharpness > 0.0)) fail("sharpness must be positive");
  if (score_noise < 0.0 || center_jitter < 0.0 || radius_jitter < 0.0) fail("noise levels must be >= 0");
  if (spurious_blob_prob < 0.0 || spurious_blob_prob > 1.0) fail("spurious_blob_prob must lie in [0, 1]");
  if (label_noise < 0.0 || label_noise > 1.0) fail("label_noise must lie in [0, 1]");
  if (feature_height == 0 || feature_width == 0 || feature_dim == 0) fail("feature grid must be nonempty");
  if (feature_noise < 0.0 || position_weight < 0.0) fail("feature noise levels must be >= 0");
}

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) {
  return splitmix64(splitmix64(seed ^ splitmix64(stream)) + index);
}

constexpr std::uint64_t kSceneStream = 1;
constexpr std::uint64_t kEncoderStream = 2;
constexpr std::uint64_t kSharpStream = 3;

struct Disc {
  double row;
  double col;
  double radius;
};

double signed_distance(const std::vector<Disc>& discs, double row, double col) {
  double sd = -std::numeric_limits<double>::infinity();
  for (const auto& d : discs) sd = std::max(sd, d.radius - std::hypot(row - d.row, col - d.col));
  return sd;
}

// The "encoder": fixed per spec.seed, shared by every scene.
struct Encoder {
  std::vector<double> proto_fg, proto_bg;
  std::vector<double> freq_row, freq_col, phase;

  explicit Encoder(const SceneSpec& spec) {
    std::mt19937_64 rng(derive_seed(spec.seed, kEncoderStream, 0));
    std::normal_distribution<double> normal;
    std::uniform_real_distribution<double> unit;
    const std::size_t d = spec.feature_dim;
    auto unit_vector = [&] {
      std::vector<double> v(d);
      double sq = 0.0;
      for (auto& x : v) {
        x = normal(rng);
        sq += x * x;
      }
      for (auto& x : v) x /= std::sqrt(sq);
      return v;
    };
    proto_fg = unit_vector();
    proto_bg = unit_vector();
    freq_row.resize(d);
    freq_col.resize(d);
    phase.resize(d);
    for (std::size_t j = 0; j < d; ++j) {
      const double angle = 2.0 * std::numbers::pi * unit(rng);
      freq_row[j] = spec.position_scale * std::cos(angle);
      freq_col[j] = spec.position_scale * std::sin(angle);
      phase[j] = 2.0 * std::numbers::pi * unit(rng);
    }
  }
};

struct Layout {
  std::vector<Disc> truth;
  std::vector<Disc> predicted;
};

Layout draw_layout(const SceneSpec& spec, std::mt19937_64& rng) {
  std::uniform_int_distribution<std::size_t> count(spec.blobs_min, spec.blobs_max);
  std::uniform_real_distribution<double> radius(spec.radius_min, spec.radius_max);
  std::uniform_real_distribution<double> row(0.15 * static_cast<double>(spec.height),
                                             0.85 * static_cast<double>(spec.height));
  std::uniform_real_distribution<double> col(0.15 * static_cast<double>(spec.width),
                                             0.85 * static_cast<double>(spec.width));
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> unit;

  Layout l;
  const std::size_t n = count(rng);
  for (std::size_t b = 0; b < n; ++b) l.truth.push_back({row(rng), col(rng), radius(rng)});
  for (const auto& d : l.truth) {
    const double r = std::max(0.5, d.radius * (1.0 + spec.radius_jitter * normal(rng)));
    l.predicted.push_back({d.row + spec.center_jitter * normal(rng),
                           d.col + spec.center_jitter * normal(rng), r});
  }
  if (unit(rng) < spec.spurious_blob_prob) {
    std::uniform_real_distribution<double> small(0.5 * spec.radius_min, spec.radius_min);
    l.predicted.push_back({row(rng), col(rng), small(rng)});
  }
  return l;
}

BinaryMask truth_mask(const SceneSpec& spec, const Layout& l) {
  std::vector<std::uint8_t> v(spec.height * spec.width);
  for (std::size_t r = 0; r < spec.height; ++r) {
    for (std::size_t c = 0; c < spec.width; ++c) {
      v[r * spec.width + c] =
          signed_distance(l.truth, static_cast<double>(r), static_cast<double>(c)) >= 0.0 ? 1 : 0;
    }
  }
  return BinaryMask(spec.height, spec.width, std::move(v));
}

std::vector<double> model_scores(const SceneSpec& spec, const Layout& l, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> unit;
  std::vector<double> s(spec.height * spec.width);
  for (std::size_t r = 0; r < spec.height; ++r) {
    for (std::size_t c = 0; c < spec.width; ++c) {
      const double sd = signed_distance(l.predicted, static_cast<double>(r), static_cast<double>(c));
      const double noise = spec.score_noise * normal(rng);
      double v;
      if (std::isinf(spec.sharpness)) {
        v = sd >= 0.0 ? 1.0 : 0.0;
      } else {
        v = 1.0 / (1.0 + std::exp(-(spec.sharpness * sd + noise)));
      }
      if (spec.label_noise > 0.0 && unit(rng) < spec.label_noise) v = 1.0 - v;
      s[r * spec.width + c] = v;
    }
  }
  return s;
}

FeatureMap features_for(const SceneSpec& spec, const BinaryMask& truth, std::mt19937_64& rng) {
  const Encoder enc(spec);
  std::normal_distribution<double> normal;
  const std::size_t d = spec.feature_dim;
  const double noise_scale = spec.feature_noise / std::sqrt(static_cast<double>(d));
  const double pos_scale = spec.position_weight * std::sqrt(2.0 / static_cast<double>(d));
  std::vector<float> out(spec.feature_height * spec.feature_width * d);
  for (std::size_t fr = 0; fr < spec.feature_height; ++fr) {
    // Region label from the image pixel under the cell center.
    const auto r = std::min(spec.height - 1, static_cast<std::size_t>(
        (static_cast<double>(fr) + 0.5) * static_cast<double>(spec.height) /
        static_cast<double>(spec.feature_height)));
    for (std::size_t fc = 0; fc < spec.feature_width; ++fc) {
      const auto c = std::min(spec.width - 1, static_cast<std::size_t>(
          (static_cast<double>(fc) + 0.5) * static_cast<double>(spec.width) /
          static_cast<double>(spec.feature_width)));
      const auto& proto = truth(r, c) ? enc.proto_fg : enc.proto_bg;
      float* z = out.data() + (fr * spec.feature_width + fc) * d;
      double sq = 0.0;
      for (std::size_t j = 0; j < d; ++j) {
        const double pos = std::cos(enc.freq_row[j] * static_cast<double>(fr) +
                                    enc.freq_col[j] * static_cast<double>(fc) + enc.phase[j]);
        z[j] = static_cast<float>(proto[j] + pos_scale * pos + noise_scale * normal(rng));
        sq += static_cast<double>(z[j]) * z[j];
      }
      if (sq == 0.0) z[0] = 1e-6f;
    }
  }
  return FeatureMap(spec.feature_height, spec.feature_width, d, std::move(out));
}

}  // namespace

Scene gen_scene(const SceneSpec& spec, std::uint64_t index) {
  spec.validate();
  std::mt19937_64 rng(derive_seed(spec.seed, kSceneStream, index));
  const Layout layout = draw_layout(spec, rng);
  BinaryMask mask = truth_mask(spec, layout);
  auto scores = model_scores(spec, layout, rng);
  FeatureMap features = features_for(spec, mask, rng);
  return Scene{ProbMap(spec.height, spec.width, std::move(scores)), std::move(features),
               std::move(mask)};
}

Scene gen_sharp_case(const SceneSpec& spec, std::uint64_t index) {
  Scene base = gen_scene(spec, index);
  std::mt19937_64 rng(derive_seed(spec.seed, kSharpStream, index));
  std::uniform_real_distribution<double> unit;
  std::vector<double> s(base.prob.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    // Saturated margin: most mass sits right at 0 or 1.
    const double u = std::pow(unit(rng), 6.0);
    s[i] = base.prob[i] >= 0.5 ? 1.0 - 0.02 * u : 0.02 * u;
  }
  return Scene{ProbMap(base.prob.height(), base.prob.width(), std::move(s)),
               std::move(base.features), std::move(base.mask)};
}

Sample to_sample(Scene scene, std::string id) {
  return Sample{std::move(id), std::move(scene.prob), std::move(scene.features),
                std::move(scene.mask)};
}

SimulationSummary coverage_simulation(const SceneSpec& spec, const PipelineConfig& cfg,
                                      double alpha, std::size_t n_cal, std::size_t n_test,
                                      std::size_t trials) {
  spec.validate();
  if (n_test == 0 || trials == 0) {
    throw Error(ErrorKind::InvalidArgument, "n_test and trials must be positive");
  }
  inflated_target(alpha, n_cal);  // TargetInfeasible before any work

  SimulationSummary out;
  out.method = cfg.method;
  out.alpha = alpha;
  out.n_cal = n_cal;
  out.n_test = n_test;
  out.trial_fnr.assign(trials, 0.0);
  out.trial_lambda.assign(trials, 0.0);
  out.lower_bound = alpha - 2.0 / (static_cast<double>(n_cal) + 1.0);

  const std::size_t per_trial = n_cal + n_test;
  std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t t = 0; t < static_cast<std::ptrdiff_t>(trials); ++t) {
    try {
      const auto trial = static_cast<std::size_t>(t);
      std::vector<Sample> cal;
      cal.reserve(n_cal);
      for (std::size_t i = 0; i < n_cal; ++i) {
        cal.push_back(to_sample(gen_scene(spec, trial * per_trial + i), std::to_string(i)));
      }
      const CalibrationResult r = calibrate(cal, cfg, alpha);
      double sum = 0.0;
      for (std::size_t i = 0; i < n_test; ++i) {
        const Sample s = to_sample(gen_scene(spec, trial * per_trial + n_cal + i), {});
        sum += fnr_loss(*s.mask, infer(s, cfg, r.lambda_hat));
      }
      out.trial_fnr[trial] = sum / static_cast<double>(n_test);
      out.trial_lambda[trial] = r.lambda_hat;
    } catch (...) {
#pragma omp critical
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);

  double total = 0.0;
  for (double f : out.trial_fnr) total += f;
  out.mean_fnr = total / static_cast<double>(trials);
  return out;
}

}  // namespace rwcp
