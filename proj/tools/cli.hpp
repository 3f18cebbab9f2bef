#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "rwcp/conformal.hpp"
#include "rwcp/metrics.hpp"
#include "rwcp/synthetic.hpp"

namespace rwcp::cli {

// Stable process exit codes.
enum ExitCode : int {
  kOk = 0,
  kFailure = 1,
  kConfigError = 2,
  kInfeasible = 3,
  kIoError = 4,
};

struct RunConfig {
  std::string command;

  Method method = Method::Rwcp;
  bool method_given = false;
  double alpha = 0.1;
  GraphConfig graph;
  std::size_t n_step = 10;
  DilationConfig dilation;

  std::string manifest;
  std::string out = ".";
  std::string calibration;
  std::string predictions;

  MetricOptions metrics;

  std::uint64_t seed = 0;
  bool json = false;
  bool strict = false;
  int workers = 0;
  bool png = false;
  bool dump_steps = false;
  bool dump_graph = false;

  // simulate / stability
  std::vector<Method> methods;  // simulate: empty means all three
  std::size_t n_cal = 20;
  std::size_t n_test = 200;
  std::size_t trials = 100;
  SceneSpec scene;
  std::string profile = "sharp";
  std::uint64_t index = 0;
  std::string id;
  double step = 0.005;

  PipelineConfig pipeline() const;
  // Throws rwcp::Error(InvalidArgument) naming the first bad field.
  void validate() const;
};

// Entry point shared by the executable and the tests. `args` excludes argv[0].
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

int cmd_calibrate(const RunConfig& cfg, std::ostream& out, std::ostream& err);
int cmd_infer(const RunConfig& cfg, std::ostream& out, std::ostream& err);
int cmd_evaluate(const RunConfig& cfg, std::ostream& out, std::ostream& err);
int cmd_simulate(const RunConfig& cfg, std::ostream& out, std::ostream& err);
int cmd_stability(const RunConfig& cfg, std::ostream& out, std::ostream& err);

// Overlay for visual inspection: probability map in gray, prediction-set
// contour in red, ground-truth contour in blue.
void write_overlay_png(const ProbMap& prob, const BinaryMask& set,
                       const std::optional<BinaryMask>& truth, const std::string& path);

}  // namespace rwcp::cli
