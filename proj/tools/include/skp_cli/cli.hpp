#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "skp/io.hpp"
#include "skp/obsmodel.hpp"

namespace skp::cli {

enum ExitCode : int { kSuccess = 0, kInputError = 2, kNumericalError = 3 };

/// Runs the command line (args excludes the program name) and returns the process exit code.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

struct FitArgs {
  std::string obs_path;
  std::string model_path;
  io::FitMode mode = io::FitMode::global;
  int k = 2;
  std::string out_path;
  std::string summary_path;  // empty: summary goes to the output stream
  int workers = 1;
};

struct GridArgs {
  std::string predictor_path;
  std::string grid;
  std::string out_path;
  int workers = 1;
};

struct InferArgs {
  std::string obs_path;
  std::string model_path;
  io::FitMode mode = io::FitMode::global;
  int k = 2;
  std::optional<std::pair<double, double>> eta_bounds;
  std::string out_path;
  int workers = 1;
};

struct ExampleAArgs {
  double range = 1.0;
  std::vector<double> values{1.0, 0.0, 2.0};
  std::string out_path;
  std::string kernels_path;
  std::size_t nodes = 2001;
};

struct SynthArgs {
  std::size_t m = 1;
  std::string bounds = "0,1;0,1";
  std::uint64_t seed = 1;
  std::string out_path;
};

void cmd_fit(const FitArgs& args, std::ostream& out);
void cmd_grid(const GridArgs& args);
void cmd_infer(const InferArgs& args, std::ostream& out);
void cmd_example_a(const ExampleAArgs& args, std::ostream& out);
void cmd_synth(const SynthArgs& args);

/// Observation set of the 1D three-operator demonstration: exact point at 0, exact derivative at
/// -5 and the exact integral over [5, 6].
ObservationSet example_a_observations(double d1, double d2, double d3);

/// Seeded synthetic exact point observations with a smooth trend plus short-scale variation.
ObservationSet synthesize(std::size_t m, const std::vector<std::pair<double, double>>& bounds, std::uint64_t seed);

}  // namespace skp::cli
